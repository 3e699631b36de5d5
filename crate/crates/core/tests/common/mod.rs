//! Shared fixtures: the curated derivation corpus, the truth-lemma
//! battery, and scenario builders for the claim suites.

// each test binary compiles this module separately and uses a subset
#![allow(dead_code)]

use enlogic::catalog::{build_catalog, CatalogConfig, CountermodelCatalog};
use enlogic::coding::Code;
use enlogic::prover::{derivation, Derivation, Justification::*};
use enlogic::sandbox::Scenario;
use enlogic::toy::ToyFormula;
use enlogic::{Formula, Logic};
use std::collections::BTreeMap;

pub enum CorpusItem {
    /// A theorem certified by a machine-checked derivation.
    Theorem(Derivation),
    /// A non-theorem to be certified by a verified countermodel.
    NonTheorem(Logic, Formula),
}

fn thm(logic: Logic, steps: &[(&str, enlogic::prover::Justification)]) -> CorpusItem {
    CorpusItem::Theorem(derivation(logic, steps))
}

fn non(logic: Logic, f: &str) -> CorpusItem {
    CorpusItem::NonTheorem(logic, f.parse().expect("corpus formulas parse"))
}

/// The curated corpus: 15 derivations and 12 refuted formulas.
pub fn corpus() -> Vec<CorpusItem> {
    vec![
        // EN ⊢ []true
        thm(Logic::EN, &[("true", Taut), ("[]true", Nec(0))]),
        // EN ⊢ [](p & q) <-> [](q & p), by RE on commutativity
        thm(
            Logic::EN,
            &[
                ("(p & q -> q & p) & (q & p -> p & q)", Taut),
                ("([](p & q) -> [](q & p)) & ([](q & p) -> [](p & q))", Re(0)),
            ],
        ),
        // ECN ⊢ the C axiom
        thm(Logic::ECN, &[("[]p & []q -> [](p & q)", AxC)]),
        // ENP ⊢ ~[]false
        thm(Logic::ENP, &[("~[]false", AxP)]),
        // END ⊢ ~([]p & []~p)
        thm(Logic::END, &[("~([]p & []~p)", AxD)]),
        // END ⊢ ~[]false, derived through AxD and RE
        thm(
            Logic::END,
            &[
                ("true", Taut),
                ("[]true", Nec(0)),
                ("(false -> ~true) & (~true -> false)", Taut),
                ("([]false -> []~true) & ([]~true -> []false)", Re(2)),
                ("~([]true & []~true)", AxD),
                (
                    "[]true -> (([]false -> []~true) & ([]~true -> []false) -> (~([]true & []~true) -> ~[]false))",
                    Taut,
                ),
                (
                    "([]false -> []~true) & ([]~true -> []false) -> (~([]true & []~true) -> ~[]false)",
                    Mp(1, 5),
                ),
                ("~([]true & []~true) -> ~[]false", Mp(3, 6)),
                ("~[]false", Mp(4, 7)),
            ],
        ),
        // ECNP ⊢ ~[]false
        thm(Logic::ECNP, &[("~[]false", AxP)]),
        // ECNP ⊢ ~([]p & []~p), derived through C, P and RE
        thm(
            Logic::ECNP,
            &[
                ("(p & ~p -> false) & (false -> p & ~p)", Taut),
                ("([](p & ~p) -> []false) & ([]false -> [](p & ~p))", Re(0)),
                ("[]p & []~p -> [](p & ~p)", AxC),
                ("~[]false", AxP),
                (
                    "([](p & ~p) -> []false) & ([]false -> [](p & ~p)) -> (([]p & []~p -> [](p & ~p)) -> (~[]false -> ~([]p & []~p)))",
                    Taut,
                ),
                ("([]p & []~p -> [](p & ~p)) -> (~[]false -> ~([]p & []~p))", Mp(1, 4)),
                ("~[]false -> ~([]p & []~p)", Mp(2, 5)),
                ("~([]p & []~p)", Mp(3, 6)),
            ],
        ),
        // ECN ⊢ []p & []q -> [](q & p)
        thm(
            Logic::ECN,
            &[
                ("[]q & []p -> [](q & p)", AxC),
                ("([]q & []p -> [](q & p)) -> ([]p & []q -> [](q & p))", Taut),
                ("[]p & []q -> [](q & p)", Mp(0, 1)),
            ],
        ),
        // EN ⊢ []~~p <-> []p
        thm(
            Logic::EN,
            &[
                ("(~~p -> p) & (p -> ~~p)", Taut),
                ("([]~~p -> []p) & ([]p -> []~~p)", Re(0)),
            ],
        ),
        // ECN ⊢ C instance on compound formulas
        thm(Logic::ECN, &[("[](p -> q) & []p -> []((p -> q) & p)", AxC)]),
        // ENP ⊢ []true & ~[]false
        thm(
            Logic::ENP,
            &[
                ("true", Taut),
                ("[]true", Nec(0)),
                ("~[]false", AxP),
                ("[]true -> (~[]false -> []true & ~[]false)", Taut),
                ("~[]false -> []true & ~[]false", Mp(1, 3)),
                ("[]true & ~[]false", Mp(2, 4)),
            ],
        ),
        // EN ⊢ ~~[]true
        thm(
            Logic::EN,
            &[
                ("true", Taut),
                ("[]true", Nec(0)),
                ("[]true -> ~~[]true", Taut),
                ("~~[]true", Mp(1, 2)),
            ],
        ),
        // END ⊢ ~([]false & []~false)
        thm(Logic::END, &[("~([]false & []~false)", AxD)]),
        // EN ⊢ associativity under the box, by RE
        thm(
            Logic::EN,
            &[
                (
                    "((p & q) & r -> p & (q & r)) & (p & (q & r) -> (p & q) & r)",
                    Taut,
                ),
                (
                    "([]((p & q) & r) -> [](p & (q & r))) & ([](p & (q & r)) -> []((p & q) & r))",
                    Re(0),
                ),
            ],
        ),
        // refuted formulas
        non(Logic::EN, "[]p & []q -> [](p & q)"),
        non(Logic::EN, "[](p & q) -> []p"),
        non(Logic::ENP, "~([]p & []~p)"),
        non(Logic::ECN, "~[]false"),
        non(Logic::EN, "~[]false"),
        non(Logic::EN, "[]false"),
        non(Logic::ECN, "[]p -> [][]p"),
        non(Logic::END, "[]p & []q -> [](p & q)"),
        non(Logic::ECNP, "[](p | q) -> []p | []q"),
        non(Logic::EN, "p -> []p"),
        non(Logic::ENP, "[]p -> p"),
        non(Logic::ECNP, "[]p -> p"),
    ]
}

/// Truth-lemma battery: modal depth <= 2 over the atoms a, b (which the
/// early catalog entries valuate).
pub fn battery() -> Vec<Formula> {
    [
        "a",
        "b",
        "~a",
        "a & b",
        "a | b",
        "a -> b",
        "[]a",
        "~[]a",
        "[]~a",
        "[](a & b)",
        "[]a & []b",
        "[]false",
        "[](a | b)",
        "[](a & []a)",
    ]
    .iter()
    .map(|s| s.parse().expect("battery formulas parse"))
    .collect()
}

/// A horizon that dwarfs every desk-scale code.
pub fn huge_horizon() -> Code {
    "1".repeat(240).parse().expect("huge horizon parses")
}

/// Empty scenario (just the `~falsum` base axiom) with a huge horizon.
pub fn blank_scenario() -> Scenario {
    Scenario::new(vec![], BTreeMap::new(), BTreeMap::new(), huge_horizon())
        .expect("blank scenario validates")
}

/// Claim-suite scenario: letter axioms `x`, `y`, the biconditional
/// `x <-> y` (so E has a nontrivial edge), and a trigger refuting
/// `lam(1)` placed past every code in play.
pub fn claim_scenario() -> Scenario {
    let toy = |s: &str| -> ToyFormula { s.parse().unwrap() };
    let mut inject = BTreeMap::new();
    inject.insert(Code::from_u64(10), toy("y"));
    inject.insert(Code::from_u64(11), toy("(x -> y) & (y -> x)"));
    inject.insert(Code::from_u64(2_000_000_000_000_000), toy("~lam(1)"));
    Scenario::new(
        vec![toy("x")],
        BTreeMap::new(),
        inject,
        Code::from_u64(10_000_000_000_000_000),
    )
    .expect("claim scenario validates")
}

/// Catalog sized for the claim suite (3 entries, per the acceptance
/// criterion).
pub fn claim_catalog(logic: Logic) -> CountermodelCatalog {
    build_catalog(logic, 3, &CatalogConfig::default()).expect("3-entry catalog builds")
}

/// Catalog large enough that the atoms a and b both receive nonempty
/// valuations somewhere (the entries refuting ~a and ~b).
pub fn rich_catalog(logic: Logic) -> CountermodelCatalog {
    build_catalog(logic, 18, &CatalogConfig::default()).expect("18-entry catalog builds")
}

/// Stage-by-stage recomputation of h straight from the recursion, for
/// scenarios whose horizon fits in a machine word. Returns the values
/// h(0..=horizon) and a per-stage flag recording whether J_s is nonempty.
pub fn h_oracle(sc: &Scenario) -> (Vec<u64>, Vec<bool>) {
    use enlogic::sandbox::taut_consequence;
    use std::collections::BTreeSet;

    let horizon = sc.horizon().to_u64().expect("oracle scenarios are small");
    let events: Vec<(u64, ToyFormula)> = sc
        .events()
        .into_iter()
        .map(|e| {
            let entry = e.entry().to_u64().unwrap_or(u64::MAX);
            (entry, e.formula)
        })
        .collect();
    let mut values = vec![0u64; horizon as usize + 2];
    let mut j_nonempty = vec![false; horizon as usize + 1];
    let mut prev_p: Option<BTreeSet<ToyFormula>> = None;
    let mut current_j: BTreeSet<u64> = BTreeSet::new();
    for s in 0..=horizon {
        let p: BTreeSet<ToyFormula> = events
            .iter()
            .filter(|(entry, _)| *entry <= s)
            .map(|(_, f)| f.clone())
            .collect();
        if prev_p.as_ref() != Some(&p) {
            // J only changes when P grows
            current_j.clear();
            if taut_consequence(&p, &ToyFormula::Bot) {
                current_j.insert(1);
            } else {
                let mut occurring = BTreeSet::new();
                for f in &p {
                    f.lam_indices(&mut occurring);
                }
                for j in occurring {
                    if taut_consequence(&p, &ToyFormula::Lam(j).not()) {
                        current_j.insert(j);
                    }
                }
            }
            prev_p = Some(p);
        }
        j_nonempty[s as usize] = !current_j.is_empty();
        values[s as usize + 1] = if values[s as usize] == 0 && !current_j.is_empty() {
            *current_j.iter().next().unwrap()
        } else {
            values[s as usize]
        };
    }
    values.truncate(horizon as usize + 1);
    (values, j_nonempty)
}

/// Deterministic entry pick for the truth-lemma suite: entry 0 plus the
/// first two entries whose models valuate some atom nonemptily.
pub fn truth_lemma_entries(cat: &CountermodelCatalog) -> Vec<usize> {
    let mut picks = vec![0usize];
    for e in &cat.entries {
        if picks.len() == 3 {
            break;
        }
        if e.k != 0
            && e.model
                .valued_atoms()
                .any(|a| !e.model.valuation(a).is_empty())
        {
            picks.push(e.k);
        }
    }
    let mut k = 1;
    while picks.len() < 3 {
        if !picks.contains(&k) {
            picks.push(k);
        }
        k += 1;
    }
    picks
}
