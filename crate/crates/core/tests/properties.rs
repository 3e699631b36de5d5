//! Module-level invariants: parser/coding round trips, coding
//! monotonicity, prover soundness and monotonicity over the curated
//! corpus, the equivalence-chain properties, and the sandbox h-function
//! checked stage by stage against an independent oracle.

mod common;

use common::{corpus, h_oracle, CorpusItem};
use enlogic::coding::Code;
use enlogic::oracle::{oracle_validity, OracleVerdict};
use enlogic::prover::{check_derivation, Justification};
use enlogic::sampling::{random_scenario, Rng, ScenarioShape};
use enlogic::sandbox::{self, run_h};
use enlogic::toy::ToyFormula;
use enlogic::{Formula, Logic};
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

fn formula_strategy() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::Bot),
        prop_oneof![Just("p"), Just("q"), Just("r"), Just("s_1")].prop_map(Formula::atom),
    ];
    leaf.prop_recursive(6, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| f.not()),
            inner.clone().prop_map(|f| f.boxed()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.imp(b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_render_round_trip(f in formula_strategy()) {
        let rendered = f.to_string();
        let back: Formula = rendered.parse().expect("canonical rendering reparses");
        prop_assert_eq!(back, f);
    }

    #[test]
    fn code_round_trip_and_subformula_monotonicity(f in formula_strategy()) {
        let code = f.code();
        prop_assert_eq!(Formula::decode(&code), Some(f.clone()));
        for sub in f.subformula_closure() {
            if sub != f {
                prop_assert!(sub.code() < code);
            }
        }
    }
}

#[test]
fn codes_are_injective_on_a_large_sample() {
    let mut rng = Rng::new(0x5eed);
    let mut seen: BTreeMap<Code, Formula> = BTreeMap::new();
    for _ in 0..1000 {
        let f = enlogic::sampling::random_formula(&mut rng, &["p", "q", "r"], 10, 3);
        if let Some(old) = seen.insert(f.code(), f.clone()) {
            assert_eq!(old, f, "two distinct formulas share a code");
        }
    }
    assert!(seen.len() > 300, "sample should hold plenty of distinct formulas");
}

#[test]
fn corpus_derivations_are_accepted_and_sound() {
    for item in corpus() {
        if let CorpusItem::Theorem(d) = item {
            check_derivation(&d).unwrap_or_else(|e| {
                panic!("corpus derivation for {} rejected: {e}", d.logic)
            });
            // soundness: the conclusion is valid in every small frame of
            // the logic, per the independent oracle
            let conclusion = d.conclusion().expect("nonempty derivation");
            match oracle_validity(d.logic, conclusion, 3).expect("oracle bounds respected") {
                OracleVerdict::ValidUpTo { .. } => {}
                OracleVerdict::Countermodel { witness, .. } => panic!(
                    "accepted {} derivation of {conclusion} is falsified at world {witness}",
                    d.logic
                ),
            }
        }
    }
}

fn justification_legal(j: &Justification, logic: Logic) -> bool {
    match j {
        Justification::AxC => logic.has_c(),
        Justification::AxP => logic.has_p(),
        Justification::AxD => logic.has_d(),
        _ => true,
    }
}

#[test]
fn corpus_derivations_are_monotone_along_the_inclusion_table() {
    let mut retagged = 0;
    for item in corpus() {
        if let CorpusItem::Theorem(d) = item {
            for stronger in Logic::ALL {
                if stronger == d.logic || !stronger.extends(d.logic) {
                    continue;
                }
                if d.steps.iter().all(|s| justification_legal(&s.by, stronger)) {
                    let re = d.retagged(stronger);
                    assert_eq!(
                        check_derivation(&re),
                        Ok(()),
                        "derivation of {:?} fails after retagging {} -> {stronger}",
                        d.conclusion(),
                        d.logic
                    );
                    retagged += 1;
                }
            }
        }
    }
    assert!(retagged >= 10, "the table should license plenty of retaggings");
}

#[test]
fn equiv_chain_is_reflexive_and_transitive() {
    let toy = |s: &str| -> ToyFormula { s.parse().unwrap() };
    let bicond = |a: &str, b: &str| ToyFormula::iff(toy(a), toy(b));
    let mut rng = Rng::new(99);
    let letters = ["a", "b", "c", "d", "e", "f"];
    for _ in 0..50 {
        let mut p: BTreeSet<ToyFormula> = BTreeSet::new();
        for _ in 0..rng.below(6) {
            let x = *rng.pick(&letters);
            let y = *rng.pick(&letters);
            p.insert(bicond(x, y));
        }
        for &x in &letters {
            assert!(sandbox::equiv_m(&p, &toy(x), &toy(x)), "reflexivity");
            for &y in &letters {
                for &z in &letters {
                    if sandbox::equiv_m(&p, &toy(x), &toy(y))
                        && sandbox::equiv_m(&p, &toy(y), &toy(z))
                    {
                        assert!(sandbox::equiv_m(&p, &toy(x), &toy(z)), "transitivity");
                    }
                }
            }
        }
    }
}

#[test]
fn h_matches_the_stage_oracle_on_random_scenarios() {
    let mut rng = Rng::new(0xcafe);
    let shapes = [
        ScenarioShape::ConsistentLamFree,
        ScenarioShape::LamRefuting,
        ScenarioShape::Contradictory,
    ];
    for round in 0..30 {
        let shape = shapes[round % 3];
        let sc = random_scenario(&mut rng, shape);
        let trace = run_h(&sc).expect("run_h succeeds");
        let (values, j_nonempty) = h_oracle(&sc);

        // pointwise agreement of the jumped trace with the literal recursion
        for (s, &v) in values.iter().enumerate() {
            assert_eq!(
                trace.value_at(&Code::from_u64(s as u64)),
                v,
                "h({s}) disagrees with the oracle"
            );
        }
        // at most one nonzero value, persisting once set
        let mut nonzero: Option<u64> = None;
        for &v in &values {
            match (nonzero, v) {
                (None, 0) => {}
                (None, x) => nonzero = Some(x),
                (Some(x), y) => assert_eq!(x, y, "h must keep its first nonzero value"),
            }
        }
        // trigger iff some stage has a refuted lam
        assert_eq!(
            trace.trigger.is_some(),
            j_nonempty.iter().take(j_nonempty.len() - 1).any(|&b| b),
            "trigger must fire exactly when some J_s is nonempty before the horizon"
        );
        if shape == ScenarioShape::ConsistentLamFree {
            assert!(trace.trigger.is_none(), "lam-free consistent scenarios never fire");
        }
        if let Some((s, i)) = &trace.trigger {
            let s64 = s.to_u64().expect("small stages") as usize;
            assert_eq!(values[s64], 0);
            assert_eq!(values[s64 + 1], *i);
            assert!(Code::from_u64(*i) <= s.succ(), "h(s+1) = i implies i <= s+1");
        }
    }
}

#[test]
fn catalog_entries_are_never_concluded_by_corpus_derivations() {
    use enlogic::catalog::{build_catalog, CatalogConfig};
    let mut catalogs: BTreeMap<Logic, Vec<Formula>> = BTreeMap::new();
    for l in Logic::ALL {
        let cat = build_catalog(l, 8, &CatalogConfig::default()).unwrap();
        catalogs.insert(l, cat.entries.into_iter().map(|e| e.formula).collect());
    }
    for item in corpus() {
        if let CorpusItem::Theorem(d) = item {
            if check_derivation(&d).is_ok() {
                let concluded = d.conclusion().unwrap();
                assert!(
                    !catalogs[&d.logic].contains(concluded),
                    "{} both derived and refuted {concluded}",
                    d.logic
                );
            }
        }
    }
}
