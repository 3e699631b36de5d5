//! Countermodel search and validity decisions for the five logics.
//!
//! The search runs iterative deepening on the world count. Candidate
//! worlds are world types: propositionally coherent boolean assignments
//! to the subformula closure of the query, with atoms and boxed
//! subformulas free. For a candidate set of types, the truth set of every
//! boxed subformula is read off the assignments, and each world asks
//! [`admissible_neighborhood`] whether a neighborhood family exists that
//! contains the truth sets of its true boxes, avoids those of its false
//! boxes, and satisfies the frame conditions of the logic. Minimal
//! witness families are used to materialize the model: frame-condition
//! violations are preserved by supersets, so minimal families are optimal
//! witnesses.
//!
//! Duplicate world types are permitted up to the bound; collapsing
//! same-type worlds is not obviously sound for all five frame classes.
//! Tuples are scanned smallest world count first, then lexicographically,
//! so results are deterministic.

use crate::formula::{Formula, Logic};
use crate::neighborhood::{Frame, ModelError, NeighborhoodModel, WorldId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub max_worlds: usize,
    /// Upper bound on search nodes (candidate tuples plus per-world
    /// admissibility checks). Exceeding it is an error, distinct from a
    /// no-countermodel verdict.
    pub node_budget: u64,
}

impl SearchConfig {
    pub fn new(max_worlds: usize) -> Self {
        SearchConfig { max_worlds, node_budget: 20_000_000 }
    }
}

/// Bound at which `NoCountermodelUpTo` counts as a completeness claim:
/// 2^(size of the subformula closure). The finite frame property
/// guarantees some finite bound exists; no sharper one is assumed, and
/// every verdict carries the bound it was computed at.
pub fn completeness_bound(f: &Formula) -> usize {
    let n = f.subformula_closure().len();
    1usize.checked_shl(n as u32).unwrap_or(usize::MAX)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    #[serde(rename = "countermodel")]
    Countermodel { witness: WorldId, model: NeighborhoodModel },
    #[serde(rename = "no_countermodel_upto")]
    NoCountermodelUpTo { bound: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchError {
    BudgetExhausted { budget: u64 },
    /// More than 24 free slots (atoms plus boxed subformulas) in the type
    /// space; the query is beyond this searcher.
    TooManySlots(usize),
    BadBound,
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::BudgetExhausted { budget } => {
                write!(f, "search node budget of {budget} exhausted")
            }
            SearchError::TooManySlots(n) => {
                write!(f, "{n} free type slots; at most 24 supported")
            }
            SearchError::BadBound => write!(f, "max_worlds must be at least 1"),
        }
    }
}

impl std::error::Error for SearchError {}

/// Propositionally coherent assignment to a subformula closure. Atoms and
/// boxed subformulas are free; every other entry is computed from its
/// children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldType {
    values: Vec<bool>,
}

impl WorldType {
    /// Builds the type whose free slots (atoms and boxed subformulas, in
    /// closure order) take the bits of `bits`, least significant first.
    pub fn from_primitive_bits(closure: &[Formula], bits: u64) -> WorldType {
        let index: BTreeMap<&Formula, usize> =
            closure.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let mut values = vec![false; closure.len()];
        let mut slot = 0;
        for (i, f) in closure.iter().enumerate() {
            values[i] = match f {
                Formula::Bot => false,
                Formula::Atom(_) | Formula::Box(_) => {
                    let v = bits & (1 << slot) != 0;
                    slot += 1;
                    v
                }
                Formula::Not(x) => !values[index[x.as_ref()]],
                Formula::And(l, r) => values[index[l.as_ref()]] && values[index[r.as_ref()]],
                Formula::Or(l, r) => values[index[l.as_ref()]] || values[index[r.as_ref()]],
                Formula::Imp(l, r) => !values[index[l.as_ref()]] || values[index[r.as_ref()]],
            };
        }
        WorldType { values }
    }

    pub fn value(&self, closure_index: usize) -> bool {
        self.values[closure_index]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Admissibility {
    Exists { family: Vec<BTreeSet<WorldId>> },
    Impossible { reason: AdmissibilityFailure },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdmissibilityFailure {
    /// The same set is demanded in and kept out.
    RequiredAndForbidden(BTreeSet<WorldId>),
    /// `∅` is demanded but the logic forbids it.
    EmptyRequired,
    /// Two required sets are complementary.
    ComplementaryPair(BTreeSet<WorldId>, BTreeSet<WorldId>),
    /// Intersection closure produces a forbidden set.
    ClosureHitsForbidden(BTreeSet<WorldId>),
    /// Intersection closure produces `∅` under a logic that forbids it.
    ClosureHitsEmpty,
}

impl fmt::Display for AdmissibilityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissibilityFailure::RequiredAndForbidden(s) => {
                write!(f, "the set {s:?} is both required and forbidden")
            }
            AdmissibilityFailure::EmptyRequired => write!(f, "the empty set is required"),
            AdmissibilityFailure::ComplementaryPair(a, b) => {
                write!(f, "required sets {a:?} and {b:?} are complementary")
            }
            AdmissibilityFailure::ClosureHitsForbidden(s) => {
                write!(f, "intersection closure reaches the forbidden set {s:?}")
            }
            AdmissibilityFailure::ClosureHitsEmpty => {
                write!(f, "intersection closure reaches the empty set")
            }
        }
    }
}

enum MaskFailure {
    RequiredAndForbidden(u64),
    EmptyRequired,
    ComplementaryPair(u64, u64),
    ClosureHitsForbidden(u64),
    ClosureHitsEmpty,
}

/// Mask-level core. `t` are truth sets of true boxes, `f` of false ones.
/// Returns the minimal witness family on success.
fn admissible_masks(
    logic: Logic,
    full: u64,
    t: &[u64],
    f: &[u64],
) -> Result<Vec<u64>, MaskFailure> {
    let mut base: Vec<u64> = t.to_vec();
    base.push(full);
    base.sort_unstable();
    base.dedup();
    let forbidden: BTreeSet<u64> = f.iter().copied().collect();

    let family = if logic.has_c() {
        // close under pairwise intersection; any admissible family must
        // contain this closure
        let mut fam: BTreeSet<u64> = base.iter().copied().collect();
        let mut frontier: Vec<u64> = base.clone();
        while let Some(u) = frontier.pop() {
            let news: Vec<u64> =
                fam.iter().map(|&v| u & v).filter(|m| !fam.contains(m)).collect();
            for m in news {
                fam.insert(m);
                frontier.push(m);
            }
        }
        fam.into_iter().collect::<Vec<u64>>()
    } else {
        base.clone()
    };
    let in_base = |m: u64| base.binary_search(&m).is_ok();

    for &m in &family {
        if forbidden.contains(&m) {
            return Err(if in_base(m) {
                MaskFailure::RequiredAndForbidden(m)
            } else {
                MaskFailure::ClosureHitsForbidden(m)
            });
        }
    }
    if logic.has_p() {
        if let Some(&m) = family.iter().find(|&&m| m == 0) {
            return Err(if in_base(m) {
                MaskFailure::EmptyRequired
            } else {
                MaskFailure::ClosureHitsEmpty
            });
        }
    }
    if logic.has_d() {
        let set: BTreeSet<u64> = family.iter().copied().collect();
        for &v in &family {
            let comp = full & !v;
            if set.contains(&comp) {
                return Err(MaskFailure::ComplementaryPair(v.min(comp), v.max(comp)));
            }
        }
    }
    Ok(family)
}

/// Decides whether some neighborhood family exists over `worlds` that
/// contains every `required` set and the whole world set, avoids every
/// `forbidden` set, and satisfies the frame property of `logic`. On
/// success the minimal witness family is returned.
pub fn admissible_neighborhood(
    logic: Logic,
    worlds: &BTreeSet<WorldId>,
    required: &[BTreeSet<WorldId>],
    forbidden: &[BTreeSet<WorldId>],
) -> Result<Admissibility, ModelError> {
    let ordered: Vec<WorldId> = worlds.iter().copied().collect();
    if ordered.is_empty() {
        return Err(ModelError::EmptyWorlds);
    }
    if ordered.len() > crate::neighborhood::MAX_WORLDS {
        return Err(ModelError::TooManyWorlds(ordered.len()));
    }
    let index: BTreeMap<WorldId, usize> =
        ordered.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let to_mask = |set: &BTreeSet<WorldId>| -> Result<u64, ModelError> {
        let mut m = 0u64;
        for &w in set {
            m |= 1 << index.get(&w).ok_or(ModelError::UnknownWorld(w))?;
        }
        Ok(m)
    };
    let full = if ordered.len() == 64 { u64::MAX } else { (1u64 << ordered.len()) - 1 };
    let t: Vec<u64> = required.iter().map(to_mask).collect::<Result<_, _>>()?;
    let f: Vec<u64> = forbidden.iter().map(to_mask).collect::<Result<_, _>>()?;
    let from_mask = |m: u64| -> BTreeSet<WorldId> {
        ordered
            .iter()
            .enumerate()
            .filter(|(i, _)| m & (1 << i) != 0)
            .map(|(_, &w)| w)
            .collect()
    };
    Ok(match admissible_masks(logic, full, &t, &f) {
        Ok(family) => Admissibility::Exists {
            family: family.into_iter().map(from_mask).collect(),
        },
        Err(e) => Admissibility::Impossible {
            reason: match e {
                MaskFailure::RequiredAndForbidden(m) => {
                    AdmissibilityFailure::RequiredAndForbidden(from_mask(m))
                }
                MaskFailure::EmptyRequired => AdmissibilityFailure::EmptyRequired,
                MaskFailure::ComplementaryPair(a, b) => {
                    AdmissibilityFailure::ComplementaryPair(from_mask(a), from_mask(b))
                }
                MaskFailure::ClosureHitsForbidden(m) => {
                    AdmissibilityFailure::ClosureHitsForbidden(from_mask(m))
                }
                MaskFailure::ClosureHitsEmpty => AdmissibilityFailure::ClosureHitsEmpty,
            },
        },
    })
}

struct TypeTable {
    closure: Vec<Formula>,
    /// Closure indices of boxed subformulas, paired with the closure
    /// index of the body.
    boxes: Vec<(usize, usize)>,
    /// Closure indices of atoms.
    atoms: Vec<(usize, String)>,
    types: Vec<WorldType>,
    root: usize,
}

fn build_types(f: &Formula) -> Result<TypeTable, SearchError> {
    let closure = f.subformula_closure();
    let index: BTreeMap<&Formula, usize> =
        closure.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let mut slots = 0usize;
    let mut boxes = Vec::new();
    let mut atoms = Vec::new();
    for (i, g) in closure.iter().enumerate() {
        match g {
            Formula::Atom(a) => {
                atoms.push((i, a.clone()));
                slots += 1;
            }
            Formula::Box(x) => {
                boxes.push((i, index[x.as_ref()]));
                slots += 1;
            }
            _ => {}
        }
    }
    if slots > 24 {
        return Err(SearchError::TooManySlots(slots));
    }
    let types = (0..(1u64 << slots))
        .map(|bits| WorldType::from_primitive_bits(&closure, bits))
        .collect();
    let root = closure.len() - 1;
    Ok(TypeTable { closure, boxes, atoms, types, root })
}

/// Iterative-deepening countermodel search.
pub fn search_countermodel(
    logic: Logic,
    f: &Formula,
    cfg: &SearchConfig,
) -> Result<Verdict, SearchError> {
    if cfg.max_worlds == 0 {
        return Err(SearchError::BadBound);
    }
    let table = build_types(f)?;
    let falsifier_exists = table.types.iter().any(|t| !t.value(table.root));
    let mut nodes: u64 = 0;
    if falsifier_exists {
        for n in 1..=cfg.max_worlds.min(crate::neighborhood::MAX_WORLDS) {
            if let Some(v) = search_at(logic, &table, n, cfg, &mut nodes)? {
                return Ok(v);
            }
        }
    }
    Ok(Verdict::NoCountermodelUpTo { bound: cfg.max_worlds })
}

fn search_at(
    logic: Logic,
    table: &TypeTable,
    n: usize,
    cfg: &SearchConfig,
    nodes: &mut u64,
) -> Result<Option<Verdict>, SearchError> {
    let ntypes = table.types.len();
    // non-decreasing index tuples, lexicographic
    let mut tuple = vec![0usize; n];
    loop {
        *nodes += 1;
        if *nodes > cfg.node_budget {
            return Err(SearchError::BudgetExhausted { budget: cfg.node_budget });
        }
        if let Some(v) = try_tuple(logic, table, &tuple, cfg, nodes)? {
            return Ok(Some(v));
        }
        // advance
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            if tuple[pos] + 1 < ntypes {
                let v = tuple[pos] + 1;
                for slot in tuple.iter_mut().skip(pos) {
                    *slot = v;
                }
                break;
            }
        }
    }
}

fn try_tuple(
    logic: Logic,
    table: &TypeTable,
    tuple: &[usize],
    cfg: &SearchConfig,
    nodes: &mut u64,
) -> Result<Option<Verdict>, SearchError> {
    let n = tuple.len();
    let witness_pos = match tuple.iter().position(|&t| !table.types[t].value(table.root)) {
        Some(p) => p,
        None => return Ok(None),
    };
    let full = (1u64 << n) - 1;
    // truth set of each boxed subformula's body across the tuple
    let box_masks: Vec<u64> = table
        .boxes
        .iter()
        .map(|&(_, body)| {
            let mut m = 0u64;
            for (w, &t) in tuple.iter().enumerate() {
                if table.types[t].value(body) {
                    m |= 1 << w;
                }
            }
            m
        })
        .collect();
    let mut families = Vec::with_capacity(n);
    for &t in tuple {
        *nodes += 1;
        if *nodes > cfg.node_budget {
            return Err(SearchError::BudgetExhausted { budget: cfg.node_budget });
        }
        let ty = &table.types[t];
        let mut pos_sets = Vec::new();
        let mut neg_sets = Vec::new();
        for (bi, &(box_idx, _)) in table.boxes.iter().enumerate() {
            if ty.value(box_idx) {
                pos_sets.push(box_masks[bi]);
            } else {
                neg_sets.push(box_masks[bi]);
            }
        }
        match admissible_masks(logic, full, &pos_sets, &neg_sets) {
            Ok(family) => families.push(family),
            Err(_) => return Ok(None),
        }
    }
    // materialize: worlds 1..=n in tuple order
    let worlds: Vec<WorldId> = (1..=n as WorldId).collect();
    let neighborhoods: BTreeMap<WorldId, Vec<BTreeSet<WorldId>>> = worlds
        .iter()
        .zip(families)
        .map(|(&w, fam)| {
            let sets = fam
                .into_iter()
                .map(|m| {
                    (0..n)
                        .filter(|i| m & (1 << i) != 0)
                        .map(|i| (i + 1) as WorldId)
                        .collect::<BTreeSet<WorldId>>()
                })
                .collect();
            (w, sets)
        })
        .collect();
    let frame = Frame::new(worlds, neighborhoods).expect("search materializes a legal frame");
    let val: BTreeMap<String, BTreeSet<WorldId>> = table
        .atoms
        .iter()
        .map(|(idx, name)| {
            let set = tuple
                .iter()
                .enumerate()
                .filter(|(_, &t)| table.types[t].value(*idx))
                .map(|(w, _)| (w + 1) as WorldId)
                .collect();
            (name.clone(), set)
        })
        .collect();
    let model = NeighborhoodModel::new(frame, val).expect("search materializes a legal model");
    let witness = (witness_pos + 1) as WorldId;
    debug_assert_eq!(
        model.eval(witness, &table.closure[table.root]),
        Ok(false),
        "materialized countermodel must falsify the query at its witness"
    );
    debug_assert!(crate::neighborhood::check_frame(model.frame(), logic).is_ok());
    Ok(Some(Verdict::Countermodel { witness, model }))
}
