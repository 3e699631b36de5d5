//! Canonical enumeration of unprovable formulas with falsifying models
//! whose worlds partition an initial segment of the positive integers.
//!
//! Candidate formulas are scanned in code order. A formula becomes entry
//! k when the countermodel search finds a verified countermodel at that
//! formula's completeness bound; formulas with a no-countermodel verdict
//! are skipped (provable, or at least not refuted — never misclassified),
//! and searches that blow the node budget are recorded as explicit gaps
//! so the enumeration stays deterministic. Each entry's model is
//! relabeled onto the next free block of positive integers, so blocks are
//! consecutive, disjoint, and start at 1.

use crate::coding::Code;
use crate::decide::{self, SearchConfig, Verdict};
use crate::formula::{Formula, Logic};
use crate::neighborhood::{NeighborhoodModel, WorldId};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub k: usize,
    pub formula: Formula,
    /// Closed interval of global world labels.
    pub block: (WorldId, WorldId),
    /// Global label of a world falsifying the formula.
    pub witness: WorldId,
    pub model: NeighborhoodModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub code: Code,
    pub formula: Formula,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountermodelCatalog {
    pub logic: Logic,
    pub entries: Vec<CatalogEntry>,
    pub gaps: Vec<GapRecord>,
}

#[derive(Clone, Debug)]
pub struct CatalogConfig {
    /// Budget per countermodel search.
    pub node_budget: u64,
    /// How many codes to scan before giving up.
    pub max_candidate_codes: u64,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig { node_budget: 2_000_000, max_candidate_codes: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CatalogError {
    NotEnoughEntries { wanted: usize, found: usize, scanned: u64 },
    ZeroCount,
}

impl fmt::Display for CatalogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogError::NotEnoughEntries { wanted, found, scanned } => write!(
                f,
                "found only {found} of {wanted} requested entries after scanning {scanned} codes"
            ),
            CatalogError::ZeroCount => write!(f, "catalog needs at least one entry"),
        }
    }
}

impl std::error::Error for CatalogError {}

pub fn build_catalog(
    logic: Logic,
    count: usize,
    cfg: &CatalogConfig,
) -> Result<CountermodelCatalog, CatalogError> {
    if count == 0 {
        return Err(CatalogError::ZeroCount);
    }
    let mut entries = Vec::new();
    let mut gaps = Vec::new();
    let mut next_world: WorldId = 1;
    let mut scanned = 0u64;
    for code_val in 1..=cfg.max_candidate_codes {
        if entries.len() == count {
            break;
        }
        scanned = code_val;
        let code = Code::from_u64(code_val);
        let formula = match Formula::decode(&code) {
            Some(f) => f,
            None => continue,
        };
        let bound = decide::completeness_bound(&formula);
        let search = SearchConfig { max_worlds: bound, node_budget: cfg.node_budget };
        match decide::search_countermodel(logic, &formula, &search) {
            Ok(Verdict::Countermodel { witness, model }) => {
                let n = model.worlds().len() as WorldId;
                let delta = next_world - 1;
                let entry = CatalogEntry {
                    k: entries.len(),
                    formula,
                    block: (next_world, next_world + n - 1),
                    witness: witness + delta,
                    model: model.shifted(delta),
                };
                next_world += n;
                entries.push(entry);
            }
            Ok(Verdict::NoCountermodelUpTo { .. }) => {}
            Err(e) => {
                gaps.push(GapRecord { code, formula, reason: e.to_string() });
            }
        }
    }
    if entries.len() < count {
        return Err(CatalogError::NotEnoughEntries {
            wanted: count,
            found: entries.len(),
            scanned,
        });
    }
    Ok(CountermodelCatalog { logic, entries, gaps })
}

impl CountermodelCatalog {
    /// The entry owning a global world label, with the world's
    /// pre-relabeling id inside that entry's model (search models label
    /// worlds 1..=n).
    pub fn world_owner(&self, i: WorldId) -> Option<(usize, WorldId)> {
        if i == 0 {
            return None;
        }
        let idx = self
            .entries
            .partition_point(|e| e.block.1 < i);
        let entry = self.entries.get(idx)?;
        if entry.block.0 <= i && i <= entry.block.1 {
            Some((entry.k, i - entry.block.0 + 1))
        } else {
            None
        }
    }

    pub fn entry(&self, k: usize) -> Option<&CatalogEntry> {
        self.entries.get(k)
    }

    pub fn total_worlds(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.block.1)
    }
}

/// Spec-level alias for the owner lookup.
pub fn world_owner(cat: &CountermodelCatalog, i: WorldId) -> Option<(usize, WorldId)> {
    cat.world_owner(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighborhood::check_frame;

    #[test]
    fn first_en_entry_is_the_code_least_unprovable() {
        let cat = build_catalog(Logic::EN, 1, &CatalogConfig::default()).unwrap();
        // code 1 is the constant false, unprovable in every logic here
        assert_eq!(cat.entries[0].formula, Formula::Bot);
        assert_eq!(cat.entries[0].block.0, 1);
    }

    #[test]
    fn blocks_partition_and_models_verify() {
        for logic in [Logic::EN, Logic::ECNP] {
            let cat = build_catalog(logic, 5, &CatalogConfig::default()).unwrap();
            assert_eq!(cat.entries.len(), 5);
            let mut expect_next = 1;
            for e in &cat.entries {
                assert_eq!(e.block.0, expect_next, "blocks must be consecutive");
                expect_next = e.block.1 + 1;
                let worlds: Vec<WorldId> = (e.block.0..=e.block.1).collect();
                assert_eq!(e.model.worlds(), worlds.as_slice());
                assert!(check_frame(e.model.frame(), logic).is_ok());
                assert_eq!(e.model.eval(e.witness, &e.formula), Ok(false));
            }
        }
    }

    #[test]
    fn ecnp_models_satisfy_both_extra_conditions() {
        let cat = build_catalog(Logic::ECNP, 3, &CatalogConfig::default()).unwrap();
        for e in &cat.entries {
            assert!(check_frame(e.model.frame(), Logic::ECN).is_ok());
            assert!(check_frame(e.model.frame(), Logic::ENP).is_ok());
        }
    }

    #[test]
    fn owner_lookup() {
        let cat = build_catalog(Logic::EN, 3, &CatalogConfig::default()).unwrap();
        assert_eq!(cat.world_owner(1), Some((0, 1)));
        let last_of_2 = cat.entries[2].block.1;
        assert_eq!(cat.world_owner(last_of_2).map(|(k, _)| k), Some(2));
        assert_eq!(cat.world_owner(cat.total_worlds() + 1), None);
        assert_eq!(cat.world_owner(0), None);
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_catalog(Logic::END, 4, &CatalogConfig::default()).unwrap();
        let b = build_catalog(Logic::END, 4, &CatalogConfig::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn valid_formulas_are_skipped() {
        // ~false has code 11 and is provable everywhere; it must not appear
        let cat = build_catalog(Logic::EN, 6, &CatalogConfig::default()).unwrap();
        let top: Formula = "~false".parse().unwrap();
        assert!(cat.entries.iter().all(|e| e.formula != top));
    }

    #[test]
    fn budget_exhaustion_leaves_a_gap_and_keeps_going() {
        // budget 2 admits the single-tuple searches but dies on ~a, whose
        // first falsifying candidate is the second world type
        let cfg = CatalogConfig { node_budget: 2, max_candidate_codes: 50 };
        let cat = build_catalog(Logic::EN, 6, &cfg).unwrap();
        assert_eq!(cat.entries.len(), 6);
        let not_a: Formula = "~a".parse().unwrap();
        assert!(cat.gaps.iter().any(|g| g.formula == not_a));
        assert!(cat.gaps.iter().all(|g| g.reason.contains("budget")));
        assert!(cat.entries.iter().all(|e| e.formula != not_a));
        // blocks stay consecutive across the gap
        let mut next = 1;
        for e in &cat.entries {
            assert_eq!(e.block.0, next);
            next = e.block.1 + 1;
        }
        // and the very same call reproduces the same catalog
        let again = build_catalog(Logic::EN, 6, &cfg).unwrap();
        assert_eq!(cat, again);
    }
}
