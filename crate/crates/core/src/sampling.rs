//! Seeded generators for the randomized suites.
//!
//! A fixed SplitMix64 stream keeps every suite reproducible from a single
//! seed, independent of platform or dependency versions.

use crate::coding::Code;
use crate::formula::Formula;
use crate::sandbox::Scenario;
use crate::toy::ToyFormula;
use std::collections::BTreeMap;

/// SplitMix64; deterministic and stable forever.
#[derive(Clone, Debug)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in 0..n (n > 0).
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

/// Random modal formula with at most `connectives` connectives and boxes
/// nested at most `modal_depth` deep, over the given atom names.
pub fn random_formula(
    rng: &mut Rng,
    atoms: &[&str],
    connectives: usize,
    modal_depth: usize,
) -> Formula {
    if connectives == 0 {
        return if rng.chance(1, 6) {
            Formula::Bot
        } else {
            Formula::atom(rng.pick(atoms))
        };
    }
    let box_allowed = modal_depth > 0;
    let choice = rng.below(if box_allowed { 5 } else { 4 });
    match choice {
        0 => random_formula(rng, atoms, connectives - 1, modal_depth).not(),
        1..=3 => {
            let left_budget = rng.below(connectives as u64) as usize;
            let l = random_formula(rng, atoms, left_budget, modal_depth);
            let r = random_formula(rng, atoms, connectives - 1 - left_budget, modal_depth);
            match choice {
                1 => l.and(r),
                2 => l.or(r),
                _ => l.imp(r),
            }
        }
        _ => random_formula(rng, atoms, connectives - 1, modal_depth - 1).boxed(),
    }
}

/// What a random sandbox scenario is built to exercise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioShape {
    /// Letter axioms and honestly scheduled consequences; no lambda facts
    /// at all.
    ConsistentLamFree,
    /// Consistent, but some `~lam(j)` axioms arrive mid-run.
    LamRefuting,
    /// A contradictory pair of axioms arrives mid-run.
    Contradictory,
}

/// Small-code random scenario (letters a..e, lambda indices 1..=5,
/// shallow formulas), so an independent stage-by-stage oracle can walk
/// every stage up to the horizon.
pub fn random_scenario(rng: &mut Rng, shape: ScenarioShape) -> Scenario {
    let letters = ["a", "b", "c", "d", "e"];
    let mut axioms: Vec<ToyFormula> = Vec::new();
    let n_axioms = 1 + rng.below(3);
    for _ in 0..n_axioms {
        let x = ToyFormula::letter(rng.pick(&letters));
        // positive letters and implications are satisfiable all-true, which
        // keeps the lam-free shape honestly consistent; negations are only
        // offered to the other shapes
        let choice = if shape == ScenarioShape::ConsistentLamFree {
            rng.below(2) * 2
        } else {
            rng.below(3)
        };
        let ax = match choice {
            0 => x,
            1 => x.not(),
            _ => {
                let y = ToyFormula::letter(rng.pick(&letters));
                x.imp(y)
            }
        };
        if !axioms.contains(&ax) && !axioms.contains(&negate(&ax)) {
            axioms.push(ax);
        }
    }

    let mut schedule: BTreeMap<Code, ToyFormula> = BTreeMap::new();
    let mut injections: BTreeMap<Code, ToyFormula> = BTreeMap::new();
    let mut stage = 3 + rng.below(10);
    // schedule a few of the axioms themselves (always justified)
    for ax in axioms.clone() {
        if rng.chance(2, 3) {
            schedule.insert(Code::from_u64(stage), ax);
            stage += 1 + rng.below(7);
        }
    }
    match shape {
        ScenarioShape::ConsistentLamFree => {}
        ScenarioShape::LamRefuting => {
            let n = 1 + rng.below(2);
            for _ in 0..n {
                let j = 1 + rng.below(5);
                injections.insert(
                    Code::from_u64(stage),
                    ToyFormula::Lam(j).not(),
                );
                stage += 1 + rng.below(500);
            }
        }
        ScenarioShape::Contradictory => {
            let x = ToyFormula::letter(rng.pick(&letters));
            injections.insert(Code::from_u64(stage), x.clone());
            stage += 1 + rng.below(9);
            injections.insert(Code::from_u64(stage), x.not());
        }
    }
    let horizon = Code::from_u64(4000 + rng.below(2000));
    Scenario::new(axioms, schedule, injections, horizon).expect("generated scenarios are valid")
}

fn negate(f: &ToyFormula) -> ToyFormula {
    match f {
        ToyFormula::Not(x) => x.as_ref().clone(),
        other => other.clone().not(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rng_is_stable() {
        let mut r = Rng::new(42);
        let first: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        let mut r2 = Rng::new(42);
        let again: Vec<u64> = (0..4).map(|_| r2.next_u64()).collect();
        assert_eq!(first, again);
        assert_ne!(first[0], first[1]);
    }

    #[test]
    fn formulas_respect_budgets() {
        let mut r = Rng::new(7);
        for _ in 0..200 {
            let f = random_formula(&mut r, &["p", "q"], 12, 2);
            assert!(f.modal_depth() <= 2);
            assert!(f.atoms().len() <= 2);
        }
    }

    #[test]
    fn scenarios_validate_and_small_codes() {
        let mut r = Rng::new(11);
        for shape in [
            ScenarioShape::ConsistentLamFree,
            ScenarioShape::LamRefuting,
            ScenarioShape::Contradictory,
        ] {
            for _ in 0..10 {
                let sc = random_scenario(&mut r, shape);
                for e in sc.events() {
                    assert!(e.formula.code().to_u64().unwrap() < 500_000);
                }
            }
        }
    }
}
