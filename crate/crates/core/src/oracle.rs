//! Exhaustive small-model oracle, independent of the typed search.
//!
//! Enumerates every frame with at most three worlds satisfying a logic's
//! conditions and every valuation of the query's atoms (at most three),
//! and evaluates the query directly. Nothing is pruned and nothing is
//! shared with [`crate::decide`]: this is the brute-force reference the
//! search is validated against.
//!
//! Frames are packed tight: with n <= 3 worlds a world set is a mask
//! s < 2^n, and a neighborhood family is the u8 whose bit s says whether
//! the set s belongs to it. Valuations are processed 64 at a time by
//! treating a u64 as one lane per valuation.

use crate::formula::{Formula, Logic};
use crate::neighborhood::{Frame, NeighborhoodModel, WorldId};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub const ORACLE_MAX_WORLDS: usize = 3;
pub const ORACLE_MAX_ATOMS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleError {
    TooManyWorlds(usize),
    TooManyAtoms(usize),
    BadBound,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooManyWorlds(n) => {
                write!(f, "oracle bound {n} exceeds {ORACLE_MAX_WORLDS} worlds")
            }
            OracleError::TooManyAtoms(n) => {
                write!(f, "formula uses {n} atoms; the oracle supports {ORACLE_MAX_ATOMS}")
            }
            OracleError::BadBound => write!(f, "max_worlds must be at least 1"),
        }
    }
}

impl std::error::Error for OracleError {}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleVerdict {
    ValidUpTo { bound: usize },
    Countermodel { model: NeighborhoodModel, witness: WorldId },
}

/// A packed frame from the exhaustive enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackedFrame {
    pub n: usize,
    /// Per world: the u8 whose bit s records that the world set with mask
    /// s is in the family. Unused positions are 0.
    pub fams: [u8; ORACLE_MAX_WORLDS],
}

impl PackedFrame {
    fn full(&self) -> u8 {
        ((1u16 << self.n) - 1) as u8
    }

    pub fn satisfies(&self, logic: Logic) -> bool {
        (0..self.n).all(|w| family_ok(self.fams[w], self.full(), logic))
    }

    /// Unpacks to the public frame type (worlds labeled 1..=n).
    pub fn to_frame(&self) -> Frame {
        let worlds: Vec<WorldId> = (1..=self.n as WorldId).collect();
        let mut neigh = BTreeMap::new();
        for w in 0..self.n {
            let mut fam = Vec::new();
            for s in 0..(1u16 << self.n) {
                if self.fams[w] & (1 << s) as u8 != 0 {
                    let set: BTreeSet<WorldId> = (0..self.n)
                        .filter(|i| s & (1 << i) != 0)
                        .map(|i| (i + 1) as WorldId)
                        .collect();
                    fam.push(set);
                }
            }
            neigh.insert((w + 1) as WorldId, fam);
        }
        Frame::new(worlds, neigh).expect("packed frames are well-formed")
    }
}

fn family_ok(fam: u8, full: u8, logic: Logic) -> bool {
    // EN: W itself present (enforced by enumeration, re-checked here)
    if fam & (1 << full) == 0 {
        return false;
    }
    if logic.has_c() {
        for s in 0..=full {
            if fam & (1 << s) == 0 {
                continue;
            }
            for t in s..=full {
                if fam & (1 << t) != 0 && fam & (1 << (s & t)) == 0 {
                    return false;
                }
            }
        }
    }
    if logic.has_p() && fam & 1 != 0 {
        return false;
    }
    if logic.has_d() {
        for s in 0..=full {
            if fam & (1 << s) != 0 && fam & (1 << (full & !s)) != 0 {
                return false;
            }
        }
    }
    true
}

/// All families over n worlds that contain W and satisfy the logic's
/// conditions, in ascending packed order.
pub fn valid_families(logic: Logic, n: usize) -> Vec<u8> {
    let full = ((1u16 << n) - 1) as u8;
    let top = 1u16 << full; // free choice over the proper subsets
    (0..top)
        .map(|free| (free as u8) | (1 << full))
        .filter(|&fam| family_ok(fam, full, logic))
        .collect()
}

/// Visits every frame of the logic with exactly `n` worlds, in canonical
/// (lexicographic) order.
pub fn for_each_frame(logic: Logic, n: usize, mut visit: impl FnMut(&PackedFrame)) {
    assert!((1..=ORACLE_MAX_WORLDS).contains(&n));
    let fams = valid_families(logic, n);
    let mut frame = PackedFrame { n, fams: [0; ORACLE_MAX_WORLDS] };
    match n {
        1 => {
            for &a in &fams {
                frame.fams = [a, 0, 0];
                visit(&frame);
            }
        }
        2 => {
            for &a in &fams {
                for &b in &fams {
                    frame.fams = [a, b, 0];
                    visit(&frame);
                }
            }
        }
        _ => {
            for &a in &fams {
                for &b in &fams {
                    for &c in &fams {
                        frame.fams = [a, b, c];
                        visit(&frame);
                    }
                }
            }
        }
    }
}

/// Truth masks of `f` on a packed frame, one u64 lane per valuation in
/// the block. Returns one mask per world.
struct LaneEval<'a> {
    frame: &'a PackedFrame,
    atoms: &'a [String],
    block: u64,
    lanes: u32,
}

impl LaneEval<'_> {
    fn atom_mask(&self, atom_idx: usize, world: usize) -> u64 {
        // valuation index v makes `atom` true at `world` iff bit
        // (atom_idx * n + world) of v is set
        let bit = atom_idx * self.frame.n + world;
        let mut m = 0u64;
        for lane in 0..self.lanes {
            let v = self.block + lane as u64;
            if v >> bit & 1 != 0 {
                m |= 1 << lane;
            }
        }
        m
    }

    fn eval(&self, f: &Formula) -> [u64; ORACLE_MAX_WORLDS] {
        let n = self.frame.n;
        let lane_full = if self.lanes == 64 { u64::MAX } else { (1u64 << self.lanes) - 1 };
        match f {
            Formula::Bot => [0; ORACLE_MAX_WORLDS],
            Formula::Atom(a) => {
                let ai = self.atoms.iter().position(|x| x == a).expect("atom indexed");
                let mut out = [0; ORACLE_MAX_WORLDS];
                for (w, slot) in out.iter_mut().enumerate().take(n) {
                    *slot = self.atom_mask(ai, w);
                }
                out
            }
            Formula::Not(x) => {
                let mut v = self.eval(x);
                for slot in v.iter_mut().take(n) {
                    *slot = !*slot & lane_full;
                }
                v
            }
            Formula::And(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                let mut out = [0; ORACLE_MAX_WORLDS];
                for w in 0..n {
                    out[w] = a[w] & b[w];
                }
                out
            }
            Formula::Or(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                let mut out = [0; ORACLE_MAX_WORLDS];
                for w in 0..n {
                    out[w] = a[w] | b[w];
                }
                out
            }
            Formula::Imp(l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                let mut out = [0; ORACLE_MAX_WORLDS];
                for w in 0..n {
                    out[w] = (!a[w] & lane_full) | b[w];
                }
                out
            }
            Formula::Box(x) => {
                let child = self.eval(x);
                // sel[s]: lanes whose truth set of the body is exactly s
                let mut sel = [0u64; 8];
                for (s, slot) in sel.iter_mut().enumerate().take(1 << n) {
                    let mut m = lane_full;
                    for (w, &cw) in child.iter().enumerate().take(n) {
                        m &= if s & (1 << w) != 0 { cw } else { !cw & lane_full };
                    }
                    *slot = m;
                }
                let mut out = [0; ORACLE_MAX_WORLDS];
                for (w, slot) in out.iter_mut().enumerate().take(n) {
                    let fam = self.frame.fams[w];
                    let mut m = 0u64;
                    for (s, &lane_mask) in sel.iter().enumerate().take(1 << n) {
                        if fam & (1 << s) != 0 {
                            m |= lane_mask;
                        }
                    }
                    *slot = m;
                }
                out
            }
        }
    }
}

/// Does `f` hold at every world of the packed frame under every valuation
/// of `atoms`? On failure returns the least (valuation, world) pair,
/// valuation-major.
pub fn packed_frame_validity(
    frame: &PackedFrame,
    f: &Formula,
    atoms: &[String],
) -> Option<(u64, usize)> {
    let n = frame.n;
    let nvals: u64 = 1 << (atoms.len() * n);
    let mut block = 0u64;
    while block < nvals {
        let lanes = (nvals - block).min(64) as u32;
        let ev = LaneEval { frame, atoms, block, lanes };
        let vals = ev.eval(f);
        let lane_full = if lanes == 64 { u64::MAX } else { (1u64 << lanes) - 1 };
        let mut best: Option<(u64, usize)> = None;
        for (w, &m) in vals.iter().enumerate().take(n) {
            let bad = !m & lane_full;
            if bad != 0 {
                let v = block + bad.trailing_zeros() as u64;
                if best.is_none_or(|(bv, bw)| v < bv || (v == bv && w < bw)) {
                    best = Some((v, w));
                }
            }
        }
        if best.is_some() {
            return best;
        }
        block += 64;
    }
    None
}

/// Materializes the model for valuation index `v` over a packed frame.
pub fn packed_model(frame: &PackedFrame, atoms: &[String], v: u64) -> NeighborhoodModel {
    let n = frame.n;
    let val: BTreeMap<String, BTreeSet<WorldId>> = atoms
        .iter()
        .enumerate()
        .map(|(ai, a)| {
            let set = (0..n)
                .filter(|w| v >> (ai * n + w) & 1 != 0)
                .map(|w| (w + 1) as WorldId)
                .collect();
            (a.clone(), set)
        })
        .collect();
    NeighborhoodModel::new(frame.to_frame(), val).expect("packed model is well-formed")
}

/// Exhaustive validity decision over all frames of the logic with at most
/// `max_worlds` worlds (<= 3) and all valuations of the query's atoms
/// (<= 3 atoms). Returns the first falsified model in canonical order.
pub fn oracle_validity(
    logic: Logic,
    f: &Formula,
    max_worlds: usize,
) -> Result<OracleVerdict, OracleError> {
    if max_worlds == 0 {
        return Err(OracleError::BadBound);
    }
    if max_worlds > ORACLE_MAX_WORLDS {
        return Err(OracleError::TooManyWorlds(max_worlds));
    }
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    if atoms.len() > ORACLE_MAX_ATOMS {
        return Err(OracleError::TooManyAtoms(atoms.len()));
    }
    for n in 1..=max_worlds {
        let mut found: Option<(PackedFrame, u64, usize)> = None;
        for_each_frame(logic, n, |frame| {
            if found.is_some() {
                return;
            }
            if let Some((v, w)) = packed_frame_validity(frame, f, &atoms) {
                found = Some((*frame, v, w));
            }
        });
        if let Some((frame, v, w)) = found {
            let model = packed_model(&frame, &atoms, v);
            return Ok(OracleVerdict::Countermodel { model, witness: (w + 1) as WorldId });
        }
    }
    Ok(OracleVerdict::ValidUpTo { bound: max_worlds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighborhood::{check_frame, frame_validity};

    fn fml(s: &str) -> Formula {
        s.parse().unwrap()
    }

    #[test]
    fn oracle_examples() {
        // ~[]false also holds in END frames (D forces ∅ out of every family)
        assert_eq!(
            oracle_validity(Logic::END, &fml("~[]false"), 2).unwrap(),
            OracleVerdict::ValidUpTo { bound: 2 }
        );
        // monotonicity fails in EN
        match oracle_validity(Logic::EN, &fml("[](p & q) -> []p"), 2).unwrap() {
            OracleVerdict::Countermodel { model, witness } => {
                assert_eq!(model.eval(witness, &fml("[](p & q) -> []p")), Ok(false));
                assert!(check_frame(model.frame(), Logic::EN).is_ok());
            }
            other => panic!("expected countermodel, got {other:?}"),
        }
        // []true is forced by W ∈ N(x)
        assert_eq!(
            oracle_validity(Logic::EN, &fml("[]true"), 3).unwrap(),
            OracleVerdict::ValidUpTo { bound: 3 }
        );
    }

    #[test]
    fn oracle_rejects_out_of_bounds() {
        assert!(matches!(
            oracle_validity(Logic::EN, &fml("p"), 4),
            Err(OracleError::TooManyWorlds(4))
        ));
        assert!(matches!(
            oracle_validity(Logic::EN, &fml("p & q & r & s"), 2),
            Err(OracleError::TooManyAtoms(4))
        ));
    }

    #[test]
    fn frame_counts() {
        assert_eq!(valid_families(Logic::EN, 1).len(), 2);
        assert_eq!(valid_families(Logic::EN, 2).len(), 8);
        assert_eq!(valid_families(Logic::EN, 3).len(), 128);
        // ENP: ∅ excluded
        assert_eq!(valid_families(Logic::ENP, 2).len(), 4);
        let mut count = 0usize;
        for_each_frame(Logic::EN, 2, |_| count += 1);
        assert_eq!(count, 64);
    }

    #[test]
    fn packed_validity_agrees_with_public_eval() {
        // exhaustive agreement on all 2-world EN frames, three probe formulas
        let probes =
            [fml("[]p & []q -> [](p & q)"), fml("~[]false"), fml("~([]p & []~p)")];
        for_each_frame(Logic::EN, 2, |pf| {
            let frame = pf.to_frame();
            for f in &probes {
                let atoms: Vec<String> = f.atoms().into_iter().collect();
                let packed = packed_frame_validity(pf, f, &atoms).is_none();
                let public = frame_validity(&frame, f).unwrap().is_none();
                assert_eq!(packed, public, "disagreement on {f} over {pf:?}");
            }
        });
    }
}
