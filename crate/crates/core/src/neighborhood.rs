//! Finite neighborhood frames and models, the satisfaction relation, and
//! frame-property checks for the five logics.
//!
//! Worlds are positive integers. Internally a frame stores each world's
//! neighborhood family as sorted bitmasks over world indices (at most 64
//! worlds per frame), which keeps evaluation allocation-free; the public
//! surface and the JSON wire format speak in explicit world sets.
//!
//! JSON model format:
//! `{"worlds":[1,2],"N":{"1":[[1,2],[1]],"2":[[1,2]]},"val":{"p":[1]}}`
//! with world sets as sorted arrays.

use crate::formula::{Formula, Logic};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type WorldId = u64;

pub const MAX_WORLDS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    EmptyWorlds,
    ZeroWorld,
    TooManyWorlds(usize),
    DuplicateWorld(WorldId),
    UnknownWorld(WorldId),
    MissingNeighborhood(WorldId),
    /// The EN condition `W ∈ N(x)` fails at this world.
    MissingUnitSet(WorldId),
    MemberOutsideWorlds { world: WorldId, member: WorldId },
    ValuationOutsideWorlds { atom: String, member: WorldId },
    TooManyValuations,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::EmptyWorlds => write!(f, "malformed frame: the world set is empty"),
            ModelError::ZeroWorld => write!(f, "malformed frame: world labels must be positive"),
            ModelError::TooManyWorlds(n) => {
                write!(f, "frame has {n} worlds; at most {MAX_WORLDS} are supported")
            }
            ModelError::DuplicateWorld(w) => write!(f, "malformed frame: duplicate world {w}"),
            ModelError::UnknownWorld(w) => write!(f, "unknown world {w}"),
            ModelError::MissingNeighborhood(w) => {
                write!(f, "malformed frame: no neighborhood family given for world {w}")
            }
            ModelError::MissingUnitSet(w) => {
                write!(f, "malformed frame: W itself is missing from N({w})")
            }
            ModelError::MemberOutsideWorlds { world, member } => write!(
                f,
                "malformed frame: N({world}) contains a set mentioning {member}, which is not a world"
            ),
            ModelError::ValuationOutsideWorlds { atom, member } => write!(
                f,
                "malformed model: valuation of {atom:?} mentions {member}, which is not a world"
            ),
            ModelError::TooManyValuations => {
                write!(f, "frame validity check would enumerate too many valuations")
            }
        }
    }
}

impl std::error::Error for ModelError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    worlds: Vec<WorldId>,
    families: Vec<Vec<u64>>,
}

impl Frame {
    pub fn new(
        worlds: Vec<WorldId>,
        neighborhoods: BTreeMap<WorldId, Vec<BTreeSet<WorldId>>>,
    ) -> Result<Frame, ModelError> {
        if worlds.is_empty() {
            return Err(ModelError::EmptyWorlds);
        }
        if worlds.len() > MAX_WORLDS {
            return Err(ModelError::TooManyWorlds(worlds.len()));
        }
        let mut sorted = worlds;
        sorted.sort_unstable();
        if sorted[0] == 0 {
            return Err(ModelError::ZeroWorld);
        }
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(ModelError::DuplicateWorld(pair[0]));
            }
        }
        let mut frame = Frame { worlds: sorted, families: Vec::new() };
        let full = frame.full_mask();
        for (i, &w) in frame.worlds.iter().enumerate() {
            let fam = neighborhoods.get(&w).ok_or(ModelError::MissingNeighborhood(w))?;
            let mut masks = Vec::with_capacity(fam.len());
            for set in fam {
                masks.push(frame.mask_of(set).map_err(|member| {
                    ModelError::MemberOutsideWorlds { world: w, member }
                })?);
            }
            masks.sort_unstable();
            masks.dedup();
            if masks.binary_search(&full).is_err() {
                return Err(ModelError::MissingUnitSet(w));
            }
            frame.families.push(masks);
            debug_assert_eq!(frame.families.len(), i + 1);
        }
        for w in neighborhoods.keys() {
            if frame.index_of(*w).is_none() {
                return Err(ModelError::UnknownWorld(*w));
            }
        }
        Ok(frame)
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn index_of(&self, w: WorldId) -> Option<usize> {
        self.worlds.binary_search(&w).ok()
    }

    pub(crate) fn full_mask(&self) -> u64 {
        if self.worlds.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.worlds.len()) - 1
        }
    }

    /// Mask of a world set; `Err` carries the first foreign member.
    fn mask_of(&self, set: &BTreeSet<WorldId>) -> Result<u64, WorldId> {
        let mut m = 0u64;
        for &w in set {
            match self.index_of(w) {
                Some(i) => m |= 1 << i,
                None => return Err(w),
            }
        }
        Ok(m)
    }

    pub(crate) fn set_of_mask(&self, mask: u64) -> BTreeSet<WorldId> {
        self.worlds
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &w)| w)
            .collect()
    }

    pub(crate) fn family_masks(&self, idx: usize) -> &[u64] {
        &self.families[idx]
    }

    /// The neighborhood family of a world, as explicit sets.
    pub fn family(&self, w: WorldId) -> Result<Vec<BTreeSet<WorldId>>, ModelError> {
        let idx = self.index_of(w).ok_or(ModelError::UnknownWorld(w))?;
        Ok(self.families[idx].iter().map(|&m| self.set_of_mask(m)).collect())
    }

    fn family_contains(&self, idx: usize, mask: u64) -> bool {
        self.families[idx].binary_search(&mask).is_ok()
    }

    /// Relabels every world by a fixed offset; used to place catalog
    /// models on their global blocks.
    pub(crate) fn shifted(&self, delta: u64) -> Frame {
        Frame {
            worlds: self.worlds.iter().map(|w| w + delta).collect(),
            families: self.families.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodModel {
    frame: Frame,
    val: BTreeMap<String, u64>,
}

impl NeighborhoodModel {
    pub fn new(
        frame: Frame,
        val: BTreeMap<String, BTreeSet<WorldId>>,
    ) -> Result<Self, ModelError> {
        let mut masks = BTreeMap::new();
        for (atom, set) in val {
            let mask = frame.mask_of(&set).map_err(|member| {
                ModelError::ValuationOutsideWorlds { atom: atom.clone(), member }
            })?;
            masks.insert(atom, mask);
        }
        Ok(NeighborhoodModel { frame, val: masks })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn worlds(&self) -> &[WorldId] {
        self.frame.worlds()
    }

    /// Atoms with an explicit valuation entry (absent atoms denote ∅).
    pub fn valued_atoms(&self) -> impl Iterator<Item = &str> {
        self.val.keys().map(|s| s.as_str())
    }

    pub fn valuation(&self, atom: &str) -> BTreeSet<WorldId> {
        self.frame.set_of_mask(self.val.get(atom).copied().unwrap_or(0))
    }

    pub(crate) fn truth_mask(&self, f: &Formula) -> u64 {
        let full = self.frame.full_mask();
        match f {
            Formula::Bot => 0,
            Formula::Atom(a) => self.val.get(a).copied().unwrap_or(0),
            Formula::Not(x) => !self.truth_mask(x) & full,
            Formula::And(l, r) => self.truth_mask(l) & self.truth_mask(r),
            Formula::Or(l, r) => self.truth_mask(l) | self.truth_mask(r),
            Formula::Imp(l, r) => (!self.truth_mask(l) & full) | self.truth_mask(r),
            Formula::Box(x) => {
                let child = self.truth_mask(x);
                let mut m = 0u64;
                for i in 0..self.frame.worlds.len() {
                    if self.frame.family_contains(i, child) {
                        m |= 1 << i;
                    }
                }
                m
            }
        }
    }

    /// Satisfaction at a world; rejects worlds outside the frame.
    pub fn eval(&self, x: WorldId, f: &Formula) -> Result<bool, ModelError> {
        let idx = self.frame.index_of(x).ok_or(ModelError::UnknownWorld(x))?;
        Ok(self.truth_mask(f) & (1 << idx) != 0)
    }

    pub fn truth_set(&self, f: &Formula) -> BTreeSet<WorldId> {
        self.frame.set_of_mask(self.truth_mask(f))
    }

    /// Worlds where `f` fails; empty iff `f` is valid in the model.
    pub fn falsifying_worlds(&self, f: &Formula) -> Vec<WorldId> {
        let bad = !self.truth_mask(f) & self.frame.full_mask();
        self.frame.set_of_mask(bad).into_iter().collect()
    }

    pub(crate) fn shifted(&self, delta: u64) -> NeighborhoodModel {
        NeighborhoodModel { frame: self.frame.shifted(delta), val: self.val.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameProperty {
    /// `U, V ∈ N(x)` implies `U ∩ V ∈ N(x)`.
    CClosure,
    /// `∅ ∉ N(x)`.
    PNonempty,
    /// `V ∈ N(x)` implies `W ∖ V ∉ N(x)`.
    DComplementFree,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameViolation {
    pub world: WorldId,
    pub property: FrameProperty,
    /// The offending set(s): the intersection-free pair for C, the empty
    /// set for P, the complementary pair for D.
    pub sets: Vec<BTreeSet<WorldId>>,
}

impl fmt::Display for FrameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sets: Vec<String> = self.sets.iter().map(|s| format!("{s:?}")).collect();
        match self.property {
            FrameProperty::CClosure => write!(
                f,
                "world {}: intersection of {} is missing from the family",
                self.world,
                sets.join(" and ")
            ),
            FrameProperty::PNonempty => {
                write!(f, "world {}: the empty set is in the family", self.world)
            }
            FrameProperty::DComplementFree => write!(
                f,
                "world {}: complementary sets {} are both in the family",
                self.world,
                sets.join(" and ")
            ),
        }
    }
}

/// Frame-condition check for a logic. The EN invariants themselves are
/// enforced at construction, so this only inspects the extra properties.
pub fn check_frame(frame: &Frame, logic: Logic) -> Result<(), FrameViolation> {
    for (idx, &w) in frame.worlds().iter().enumerate() {
        let fam = frame.family_masks(idx);
        if logic.has_c() {
            for (a, &u) in fam.iter().enumerate() {
                for &v in &fam[a..] {
                    if fam.binary_search(&(u & v)).is_err() {
                        return Err(FrameViolation {
                            world: w,
                            property: FrameProperty::CClosure,
                            sets: vec![frame.set_of_mask(u), frame.set_of_mask(v)],
                        });
                    }
                }
            }
        }
        if logic.has_p() && fam.binary_search(&0).is_ok() {
            return Err(FrameViolation {
                world: w,
                property: FrameProperty::PNonempty,
                sets: vec![BTreeSet::new()],
            });
        }
        if logic.has_d() {
            let full = frame.full_mask();
            for &v in fam {
                if fam.binary_search(&(full & !v)).is_ok() {
                    return Err(FrameViolation {
                        world: w,
                        property: FrameProperty::DComplementFree,
                        sets: vec![frame.set_of_mask(v), frame.set_of_mask(full & !v)],
                    });
                }
            }
        }
    }
    Ok(())
}

/// Is `f` valid in the frame, i.e. in every model over it? Iterates all
/// valuations of `f`'s atoms; returns the first falsifying model and
/// world, or `None` when valid.
pub fn frame_validity(
    frame: &Frame,
    f: &Formula,
) -> Result<Option<(NeighborhoodModel, WorldId)>, ModelError> {
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    let n = frame.worlds().len();
    let bits = atoms.len() * n;
    if bits > 24 {
        return Err(ModelError::TooManyValuations);
    }
    for v in 0u64..(1 << bits) {
        let mut val = BTreeMap::new();
        for (ai, atom) in atoms.iter().enumerate() {
            let mask = (v >> (ai * n)) & frame.full_mask();
            val.insert(atom.clone(), mask);
        }
        let model = NeighborhoodModel { frame: frame.clone(), val };
        let bad = !model.truth_mask(f) & frame.full_mask();
        if bad != 0 {
            let w = frame.worlds()[bad.trailing_zeros() as usize];
            return Ok(Some((model, w)));
        }
    }
    Ok(None)
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    worlds: Vec<WorldId>,
    #[serde(rename = "N")]
    n: BTreeMap<String, Vec<Vec<WorldId>>>,
    #[serde(default)]
    val: BTreeMap<String, Vec<WorldId>>,
}

impl TryFrom<ModelJson> for NeighborhoodModel {
    type Error = String;
    fn try_from(j: ModelJson) -> Result<Self, String> {
        let mut neigh = BTreeMap::new();
        for (k, sets) in j.n {
            let w: WorldId = k.parse().map_err(|_| format!("bad world key {k:?}"))?;
            let sets: Vec<BTreeSet<WorldId>> =
                sets.into_iter().map(|s| s.into_iter().collect()).collect();
            neigh.insert(w, sets);
        }
        let frame = Frame::new(j.worlds, neigh).map_err(|e| e.to_string())?;
        let val = j.val.into_iter().map(|(a, s)| (a, s.into_iter().collect())).collect();
        NeighborhoodModel::new(frame, val).map_err(|e| e.to_string())
    }
}

impl From<NeighborhoodModel> for ModelJson {
    fn from(m: NeighborhoodModel) -> ModelJson {
        let mut n = BTreeMap::new();
        for &w in m.frame.worlds() {
            let fam = m.frame.family(w).expect("own world");
            n.insert(
                w.to_string(),
                fam.into_iter().map(|s| s.into_iter().collect()).collect(),
            );
        }
        let val = m
            .val
            .iter()
            .map(|(a, &mask)| (a.clone(), m.frame.set_of_mask(mask).into_iter().collect()))
            .collect();
        ModelJson { worlds: m.frame.worlds().to_vec(), n, val }
    }
}

impl Serialize for NeighborhoodModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ModelJson::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for NeighborhoodModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ModelJson::deserialize(d)?;
        NeighborhoodModel::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Builds a model from literal world/set data; convenience for tests and
/// examples.
pub fn model(
    worlds: &[WorldId],
    neighborhoods: &[(WorldId, &[&[WorldId]])],
    val: &[(&str, &[WorldId])],
) -> NeighborhoodModel {
    let neigh: BTreeMap<WorldId, Vec<BTreeSet<WorldId>>> = neighborhoods
        .iter()
        .map(|(w, fam)| (*w, fam.iter().map(|s| s.iter().copied().collect()).collect()))
        .collect();
    let frame = Frame::new(worlds.to_vec(), neigh).expect("well-formed frame");
    let val = val
        .iter()
        .map(|(a, s)| (a.to_string(), s.iter().copied().collect()))
        .collect();
    NeighborhoodModel::new(frame, val).expect("well-formed model")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom("p")
    }

    #[test]
    fn eval_box_clauses() {
        // one world, N(1) = {{1}}, v(p) = {1}
        let m = model(&[1], &[(1, &[&[1]])], &[("p", &[1])]);
        assert!(m.eval(1, &p().boxed()).unwrap());
        assert!(!m.eval(1, &Formula::Bot.boxed()).unwrap());
        assert!(m.eval(2, &p()).is_err());
    }

    #[test]
    fn eval_two_world_example() {
        // N(1) = {W, {1}, {2}}, v(p) = {1}: both []p and []~p hold at 1
        let m = model(
            &[1, 2],
            &[(1, &[&[1, 2], &[1], &[2]]), (2, &[&[1, 2]])],
            &[("p", &[1])],
        );
        let f = p().boxed().and(p().not().boxed());
        assert!(m.eval(1, &f).unwrap());
        assert_eq!(m.falsifying_worlds(&f.clone().not()), vec![1]);
    }

    #[test]
    fn falsifying_worlds_examples() {
        let m = model(&[1], &[(1, &[&[1]])], &[]);
        assert!(m.falsifying_worlds(&p().imp(p())).is_empty());
        assert_eq!(m.falsifying_worlds(&p().boxed()), vec![1]); // v(p) = ∅ ∉ N(1)
    }

    #[test]
    fn frame_construction_rejects_malformed() {
        let neigh: BTreeMap<WorldId, Vec<BTreeSet<WorldId>>> =
            [(1u64, vec![BTreeSet::from([1u64])])].into();
        assert_eq!(Frame::new(vec![], BTreeMap::new()), Err(ModelError::EmptyWorlds));
        // missing W in N(1)
        let bad: BTreeMap<WorldId, Vec<BTreeSet<WorldId>>> =
            [(1u64, vec![]), (2, vec![BTreeSet::from([1, 2])])].into();
        assert_eq!(Frame::new(vec![1, 2], bad), Err(ModelError::MissingUnitSet(1)));
        assert_eq!(
            Frame::new(vec![0, 1], BTreeMap::new()),
            Err(ModelError::ZeroWorld)
        );
        let _ = neigh;
    }

    #[test]
    fn check_frame_examples() {
        // singleton family {W} satisfies every logic
        let f1 = model(&[1, 2], &[(1, &[&[1, 2]]), (2, &[&[1, 2]])], &[]);
        for l in Logic::ALL {
            assert!(check_frame(f1.frame(), l).is_ok());
        }
        // N(1) = {W, {1}, {2}}: breaks C (missing {1} ∩ {2} = ∅) and D ({1}, {2} complementary)
        let f2 = model(&[1, 2], &[(1, &[&[1, 2], &[1], &[2]]), (2, &[&[1, 2]])], &[]);
        let vc = check_frame(f2.frame(), Logic::ECN).unwrap_err();
        assert_eq!(vc.world, 1);
        assert_eq!(vc.property, FrameProperty::CClosure);
        let vd = check_frame(f2.frame(), Logic::END).unwrap_err();
        assert_eq!(vd.world, 1);
        assert_eq!(vd.property, FrameProperty::DComplementFree);
        assert!(check_frame(f2.frame(), Logic::EN).is_ok());
        assert!(check_frame(f2.frame(), Logic::ENP).is_ok());
    }

    #[test]
    fn eval_respects_desugared_iff() {
        let m = model(
            &[1, 2],
            &[(1, &[&[1, 2], &[1]]), (2, &[&[1, 2]])],
            &[("p", &[1]), ("q", &[1, 2])],
        );
        let a = p().boxed();
        let b = Formula::atom("q");
        let iff = Formula::iff(a.clone(), b.clone());
        for w in [1, 2] {
            let direct = m.eval(w, &iff).unwrap();
            let split = m.eval(w, &a.clone().imp(b.clone())).unwrap()
                && m.eval(w, &b.clone().imp(a.clone())).unwrap();
            assert_eq!(direct, split);
        }
    }

    #[test]
    fn json_round_trip() {
        let m = model(
            &[1, 2],
            &[(1, &[&[1, 2], &[1]]), (2, &[&[1, 2]])],
            &[("p", &[1])],
        );
        let js = serde_json::to_string(&m).unwrap();
        assert!(js.contains("\"worlds\":[1,2]"));
        let back: NeighborhoodModel = serde_json::from_str(&js).unwrap();
        assert_eq!(m, back);
        let wire = r#"{"worlds":[1,2],"N":{"1":[[1,2],[1]],"2":[[1,2]]},"val":{"p":[1]}}"#;
        let parsed: NeighborhoodModel = serde_json::from_str(wire).unwrap();
        assert_eq!(parsed, m);
    }
}
