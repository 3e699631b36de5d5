//! Desk-scale staged-provability sandbox.
//!
//! A [`Scenario`] scripts a toy theory: base axioms (always including
//! `~falsum`), a single-conclusion schedule of proof events, and axioms
//! injected mid-run. `P_{T,s}` is the set of formulas with a proof event
//! at stage `<= s` and code `<= s`; a formula therefore enters `P` at
//! `max(stage, code)`, and everything is computed by jumping between
//! those breakpoints — stages live on the code scale and can be
//! astronomically large, so traces never materialize stage-by-stage.
//!
//! The function h watches for the first stage whose `P_{T,s}`
//! tautologically refutes some `lam(j)`; when that fires, the run
//! switches from Procedure 1 (emit the schedule) to Procedure 2, which
//! emits the equivalence closure `X` of `P_{T,s-1}`, the
//! neighborhood-patterned set `Y` read off the catalog model owning the
//! trigger value, and for the g1 variant the conjunction closure `Z`.
//! Per-run checks (E, C, the two consistency statements, the truth
//! lemma, and the Z-pattern witness search) inspect the finished trace.

use crate::catalog::CountermodelCatalog;
use crate::coding::{self, Code};
use crate::formula::Formula;
use crate::neighborhood::WorldId;
use crate::sat::{self, Prop, VarPool};
use crate::toy::ToyFormula;
use num_bigint::BigUint;
use num_traits::CheckedSub;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

/// Hard cap on the materialized conjunction closure.
const Z_BUDGET: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioError {
    LamZero,
    StageZero,
    StageBeyondHorizon(Code),
    StageCollision(Code),
    ScheduleNotJustified { stage: Code, formula: ToyFormula },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::LamZero => write!(f, "lam(0) is forbidden"),
            ScenarioError::StageZero => {
                write!(f, "stage 0 is reserved for the base axioms")
            }
            ScenarioError::StageBeyondHorizon(s) => {
                write!(f, "stage {s} lies beyond the horizon")
            }
            ScenarioError::StageCollision(s) => {
                write!(f, "two proof events share stage {s}")
            }
            ScenarioError::ScheduleNotJustified { stage, formula } => write!(
                f,
                "scheduled formula {formula} at stage {stage} is not a tautological consequence of the axioms visible there"
            ),
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    BaseAxiom,
    Scheduled,
    Injected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub stage: Code,
    pub formula: ToyFormula,
    pub kind: EventKind,
}

impl Event {
    /// Stage at which the formula enters `P`: it needs both its proof
    /// event and a code within `F_s`.
    pub fn entry(&self) -> Code {
        self.stage.clone().max(self.formula.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    base_axioms: Vec<ToyFormula>,
    schedule: BTreeMap<Code, ToyFormula>,
    injections: BTreeMap<Code, ToyFormula>,
    horizon: Code,
}

fn contains_lam_zero(f: &ToyFormula) -> bool {
    match f {
        ToyFormula::Lam(0) => true,
        ToyFormula::Bot
        | ToyFormula::Falsum
        | ToyFormula::Lam(_)
        | ToyFormula::Letter(_)
        | ToyFormula::BoxMarker(_) => false,
        ToyFormula::Not(x) => contains_lam_zero(x),
        ToyFormula::And(l, r) | ToyFormula::Or(l, r) | ToyFormula::Imp(l, r) => {
            contains_lam_zero(l) || contains_lam_zero(r)
        }
    }
}

impl Scenario {
    /// Validates and normalizes: `~falsum` is added to the base axioms if
    /// missing; schedule and injection stages must be distinct, nonzero,
    /// and within the horizon; every scheduled formula must be a
    /// tautological consequence of the axioms visible at its stage.
    /// Injected formulas are axioms and need no justification.
    pub fn new(
        mut base_axioms: Vec<ToyFormula>,
        schedule: BTreeMap<Code, ToyFormula>,
        injections: BTreeMap<Code, ToyFormula>,
        horizon: Code,
    ) -> Result<Scenario, ScenarioError> {
        let not_falsum = ToyFormula::Falsum.not();
        if !base_axioms.contains(&not_falsum) {
            base_axioms.insert(0, not_falsum);
        }
        for f in base_axioms
            .iter()
            .chain(schedule.values())
            .chain(injections.values())
        {
            if contains_lam_zero(f) {
                return Err(ScenarioError::LamZero);
            }
        }
        for stage in schedule.keys().chain(injections.keys()) {
            if stage.is_zero() {
                return Err(ScenarioError::StageZero);
            }
            if *stage > horizon {
                return Err(ScenarioError::StageBeyondHorizon(stage.clone()));
            }
        }
        for stage in schedule.keys() {
            if injections.contains_key(stage) {
                return Err(ScenarioError::StageCollision(stage.clone()));
            }
        }
        let sc = Scenario { base_axioms, schedule, injections, horizon };
        // single-conclusion justification of the schedule
        let mut pool = VarPool::new();
        for (stage, formula) in &sc.schedule {
            let visible: Vec<Prop> = sc
                .base_axioms
                .iter()
                .chain(
                    sc.injections
                        .iter()
                        .filter(|(s, _)| *s <= stage)
                        .map(|(_, f)| f),
                )
                .map(|f| sat::toy_to_prop(f, &mut pool))
                .collect();
            let goal = sat::toy_to_prop(formula, &mut pool);
            if !sat::entails(&visible, &goal, pool.len() as u32) {
                return Err(ScenarioError::ScheduleNotJustified {
                    stage: stage.clone(),
                    formula: formula.clone(),
                });
            }
        }
        Ok(sc)
    }

    pub fn horizon(&self) -> &Code {
        &self.horizon
    }

    pub fn base_axioms(&self) -> &[ToyFormula] {
        &self.base_axioms
    }

    pub fn schedule(&self) -> &BTreeMap<Code, ToyFormula> {
        &self.schedule
    }

    pub fn injections(&self) -> &BTreeMap<Code, ToyFormula> {
        &self.injections
    }

    /// Every proof event: base axioms at stage 0, then the schedule and
    /// the injections, ordered by stage.
    pub fn events(&self) -> Vec<Event> {
        let mut out: Vec<Event> = self
            .base_axioms
            .iter()
            .map(|f| Event { stage: Code::zero(), formula: f.clone(), kind: EventKind::BaseAxiom })
            .collect();
        out.extend(self.schedule.iter().map(|(s, f)| Event {
            stage: s.clone(),
            formula: f.clone(),
            kind: EventKind::Scheduled,
        }));
        out.extend(self.injections.iter().map(|(s, f)| Event {
            stage: s.clone(),
            formula: f.clone(),
            kind: EventKind::Injected,
        }));
        out.sort_by(|a, b| a.stage.cmp(&b.stage).then_with(|| a.formula.code().cmp(&b.formula.code())));
        out
    }

    /// `P_{T,s}`: formulas whose proof event and code both fit below `s`.
    pub fn p_at(&self, s: &Code) -> BTreeSet<ToyFormula> {
        self.events()
            .into_iter()
            .filter(|e| e.entry() <= *s)
            .map(|e| e.formula)
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    #[serde(default)]
    axioms: Vec<ToyFormula>,
    #[serde(default)]
    schedule: BTreeMap<String, ToyFormula>,
    #[serde(default)]
    inject: Vec<(Code, ToyFormula)>,
    horizon: Code,
}

impl TryFrom<ScenarioJson> for Scenario {
    type Error = String;
    fn try_from(j: ScenarioJson) -> Result<Self, String> {
        let mut schedule = BTreeMap::new();
        for (k, v) in j.schedule {
            let stage: Code = k.parse()?;
            if schedule.insert(stage.clone(), v).is_some() {
                return Err(format!("duplicate schedule stage {stage}"));
            }
        }
        let mut injections = BTreeMap::new();
        for (stage, f) in j.inject {
            if injections.insert(stage.clone(), f).is_some() {
                return Err(format!("duplicate injection stage {stage}"));
            }
        }
        Scenario::new(j.axioms, schedule, injections, j.horizon).map_err(|e| e.to_string())
    }
}

impl From<Scenario> for ScenarioJson {
    fn from(sc: Scenario) -> ScenarioJson {
        ScenarioJson {
            axioms: sc.base_axioms,
            schedule: sc.schedule.into_iter().map(|(s, f)| (s.to_string(), f)).collect(),
            inject: sc.injections.into_iter().collect(),
            horizon: sc.horizon,
        }
    }
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ScenarioJson::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ScenarioJson::deserialize(d)?;
        Scenario::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Tautological consequence over the toy language.
pub fn taut_consequence(premises: &BTreeSet<ToyFormula>, goal: &ToyFormula) -> bool {
    let mut pool = VarPool::new();
    let props: Vec<Prop> = premises.iter().map(|f| sat::toy_to_prop(f, &mut pool)).collect();
    let g = sat::toy_to_prop(goal, &mut pool);
    sat::entails(&props, &g, pool.len() as u32)
}

/// Undirected reachability graph whose edges are the (desugared)
/// biconditional members of a formula set.
struct EquivGraph {
    adj: BTreeMap<ToyFormula, BTreeSet<ToyFormula>>,
}

impl EquivGraph {
    fn from_members<'a>(members: impl Iterator<Item = &'a ToyFormula>) -> EquivGraph {
        let mut adj: BTreeMap<ToyFormula, BTreeSet<ToyFormula>> = BTreeMap::new();
        for m in members {
            if let Some((a, b)) = m.as_iff() {
                adj.entry(a.clone()).or_default().insert(b.clone());
                adj.entry(b.clone()).or_default().insert(a.clone());
            }
        }
        EquivGraph { adj }
    }

    /// Everything reachable from the seeds, seeds included.
    fn reach(&self, seeds: impl Iterator<Item = ToyFormula>) -> BTreeSet<ToyFormula> {
        let mut seen: BTreeSet<ToyFormula> = seeds.collect();
        let mut queue: VecDeque<ToyFormula> = seen.iter().cloned().collect();
        while let Some(f) = queue.pop_front() {
            if let Some(next) = self.adj.get(&f) {
                for g in next {
                    if seen.insert(g.clone()) {
                        queue.push_back(g.clone());
                    }
                }
            }
        }
        seen
    }
}

/// The chain equivalence `<->_m`: reachability through biconditionals
/// present in `premises` (reflexive via the empty chain, transitive by
/// construction).
pub fn equiv_m(premises: &BTreeSet<ToyFormula>, a: &ToyFormula, b: &ToyFormula) -> bool {
    if a == b {
        return true;
    }
    let graph = EquivGraph::from_members(premises.iter());
    graph.reach(std::iter::once(a.clone())).contains(b)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JRecord {
    pub stage: Code,
    /// `P_{T,stage}` is propositionally inconsistent, so every positive
    /// integer is in `J` and its minimum is 1.
    pub inconsistent: bool,
    /// Consequence lambda-indices among those occurring in `P_{T,stage}`
    /// (exhaustive when consistent: a fresh atom is never refuted).
    pub js: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HTrace {
    /// `(s, i)` with `h(s) = 0` and `h(s+1) = i`.
    pub trigger: Option<(Code, u64)>,
    pub horizon: Code,
    /// J at each breakpoint stage where `P` grows; constant in between.
    pub j_records: Vec<JRecord>,
    /// Run-length encoding of `h(0..=horizon)` as (value, run length).
    pub values_rle: Vec<(u64, Code)>,
}

impl HTrace {
    pub fn value_at(&self, s: &Code) -> u64 {
        match &self.trigger {
            Some((ts, i)) if s > ts => *i,
            _ => 0,
        }
    }

    fn build_rle(trigger: &Option<(Code, u64)>, horizon: &Code) -> Vec<(u64, Code)> {
        match trigger {
            None => vec![(0, horizon.succ())],
            Some((ts, i)) => {
                let zeros = ts.succ();
                let rest = horizon.checked_sub(ts).expect("trigger within horizon");
                vec![(0, zeros), (*i, rest)]
            }
        }
    }
}

/// Runs the recursion of h by jumping between the breakpoints where `P`
/// grows. `h(0) = 0`; at the first stage `s` with `J_s` nonempty,
/// `h(s+1) = min J_s` and the value persists.
pub fn run_h(sc: &Scenario) -> Result<HTrace, SandboxError> {
    let mut entries: Vec<(Code, Event)> = sc
        .events()
        .into_iter()
        .map(|e| (e.entry(), e))
        .filter(|(entry, _)| *entry <= *sc.horizon())
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.formula.code().cmp(&b.1.formula.code())));

    let mut pool: VarPool<ToyFormula> = VarPool::new();
    let mut premises: Vec<Prop> = Vec::new();
    let mut occurring: BTreeSet<u64> = BTreeSet::new();
    let mut js: BTreeSet<u64> = BTreeSet::new();
    let mut inconsistent = false;
    let mut j_records = Vec::new();
    let mut trigger: Option<(Code, u64)> = None;

    let mut idx = 0;
    while idx < entries.len() {
        let breakpoint = entries[idx].0.clone();
        while idx < entries.len() && entries[idx].0 == breakpoint {
            let f = &entries[idx].1.formula;
            premises.push(sat::toy_to_prop(f, &mut pool));
            f.lam_indices(&mut occurring);
            idx += 1;
        }
        if !inconsistent && !sat::satisfiable(&premises, pool.len() as u32) {
            inconsistent = true;
        }
        if !inconsistent {
            // consequences are monotone in P, so established js persist
            let candidates: Vec<u64> =
                occurring.iter().copied().filter(|j| !js.contains(j)).collect();
            for j in candidates {
                let goal = sat::toy_to_prop(&ToyFormula::Lam(j).not(), &mut pool);
                if sat::entails(&premises, &goal, pool.len() as u32) {
                    js.insert(j);
                }
            }
        }
        j_records.push(JRecord {
            stage: breakpoint.clone(),
            inconsistent,
            js: js.iter().copied().collect(),
        });
        if trigger.is_none() && (inconsistent || !js.is_empty()) && breakpoint < *sc.horizon() {
            let i = if inconsistent { 1 } else { *js.iter().next().expect("nonempty") };
            // h(s+1) = i forces i <= s+1
            assert!(
                Code::from_u64(i) <= breakpoint.succ(),
                "h bound violated: value {i} at stage {breakpoint}"
            );
            trigger = Some((breakpoint, i));
        }
    }
    let values_rle = HTrace::build_rle(&trigger, sc.horizon());
    Ok(HTrace { trigger, horizon: sc.horizon().clone(), j_records, values_rle })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GVariant {
    #[serde(rename = "g0")]
    G0,
    #[serde(rename = "g1")]
    G1,
}

impl fmt::Display for GVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GVariant::G0 => "g0",
            GVariant::G1 => "g1",
        })
    }
}

impl std::str::FromStr for GVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "g0" => Ok(GVariant::G0),
            "g1" => Ok(GVariant::G1),
            _ => Err(format!("unknown variant {s:?}; expected g0 or g1")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcedureSets {
    pub p: BTreeSet<ToyFormula>,
    pub x: BTreeSet<ToyFormula>,
    pub y: BTreeSet<ToyFormula>,
    /// Conjunction-closure levels, g1 only. Level 0 is `P ∪ X ∪ Y`.
    pub z_levels: Option<Vec<BTreeSet<ToyFormula>>>,
}

impl ProcedureSets {
    pub fn z(&self) -> Option<BTreeSet<ToyFormula>> {
        self.z_levels.as_ref().map(|ls| ls.iter().flatten().cloned().collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SandboxError {
    Scenario(ScenarioError),
    TriggerAbsent,
    TriggerWorldNotInCatalog(u64),
    EntryOutOfRange(usize),
    WorldNotInBlock { k: usize, i: u64 },
    HorizonTooSmall { needed: Code },
    AlreadyTriggers(ToyFormula),
    SeedingDidNotTrigger { expected: (Code, u64), got: Option<(Code, u64)> },
    ZBudgetExceeded(usize),
    UnknownAtom(String),
    UnresolvableAtom(ToyFormula),
    UndecodableMarker(Code),
    Model(String),
}

impl fmt::Display for SandboxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SandboxError::Scenario(e) => write!(f, "{e}"),
            SandboxError::TriggerAbsent => write!(f, "the run never triggered"),
            SandboxError::TriggerWorldNotInCatalog(i) => {
                write!(f, "trigger value {i} lies outside every catalog block")
            }
            SandboxError::EntryOutOfRange(k) => write!(f, "catalog has no entry {k}"),
            SandboxError::WorldNotInBlock { k, i } => {
                write!(f, "world {i} is not in entry {k}'s block")
            }
            SandboxError::HorizonTooSmall { needed } => {
                write!(f, "horizon too small: the seeded trigger needs stage {needed}")
            }
            SandboxError::AlreadyTriggers(t) => {
                write!(f, "scenario already contains the trigger formula {t}")
            }
            SandboxError::SeedingDidNotTrigger { expected, got } => write!(
                f,
                "seeded run did not trigger as placed (expected {:?}, got {:?})",
                expected, got
            ),
            SandboxError::ZBudgetExceeded(n) => {
                write!(f, "conjunction closure exceeded the budget at {n} members")
            }
            SandboxError::UnknownAtom(a) => {
                write!(f, "atom {a:?} does not appear in the catalog's valuations")
            }
            SandboxError::UnresolvableAtom(t) => {
                write!(f, "cannot resolve {t} against the standard run")
            }
            SandboxError::UndecodableMarker(c) => {
                write!(f, "box marker index {c} does not decode to a toy formula")
            }
            SandboxError::Model(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for SandboxError {}

impl From<ScenarioError> for SandboxError {
    fn from(e: ScenarioError) -> Self {
        SandboxError::Scenario(e)
    }
}

/// The sets of Procedure 2 at a fired trigger `(s, i)`:
/// `X` is the chain-equivalence closure of `P_{T,s-1}`; `Y` collects the
/// formulas carrying a neighborhood pattern over the model owning `i`
/// (some `V ∈ N_k(i)` with `lam(j) -> φ` a member of `P_{T,s-1}` for all
/// `j ∈ V` and `lam(j) -> ~φ` a member for all other block worlds),
/// closed under chains; for g1 the levels `Z_0 = P ∪ X ∪ Y`,
/// `Z_{n+1} = {ρ ∈ F_{s-1} : φ∧ψ <->_{s-1} ρ for some φ, ψ so far}` are
/// iterated to fixpoint.
pub fn procedure2_sets(
    variant: GVariant,
    sc: &Scenario,
    trigger: (&Code, u64),
    cat: &CountermodelCatalog,
) -> Result<ProcedureSets, SandboxError> {
    let (s, i) = trigger;
    let sm1 = s.pred().ok_or(SandboxError::TriggerAbsent)?;
    let (k, _) = cat.world_owner(i).ok_or(SandboxError::TriggerWorldNotInCatalog(i))?;
    let entry = cat.entry(k).expect("owner is in range");
    let model = &entry.model;
    let block_worlds: Vec<WorldId> = model.worlds().to_vec();

    let p = sc.p_at(&sm1);
    let graph = EquivGraph::from_members(p.iter());
    let x = graph.reach(p.iter().cloned());
    let x: BTreeSet<ToyFormula> = x.into_iter().filter(|f| f.code() <= sm1).collect();

    // neighborhood-pattern candidates come from the lam-implication members
    let mut pos: BTreeMap<u64, BTreeSet<ToyFormula>> = BTreeMap::new();
    let mut neg: BTreeMap<u64, BTreeSet<ToyFormula>> = BTreeMap::new();
    for m in &p {
        if let ToyFormula::Imp(l, r) = m {
            if let ToyFormula::Lam(j) = l.as_ref() {
                if block_worlds.contains(j) {
                    pos.entry(*j).or_default().insert(r.as_ref().clone());
                    if let ToyFormula::Not(inner) = r.as_ref() {
                        neg.entry(*j).or_default().insert(inner.as_ref().clone());
                    }
                }
            }
        }
    }
    let mut candidates: BTreeSet<ToyFormula> = BTreeSet::new();
    candidates.extend(pos.values().flatten().cloned());
    candidates.extend(neg.values().flatten().cloned());
    let family = model.frame().family(i).map_err(|e| SandboxError::Model(e.to_string()))?;
    let empty = BTreeSet::new();
    let mut passers: BTreeSet<ToyFormula> = BTreeSet::new();
    for phi in &candidates {
        let passes = family.iter().any(|v| {
            block_worlds.iter().all(|j| {
                if v.contains(j) {
                    pos.get(j).unwrap_or(&empty).contains(phi)
                } else {
                    neg.get(j).unwrap_or(&empty).contains(phi)
                }
            })
        });
        if passes {
            passers.insert(phi.clone());
        }
    }
    let y: BTreeSet<ToyFormula> = graph
        .reach(passers.into_iter())
        .into_iter()
        .filter(|f| f.code() <= sm1)
        .collect();

    let z_levels = match variant {
        GVariant::G0 => None,
        GVariant::G1 => Some(conjunction_closure(&p, &x, &y, &graph, &sm1)?),
    };
    Ok(ProcedureSets { p, x, y, z_levels })
}

fn conjunction_closure(
    p: &BTreeSet<ToyFormula>,
    x: &BTreeSet<ToyFormula>,
    y: &BTreeSet<ToyFormula>,
    graph: &EquivGraph,
    sm1: &Code,
) -> Result<Vec<BTreeSet<ToyFormula>>, SandboxError> {
    let mut level0: BTreeSet<ToyFormula> = BTreeSet::new();
    level0.extend(p.iter().cloned());
    level0.extend(x.iter().cloned());
    level0.extend(y.iter().cloned());
    let mut levels = vec![level0.clone()];
    let mut union: BTreeMap<ToyFormula, Code> =
        level0.into_iter().map(|f| (f.code(), f)).map(|(c, f)| (f, c)).collect();

    // a conjunction's code is 8*cantor + 4 and cantor(a,b) >= (a+b)^2/2,
    // so members can only pair up while code(φ) + code(ψ) stays below
    // sqrt((s-1-4)/4); everything else is pruned before pairing
    let sum_bound = match sm1.big().checked_sub(&BigUint::from(4u8)) {
        Some(room) => Code::from_big(coding::isqrt(&(room / 4u8))),
        None => Code::zero(),
    };

    loop {
        let smalls: Vec<(&ToyFormula, &Code)> =
            union.iter().filter(|(_, c)| **c <= sum_bound).collect();
        let mut next: BTreeSet<ToyFormula> = BTreeSet::new();
        for (phi, cphi) in &smalls {
            for (psi, cpsi) in &smalls {
                if (*cphi + cpsi) > sum_bound {
                    continue;
                }
                let conj = (*phi).clone().and((*psi).clone());
                if conj.code() > *sm1 {
                    continue;
                }
                for rho in graph.reach(std::iter::once(conj)) {
                    if rho.code() <= *sm1 {
                        next.insert(rho);
                    }
                }
            }
        }
        let fresh: Vec<ToyFormula> =
            next.iter().filter(|f| !union.contains_key(*f)).cloned().collect();
        if fresh.is_empty() {
            break;
        }
        levels.push(next);
        for f in fresh {
            let c = f.code();
            union.insert(f, c);
            if union.len() > Z_BUDGET {
                return Err(SandboxError::ZBudgetExceeded(union.len()));
            }
        }
    }
    Ok(levels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase2 {
    pub s: Code,
    pub i: u64,
    pub k: usize,
    pub p_before: Vec<ToyFormula>,
    pub x: Vec<ToyFormula>,
    pub y: Vec<ToyFormula>,
    pub z_levels: Option<Vec<Vec<ToyFormula>>>,
    /// The enumeration χ_0, ..., χ_{l-1} emitted from stage s on.
    pub block: Vec<ToyFormula>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GTrace {
    pub variant: GVariant,
    pub logic: crate::formula::Logic,
    pub catalog: CountermodelCatalog,
    pub h: HTrace,
    /// Procedure 1 output: the proof events emitted before the switch.
    pub phase1: Vec<(Code, ToyFormula)>,
    pub phase2: Option<Phase2>,
}

impl GTrace {
    /// Everything the run ever outputs; `Pr_g(φ)` is membership here.
    pub fn output(&self) -> BTreeSet<ToyFormula> {
        let mut out: BTreeSet<ToyFormula> =
            self.phase1.iter().map(|(_, f)| f.clone()).collect();
        if let Some(p2) = &self.phase2 {
            out.extend(p2.block.iter().cloned());
        }
        out
    }

    /// `P_{T,bound}` reconstructed from the trace: the stored set at the
    /// trigger, or the phase-1 events that fit under the horizon.
    fn p_for_checks(&self) -> BTreeSet<ToyFormula> {
        match &self.phase2 {
            Some(p2) => p2.p_before.iter().cloned().collect(),
            None => self
                .phase1
                .iter()
                .filter(|(_, f)| f.code() <= self.h.horizon)
                .map(|(_, f)| f.clone())
                .collect(),
        }
    }
}

fn sort_by_code(set: &BTreeSet<ToyFormula>) -> Vec<ToyFormula> {
    let mut v: Vec<(Code, ToyFormula)> = set.iter().map(|f| (f.code(), f.clone())).collect();
    v.sort();
    v.into_iter().map(|(_, f)| f).collect()
}

/// Runs the staged construction: Procedure 1 emits the schedule while h
/// stays zero; at the trigger the run switches to Procedure 2 and emits
/// the block (X ∪ Y for g0, Z for g1) in code order.
pub fn run_g(
    variant: GVariant,
    sc: &Scenario,
    cat: &CountermodelCatalog,
) -> Result<GTrace, SandboxError> {
    let h = run_h(sc)?;
    let events = sc.events();
    match h.trigger.clone() {
        None => {
            let phase1 = events
                .into_iter()
                .filter(|e| e.stage <= *sc.horizon())
                .map(|e| (e.stage, e.formula))
                .collect();
            Ok(GTrace { variant, logic: cat.logic, catalog: cat.clone(), h, phase1, phase2: None })
        }
        Some((s, i)) => {
            let sets = procedure2_sets(variant, sc, (&s, i), cat)?;
            let (k, _) = cat.world_owner(i).expect("validated by procedure2_sets");
            let block_set: BTreeSet<ToyFormula> = match variant {
                GVariant::G0 => sets.x.union(&sets.y).cloned().collect(),
                GVariant::G1 => sets.z().expect("g1 computes z"),
            };
            let phase1 = events
                .into_iter()
                .filter(|e| e.stage < s)
                .map(|e| (e.stage, e.formula))
                .collect();
            let phase2 = Phase2 {
                s,
                i,
                k,
                p_before: sort_by_code(&sets.p),
                x: sort_by_code(&sets.x),
                y: sort_by_code(&sets.y),
                z_levels: sets.z_levels.as_ref().map(|ls| ls.iter().map(sort_by_code).collect()),
                block: sort_by_code(&block_set),
            };
            Ok(GTrace {
                variant,
                logic: cat.logic,
                catalog: cat.clone(),
                h,
                phase1,
                phase2: Some(phase2),
            })
        }
    }
}

/// Arithmetical-interpretation analogue over a catalog: an atom becomes
/// the disjunction of `lam(i)` over the catalog worlds where it holds
/// (the designated false sentence when there are none), `false` becomes
/// `falsum`, connectives commute, and a boxed formula becomes the box
/// marker indexed by its body's image code.
pub fn interpret(cat: &CountermodelCatalog, f: &Formula) -> Result<ToyFormula, SandboxError> {
    let known: BTreeSet<&str> = cat
        .entries
        .iter()
        .flat_map(|e| e.model.valued_atoms())
        .collect();
    interpret_memo(cat, f, &known, &mut BTreeMap::new())
}

fn interpret_memo(
    cat: &CountermodelCatalog,
    f: &Formula,
    known: &BTreeSet<&str>,
    memo: &mut BTreeMap<Formula, ToyFormula>,
) -> Result<ToyFormula, SandboxError> {
    if let Some(t) = memo.get(f) {
        return Ok(t.clone());
    }
    let out = match f {
        Formula::Bot => ToyFormula::Falsum,
        Formula::Atom(a) => {
            if !known.contains(a.as_str()) {
                return Err(SandboxError::UnknownAtom(a.clone()));
            }
            let mut worlds: BTreeSet<WorldId> = BTreeSet::new();
            for e in &cat.entries {
                worlds.extend(e.model.valuation(a));
            }
            let mut it = worlds.into_iter();
            match it.next() {
                None => ToyFormula::Falsum,
                Some(first) => {
                    it.fold(ToyFormula::Lam(first), |acc, w| acc.or(ToyFormula::Lam(w)))
                }
            }
        }
        Formula::Not(x) => interpret_memo(cat, x, known, memo)?.not(),
        Formula::And(l, r) => {
            interpret_memo(cat, l, known, memo)?.and(interpret_memo(cat, r, known, memo)?)
        }
        Formula::Or(l, r) => {
            interpret_memo(cat, l, known, memo)?.or(interpret_memo(cat, r, known, memo)?)
        }
        Formula::Imp(l, r) => {
            interpret_memo(cat, l, known, memo)?.imp(interpret_memo(cat, r, known, memo)?)
        }
        Formula::Box(x) => {
            let body = interpret_memo(cat, x, known, memo)?;
            ToyFormula::BoxMarker(body.code())
        }
    };
    memo.insert(f.clone(), out.clone());
    Ok(out)
}

/// Seeds a scenario so that a later run triggers at world `i` of entry
/// `k` with the whole truth-lemma pattern in place: for every subformula
/// `C` of every battery formula and every block world `j`, the axiom
/// `lam(j) -> f(C)` (when `j` satisfies `C`) or `lam(j) -> ~f(C)` (when
/// it does not) is injected, and `~lam(i)` is injected at the first stage
/// past every entry point, so all seeded codes sit below the trigger.
/// The seeded run is dry-run once to confirm the trigger lands exactly
/// there.
pub fn seed_battery(
    sc: &Scenario,
    cat: &CountermodelCatalog,
    k: usize,
    i: u64,
    battery: &[Formula],
) -> Result<Scenario, SandboxError> {
    let entry = cat.entry(k).ok_or(SandboxError::EntryOutOfRange(k))?;
    if !(entry.block.0 <= i && i <= entry.block.1) {
        return Err(SandboxError::WorldNotInBlock { k, i });
    }
    let model = &entry.model;
    let mut subs: BTreeSet<Formula> = BTreeSet::new();
    for b in battery {
        subs.extend(b.subformula_closure());
    }
    let mut seeds: BTreeSet<ToyFormula> = BTreeSet::new();
    for c in &subs {
        let fc = interpret(cat, c)?;
        let truth = model.truth_set(c);
        for &j in model.worlds() {
            let seed = if truth.contains(&j) {
                ToyFormula::Lam(j).imp(fc.clone())
            } else {
                ToyFormula::Lam(j).imp(fc.clone().not())
            };
            seeds.insert(seed);
        }
    }
    let trigger_formula = ToyFormula::Lam(i).not();
    let existing: BTreeSet<&ToyFormula> = sc
        .base_axioms
        .iter()
        .chain(sc.schedule.values())
        .chain(sc.injections.values())
        .collect();
    if existing.contains(&trigger_formula) {
        return Err(SandboxError::AlreadyTriggers(trigger_formula));
    }

    let mut injections = sc.injections.clone();
    let occupied: BTreeSet<Code> =
        sc.schedule.keys().chain(injections.keys()).cloned().collect();
    let mut stage = Code::from_u64(1);
    let mut next_free = move |occupied: &BTreeSet<Code>, extra: &BTreeMap<Code, ToyFormula>| {
        loop {
            let candidate = stage.clone();
            stage = stage.succ();
            if !occupied.contains(&candidate) && !extra.contains_key(&candidate) {
                return candidate;
            }
        }
    };
    for seed in sort_by_code(&seeds) {
        if existing.contains(&seed) || injections.values().any(|f| *f == seed) {
            continue;
        }
        let at = next_free(&occupied, &injections);
        injections.insert(at, seed);
    }

    // the trigger goes right past every entry point, so every seed's code
    // sits strictly below the trigger stage
    let mut max_entry = Code::zero();
    let probe = Scenario {
        base_axioms: sc.base_axioms.clone(),
        schedule: sc.schedule.clone(),
        injections: injections.clone(),
        horizon: sc.horizon.clone(),
    };
    for e in probe.events() {
        max_entry = max_entry.max(e.entry());
    }
    let trigger_stage = max_entry.succ();
    if trigger_stage > *sc.horizon() {
        return Err(SandboxError::HorizonTooSmall { needed: trigger_stage });
    }
    injections.insert(trigger_stage.clone(), trigger_formula);

    let seeded = Scenario::new(
        sc.base_axioms.clone(),
        sc.schedule.clone(),
        injections,
        sc.horizon.clone(),
    )?;
    let h = run_h(&seeded)?;
    let expected = (trigger_stage, i);
    if h.trigger.as_ref() != Some(&expected) {
        return Err(SandboxError::SeedingDidNotTrigger { expected, got: h.trigger });
    }
    Ok(seeded)
}

/// Single-formula seeding.
pub fn seed_truth_lemma(
    sc: &Scenario,
    cat: &CountermodelCatalog,
    k: usize,
    i: u64,
    b: &Formula,
) -> Result<Scenario, SandboxError> {
    seed_battery(sc, cat, k, i, std::slice::from_ref(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check {
    /// Respect for proved equivalence: for each biconditional member of
    /// `P_{T,s-1}`, both sides are output or neither is.
    E,
    /// Conjunction aggregation (g1): outputs pair up under ∧ whenever the
    /// conjunction's code fits below the trigger stage.
    C,
    /// `falsum` is never output.
    ConL,
    /// No formula is output together with its negation.
    ConS,
    /// Truth lemma at the trigger: each battery formula holds at the
    /// trigger world iff its interpretation tracks the trace.
    TruthLemma { k: usize, i: u64, battery: Vec<Formula> },
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::E => write!(f, "E"),
            Check::C => write!(f, "C"),
            Check::ConL => write!(f, "ConL"),
            Check::ConS => write!(f, "ConS"),
            Check::TruthLemma { k, i, .. } => write!(f, "TruthLemma(k={k}, i={i})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Passed,
    Failed,
    /// The check does not apply to this run (for example C on a g0 run).
    NotClaimed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub status: CheckStatus,
    pub detail: String,
}

fn report(check: &Check, status: CheckStatus, detail: impl Into<String>) -> CheckReport {
    CheckReport { check: check.to_string(), status, detail: detail.into() }
}

/// Truth of a toy formula in the standard reading of a finished run:
/// `lam(j)` is true iff `j` is the trigger value, `falsum` is false, and
/// a box marker is true iff the formula it codes is output by the run.
pub fn trace_truth(t: &GTrace, f: &ToyFormula) -> Result<bool, SandboxError> {
    let out = t.output();
    let lam_value = t.h.trigger.as_ref().map(|(_, i)| *i);
    truth_rec(f, &out, lam_value)
}

fn truth_rec(
    f: &ToyFormula,
    out: &BTreeSet<ToyFormula>,
    lam_value: Option<u64>,
) -> Result<bool, SandboxError> {
    Ok(match f {
        ToyFormula::Bot | ToyFormula::Falsum => false,
        ToyFormula::Lam(j) => lam_value == Some(*j),
        ToyFormula::Letter(_) => return Err(SandboxError::UnresolvableAtom(f.clone())),
        ToyFormula::BoxMarker(c) => {
            let inner = ToyFormula::decode(c).ok_or(SandboxError::UndecodableMarker(c.clone()))?;
            out.contains(&inner)
        }
        ToyFormula::Not(x) => !truth_rec(x, out, lam_value)?,
        ToyFormula::And(l, r) => truth_rec(l, out, lam_value)? && truth_rec(r, out, lam_value)?,
        ToyFormula::Or(l, r) => truth_rec(l, out, lam_value)? || truth_rec(r, out, lam_value)?,
        ToyFormula::Imp(l, r) => !truth_rec(l, out, lam_value)? || truth_rec(r, out, lam_value)?,
    })
}

pub fn verify_run(t: &GTrace, check: &Check) -> CheckReport {
    match check {
        Check::E => {
            let out = t.output();
            let p = t.p_for_checks();
            for m in &p {
                if let Some((a, b)) = m.as_iff() {
                    if out.contains(a) != out.contains(b) {
                        return report(
                            check,
                            CheckStatus::Failed,
                            format!("{a} and {b} are provably equivalent but only one is output"),
                        );
                    }
                }
            }
            report(check, CheckStatus::Passed, format!("{} biconditional members respected", p.iter().filter(|m| m.as_iff().is_some()).count()))
        }
        Check::C => {
            if t.variant != GVariant::G1 {
                return report(check, CheckStatus::NotClaimed, "C is a g1 property");
            }
            let bound = match &t.phase2 {
                Some(p2) => p2.s.clone(),
                None => t.h.horizon.succ(),
            };
            let out = t.output();
            let coded: Vec<(Code, &ToyFormula)> = out.iter().map(|f| (f.code(), f)).collect();
            let sum_bound = match bound.big().checked_sub(&BigUint::from(5u8)) {
                Some(room) => Code::from_big(coding::isqrt(&(room / 4u8))),
                None => Code::zero(),
            };
            let mut pairs = 0usize;
            for (ca, a) in &coded {
                if *ca > sum_bound {
                    continue;
                }
                for (cb, b) in &coded {
                    if (ca + cb) > sum_bound {
                        continue;
                    }
                    let conj = (*a).clone().and((*b).clone());
                    if conj.code() >= bound {
                        continue;
                    }
                    pairs += 1;
                    if !out.contains(&conj) {
                        return report(
                            check,
                            CheckStatus::Failed,
                            format!("{a} and {b} are output but {conj} is not"),
                        );
                    }
                }
            }
            report(check, CheckStatus::Passed, format!("{pairs} in-range conjunctions present"))
        }
        Check::ConL => {
            if t.output().contains(&ToyFormula::Falsum) {
                report(check, CheckStatus::Failed, "falsum is output")
            } else {
                report(check, CheckStatus::Passed, "falsum is never output")
            }
        }
        Check::ConS => {
            let out = t.output();
            for f in &out {
                if let ToyFormula::Not(inner) = f {
                    if out.contains(inner.as_ref()) {
                        return report(
                            check,
                            CheckStatus::Failed,
                            format!("both {inner} and its negation are output"),
                        );
                    }
                }
            }
            report(check, CheckStatus::Passed, "no formula is output with its negation")
        }
        Check::TruthLemma { k, i, battery } => {
            let (ts_i, p2) = match (&t.h.trigger, &t.phase2) {
                (Some((_, ti)), Some(p2)) => (*ti, p2),
                _ => {
                    return report(check, CheckStatus::NotClaimed, "run did not trigger")
                }
            };
            if ts_i != *i || p2.k != *k {
                return report(
                    check,
                    CheckStatus::NotClaimed,
                    format!("run triggered at world {} of entry {}, not ({i}, {k})", ts_i, p2.k),
                );
            }
            let entry = match t.catalog.entry(*k) {
                Some(e) => e,
                None => return report(check, CheckStatus::Failed, "entry out of range"),
            };
            for b in battery {
                let expected = match entry.model.eval(*i, b) {
                    Ok(v) => v,
                    Err(e) => return report(check, CheckStatus::Failed, e.to_string()),
                };
                let image = match interpret(&t.catalog, b) {
                    Ok(f) => f,
                    Err(e) => return report(check, CheckStatus::Failed, e.to_string()),
                };
                let got = match trace_truth(t, &image) {
                    Ok(v) => v,
                    Err(e) => return report(check, CheckStatus::Failed, e.to_string()),
                };
                if expected != got {
                    return report(
                        check,
                        CheckStatus::Failed,
                        format!(
                            "world {i} {} {b} but the trace reading of {image} is {got}",
                            if expected { "satisfies" } else { "falsifies" }
                        ),
                    );
                }
            }
            report(check, CheckStatus::Passed, format!("{} battery formulas agree", battery.len()))
        }
    }
}

/// Witness search for the Z-pattern: every member of Z must admit some
/// `V ∈ N_k(i)` with `P_{T,s-1}` tautologically giving `lam(j) -> ρ` on
/// `V` and `lam(j) -> ~ρ` off it.
pub fn ecn4_report(t: &GTrace) -> CheckReport {
    let name = "ECN4".to_string();
    let p2 = match (&t.variant, &t.phase2) {
        (GVariant::G1, Some(p2)) => p2,
        (GVariant::G0, _) => {
            return CheckReport {
                check: name,
                status: CheckStatus::NotClaimed,
                detail: "the Z-pattern concerns g1 runs".into(),
            }
        }
        _ => {
            return CheckReport {
                check: name,
                status: CheckStatus::NotClaimed,
                detail: "run did not trigger".into(),
            }
        }
    };
    let entry = t.catalog.entry(p2.k).expect("trace entry exists");
    let model = &entry.model;
    let family = model
        .frame()
        .family(p2.i)
        .expect("trigger world is in the model");
    let worlds = model.worlds().to_vec();

    let mut pool: VarPool<ToyFormula> = VarPool::new();
    let premises: Vec<Prop> =
        p2.p_before.iter().map(|f| sat::toy_to_prop(f, &mut pool)).collect();
    let z: BTreeSet<ToyFormula> =
        p2.z_levels.iter().flatten().flatten().cloned().collect();
    let mut checked = 0usize;
    for rho in &z {
        let mut pos = BTreeMap::new();
        let mut neg = BTreeMap::new();
        for &j in &worlds {
            let to = sat::toy_to_prop(&ToyFormula::Lam(j).imp(rho.clone()), &mut pool);
            let away = sat::toy_to_prop(&ToyFormula::Lam(j).imp(rho.clone().not()), &mut pool);
            pos.insert(j, sat::entails(&premises, &to, pool.len() as u32));
            neg.insert(j, sat::entails(&premises, &away, pool.len() as u32));
        }
        let found = family.iter().any(|v| {
            worlds
                .iter()
                .all(|j| if v.contains(j) { pos[j] } else { neg[j] })
        });
        if !found {
            return CheckReport {
                check: name,
                status: CheckStatus::Failed,
                detail: format!("no neighborhood pattern for the Z member {rho}"),
            };
        }
        checked += 1;
    }
    CheckReport {
        check: name,
        status: CheckStatus::Passed,
        detail: format!("pattern witnesses found for all {checked} Z members"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_catalog, CatalogConfig};
    use crate::formula::Logic;

    fn toy(s: &str) -> ToyFormula {
        s.parse().unwrap()
    }

    fn scenario(
        axioms: &[&str],
        schedule: &[(u64, &str)],
        inject: &[(u64, &str)],
        horizon: u64,
    ) -> Scenario {
        Scenario::new(
            axioms.iter().map(|s| toy(s)).collect(),
            schedule.iter().map(|(s, f)| (Code::from_u64(*s), toy(f))).collect(),
            inject.iter().map(|(s, f)| (Code::from_u64(*s), toy(f))).collect(),
            Code::from_u64(horizon),
        )
        .unwrap()
    }

    #[test]
    fn taut_consequence_examples() {
        let p: BTreeSet<ToyFormula> = [toy("a"), toy("a -> b")].into();
        assert!(taut_consequence(&p, &toy("b")));
        assert!(!taut_consequence(&BTreeSet::new(), &toy("~falsum")));
        let p: BTreeSet<ToyFormula> = [toy("lam(3) -> falsum"), toy("~falsum")].into();
        assert!(taut_consequence(&p, &toy("~lam(3)")));
    }

    #[test]
    fn equiv_chain() {
        let empty = BTreeSet::new();
        assert!(equiv_m(&empty, &toy("a"), &toy("a")));
        let p: BTreeSet<ToyFormula> = [ToyFormula::iff(toy("a"), toy("b"))].into();
        assert!(equiv_m(&p, &toy("a"), &toy("b")));
        assert!(!equiv_m(&p, &toy("a"), &toy("c")));
        let p: BTreeSet<ToyFormula> = [
            ToyFormula::iff(toy("a"), toy("b")),
            ToyFormula::iff(toy("b"), toy("c")),
        ]
        .into();
        assert!(equiv_m(&p, &toy("a"), &toy("c")), "transitive through chains");
    }

    #[test]
    fn consistent_scenario_never_triggers() {
        let sc = scenario(&["x"], &[(20, "x")], &[], 4000);
        let h = run_h(&sc).unwrap();
        assert_eq!(h.trigger, None);
        assert_eq!(h.values_rle, vec![(0, Code::from_u64(4001))]);
    }

    #[test]
    fn injected_refutation_triggers_at_entry() {
        // ~lam(5) has code 1363; injected at stage 20 it enters P at 1363
        let sc = scenario(&[], &[], &[(20, "~lam(5)")], 4000);
        let h = run_h(&sc).unwrap();
        let expected_stage = toy("~lam(5)").code().max(Code::from_u64(20));
        assert_eq!(h.trigger, Some((expected_stage, 5)));
    }

    #[test]
    fn min_j_wins() {
        // one axiom refutes both lam(2) and lam(5) at a single breakpoint;
        // min J picks 2
        let sc = scenario(&[], &[], &[(20, "~lam(5) & ~lam(2)")], 20_000_000);
        let h = run_h(&sc).unwrap();
        assert_eq!(h.trigger.map(|(_, i)| i), Some(2));
    }

    #[test]
    fn inconsistent_scenario_triggers_with_one() {
        // ~x enters P at its code (6035); from there P is inconsistent
        let sc = scenario(&[], &[], &[(10, "x"), (11, "~x")], 10_000);
        let h = run_h(&sc).unwrap();
        assert_eq!(h.trigger.map(|(_, i)| i), Some(1));
        assert!(h.j_records.iter().any(|r| r.inconsistent));
    }

    #[test]
    fn scenario_validation() {
        // scheduling something unjustified is rejected
        let err = Scenario::new(
            vec![],
            [(Code::from_u64(5), toy("x"))].into(),
            BTreeMap::new(),
            Code::from_u64(100),
        )
        .unwrap_err();
        assert!(matches!(err, ScenarioError::ScheduleNotJustified { .. }));
        // scheduling an injected axiom is fine
        let sc = Scenario::new(
            vec![],
            [(Code::from_u64(6), toy("x"))].into(),
            [(Code::from_u64(5), toy("x"))].into(),
            Code::from_u64(100),
        );
        assert!(sc.is_ok());
        let err = Scenario::new(
            vec![],
            BTreeMap::new(),
            [(Code::from_u64(200), toy("x"))].into(),
            Code::from_u64(100),
        )
        .unwrap_err();
        assert!(matches!(err, ScenarioError::StageBeyondHorizon(_)));
    }

    #[test]
    fn scenario_json_round_trip() {
        let sc = scenario(&["~falsum", "x"], &[(12, "x")], &[(9, "x"), (2000, "~lam(2)")], 5000);
        let js = serde_json::to_string(&sc).unwrap();
        let back: Scenario = serde_json::from_str(&js).unwrap();
        assert_eq!(sc, back);
    }

    #[test]
    fn untriggered_run_outputs_exactly_the_events() {
        let cat = build_catalog(Logic::EN, 2, &CatalogConfig::default()).unwrap();
        let sc = scenario(&["x"], &[(25, "x")], &[(30, "y")], 4000);
        let t = run_g(GVariant::G0, &sc, &cat).unwrap();
        assert!(t.phase2.is_none());
        let out = t.output();
        let events: BTreeSet<ToyFormula> =
            sc.events().into_iter().map(|e| e.formula).collect();
        assert_eq!(out, events);
    }

    #[test]
    fn triggered_g0_emits_x_and_y() {
        let cat = build_catalog(Logic::EN, 2, &CatalogConfig::default()).unwrap();
        // axioms x and x <-> y, then a trigger late enough that the
        // biconditional (code ~1.5e15) is inside P_{T,s-1}
        let sc = scenario(
            &["x"],
            &[],
            &[(10, "(x -> y) & (y -> x)"), (10_000_000_000_000_000, "~lam(1)")],
            100_000_000_000_000_000,
        );
        let t = run_g(GVariant::G0, &sc, &cat).unwrap();
        let p2 = t.phase2.as_ref().unwrap();
        assert_eq!(p2.i, 1);
        assert_eq!(p2.k, 0);
        let out = t.output();
        assert!(out.contains(&toy("x")));
        assert!(out.contains(&toy("y")), "y is chain-equivalent to the member x");
        assert_eq!(verify_run(&t, &Check::E).status, CheckStatus::Passed);
        assert_eq!(verify_run(&t, &Check::C).status, CheckStatus::NotClaimed);
    }

    #[test]
    fn triggered_g1_closes_under_conjunction() {
        let cat = build_catalog(Logic::ECN, 2, &CatalogConfig::default()).unwrap();
        // x & y has code ~9.5e6; the trigger stage must dominate it
        let sc = scenario(
            &["x"],
            &[],
            &[(10, "y"), (20_000_000, "~lam(1)")],
            100_000_000,
        );
        let t = run_g(GVariant::G1, &sc, &cat).unwrap();
        let out = t.output();
        assert!(out.contains(&toy("x & y")));
        assert!(out.contains(&toy("y & x")));
        assert_eq!(verify_run(&t, &Check::C).status, CheckStatus::Passed);
        assert_eq!(verify_run(&t, &Check::E).status, CheckStatus::Passed);
    }

    #[test]
    fn empty_p_gives_empty_x_and_y() {
        // a fabricated trigger below every code leaves P_{T,s-1} empty
        let cat = build_catalog(Logic::EN, 1, &CatalogConfig::default()).unwrap();
        let sc = scenario(&[], &[], &[], 4000);
        let sets =
            procedure2_sets(GVariant::G0, &sc, (&Code::from_u64(5), 1), &cat).unwrap();
        assert!(sets.p.is_empty());
        assert!(sets.x.is_empty());
        assert!(sets.y.is_empty());
    }

    #[test]
    fn adversarial_seeds_fire_the_trigger_early() {
        // lam(2) -> x and lam(2) -> ~x together refute lam(2), so h fires
        // at their entry point (~1.5e8, the second implication's code),
        // long before the planned ~lam(1)
        let sc = scenario(
            &[],
            &[],
            &[(10, "lam(2) -> x"), (11, "lam(2) -> ~x"), (500_000_000, "~lam(1)")],
            1_000_000_000,
        );
        let h = run_h(&sc).unwrap();
        let (s, i) = h.trigger.unwrap();
        assert_eq!(i, 2);
        assert!(s < Code::from_u64(500_000_000));
    }

    #[test]
    fn untriggered_runs_respect_e() {
        let cat = build_catalog(Logic::EN, 1, &CatalogConfig::default()).unwrap();
        // schedule both sides of an injected biconditional
        let sc = Scenario::new(
            vec![toy("x"), ToyFormula::iff(toy("x"), toy("y"))],
            [(Code::from_u64(800), toy("x")), (Code::from_u64(801), toy("y"))].into(),
            BTreeMap::new(),
            Code::from_u64(4_000_000_000_000_000),
        )
        .unwrap();
        let t = run_g(GVariant::G0, &sc, &cat).unwrap();
        assert!(t.phase2.is_none());
        assert_eq!(verify_run(&t, &Check::E).status, CheckStatus::Passed);
    }

    #[test]
    fn procedure_sets_invariants_on_a_seeded_run() {
        let cat = build_catalog(Logic::ECN, 6, &CatalogConfig::default()).unwrap();
        let k = cat
            .entries
            .iter()
            .position(|e| e.model.valued_atoms().any(|a| !e.model.valuation(a).is_empty()))
            .unwrap();
        let i = cat.entries[k].witness;
        let base =
            Scenario::new(vec![], BTreeMap::new(), BTreeMap::new(), huge_horizon()).unwrap();
        let battery: Vec<Formula> = vec!["a".parse().unwrap(), "[]a".parse().unwrap()];
        let seeded = seed_battery(&base, &cat, k, i, &battery).unwrap();
        let h = run_h(&seeded).unwrap();
        let (s, _) = h.trigger.unwrap();
        let sets = procedure2_sets(GVariant::G1, &seeded, (&s, i), &cat).unwrap();
        let sm1 = s.pred().unwrap();
        for f in sets.x.iter().chain(sets.y.iter()) {
            assert!(f.code() <= sm1, "X and Y live inside F_(s-1)");
        }
        let z = sets.z().unwrap();
        for f in sets.p.iter().chain(sets.x.iter()).chain(sets.y.iter()) {
            assert!(z.contains(f), "Z extends P, X and Y");
        }
        for f in &z {
            assert!(f.code() <= sm1, "Z lives inside F_(s-1)");
        }
        // the entry's own world satisfies a, so f(a) carries the
        // neighborhood pattern V = v_k(a) and lands in Y
        let fa = interpret(&cat, &"a".parse().unwrap()).unwrap();
        assert!(
            sets.y.contains(&fa),
            "f(a) should be in Y when v_k(a) is in N_k(i)"
        );
    }

    #[test]
    fn interpret_examples() {
        let cat = build_catalog(Logic::EN, 6, &CatalogConfig::default()).unwrap();
        // entry for ~a gives a a nonempty valuation
        let f = interpret(&cat, &"a".parse().unwrap()).unwrap();
        match &f {
            ToyFormula::Lam(_) => {}
            other => panic!("expected a single lam, got {other}"),
        }
        assert_eq!(interpret(&cat, &Formula::Bot).unwrap(), ToyFormula::Falsum);
        let fa = interpret(&cat, &"~a".parse().unwrap()).unwrap();
        assert_eq!(fa, f.clone().not());
        let fand = interpret(&cat, &"a & a".parse().unwrap()).unwrap();
        assert_eq!(fand, f.clone().and(f.clone()));
        let boxed = interpret(&cat, &"[]a".parse().unwrap()).unwrap();
        assert_eq!(boxed, ToyFormula::BoxMarker(f.code()));
        assert!(matches!(
            interpret(&cat, &"zz".parse().unwrap()),
            Err(SandboxError::UnknownAtom(_))
        ));
    }

    #[test]
    fn seeded_truth_lemma_on_box() {
        let cat = build_catalog(Logic::EN, 6, &CatalogConfig::default()).unwrap();
        // pick the first entry with a nonempty valuation
        let k = cat
            .entries
            .iter()
            .position(|e| e.model.valued_atoms().any(|a| !e.model.valuation(a).is_empty()))
            .expect("some entry valuates an atom");
        let i = cat.entries[k].witness;
        let base =
            Scenario::new(vec![], BTreeMap::new(), BTreeMap::new(), huge_horizon()).unwrap();
        let battery: Vec<Formula> =
            ["a", "~a", "[]a", "[]false"].iter().map(|s| s.parse().unwrap()).collect();
        let seeded = seed_battery(&base, &cat, k, i, &battery).unwrap();
        let t = run_g(GVariant::G0, &seeded, &cat).unwrap();
        let check = Check::TruthLemma { k, i, battery };
        let rep = verify_run(&t, &check);
        assert_eq!(rep.status, CheckStatus::Passed, "{}", rep.detail);
        assert_eq!(verify_run(&t, &Check::E).status, CheckStatus::Passed);
    }

    /// A horizon that dwarfs every desk-scale code.
    fn huge_horizon() -> Code {
        "1".repeat(200).parse().unwrap()
    }
}
