//! Checker for Hilbert-style derivations in EN and its extensions.
//!
//! A derivation is a sequence of steps, each justified as a propositional
//! tautology (with boxed subformulas read as opaque atoms), an axiom
//! instance, or an application of MP, Nec, or RE to earlier steps. Axiom
//! availability follows the logic: C in ECN/ECNP, P in ENP/ECNP, D in END.
//! Uniform substitution is realized by matching against the axiom schemes.

use crate::formula::{Formula, Logic};
use crate::sat::{self, VarPool};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Propositional tautology under the boxed-subformulas-as-atoms reading.
    Taut,
    /// Instance of `[]A & []B -> [](A & B)`.
    AxC,
    /// The formula `~[]false`.
    AxP,
    /// Instance of `~([]A & []~A)`.
    AxD,
    /// Modus ponens: step `j` is `step i -> current`.
    Mp(usize, usize),
    /// Necessitation: current is `[] step i`.
    Nec(usize),
    /// Congruence: from a proved biconditional `A <-> B` (desugared),
    /// current is the desugared `[]A <-> []B`.
    Re(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub formula: Formula,
    pub by: Justification,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub logic: Logic,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFailure {
    /// Index of the first invalid step.
    pub step: usize,
    pub reason: String,
}

impl fmt::Display for StepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.reason)
    }
}

impl std::error::Error for StepFailure {}

fn fail(step: usize, reason: impl Into<String>) -> Result<(), StepFailure> {
    Err(StepFailure { step, reason: reason.into() })
}

/// Matches `[]A & []B -> [](A & B)`.
fn is_axiom_c(f: &Formula) -> bool {
    if let Formula::Imp(ante, cons) = f {
        if let (Formula::And(bl, br), Formula::Box(body)) = (ante.as_ref(), cons.as_ref()) {
            if let (Formula::Box(a), Formula::Box(b), Formula::And(a2, b2)) =
                (bl.as_ref(), br.as_ref(), body.as_ref())
            {
                return a == a2 && b == b2;
            }
        }
    }
    false
}

fn is_axiom_p(f: &Formula) -> bool {
    *f == Formula::Bot.boxed().not()
}

/// Matches `~([]A & []~A)`.
fn is_axiom_d(f: &Formula) -> bool {
    if let Formula::Not(inner) = f {
        if let Formula::And(l, r) = inner.as_ref() {
            if let (Formula::Box(a), Formula::Box(na)) = (l.as_ref(), r.as_ref()) {
                if let Formula::Not(a2) = na.as_ref() {
                    return a.as_ref() == a2.as_ref();
                }
            }
        }
    }
    false
}

pub fn check_derivation(d: &Derivation) -> Result<(), StepFailure> {
    let mut pool: VarPool<Formula> = VarPool::new();
    for (idx, step) in d.steps.iter().enumerate() {
        check_step(d, idx, step, &mut pool)?;
    }
    Ok(())
}

fn check_step(
    d: &Derivation,
    idx: usize,
    step: &Step,
    pool: &mut VarPool<Formula>,
) -> Result<(), StepFailure> {
    let prior = |i: usize| -> Result<&Formula, StepFailure> {
        if i >= idx {
            return Err(StepFailure {
                step: idx,
                reason: format!("reference to step {i} is not strictly earlier"),
            });
        }
        Ok(&d.steps[i].formula)
    };
    match &step.by {
        Justification::Taut => {
            let p = sat::modal_to_prop(&step.formula, pool);
            if !sat::is_tautology(&p, pool.len() as u32) {
                return fail(
                    idx,
                    "not a propositional tautology under the boxed-atoms reading",
                );
            }
        }
        Justification::AxC => {
            if !d.logic.has_c() {
                return fail(idx, format!("AxC is not available in {}", d.logic));
            }
            if !is_axiom_c(&step.formula) {
                return fail(idx, "not an instance of []A & []B -> [](A & B)");
            }
        }
        Justification::AxP => {
            if !d.logic.has_p() {
                return fail(idx, format!("AxP is not available in {}", d.logic));
            }
            if !is_axiom_p(&step.formula) {
                return fail(idx, "AxP is exactly ~[]false");
            }
        }
        Justification::AxD => {
            if !d.logic.has_d() {
                return fail(idx, format!("AxD is not available in {}", d.logic));
            }
            if !is_axiom_d(&step.formula) {
                return fail(idx, "not an instance of ~([]A & []~A)");
            }
        }
        Justification::Mp(i, j) => {
            let minor = prior(*i)?;
            let major = prior(*j)?;
            match major {
                Formula::Imp(a, b) if a.as_ref() == minor && b.as_ref() == &step.formula => {}
                _ => {
                    return fail(
                        idx,
                        format!("step {j} is not (step {i} -> current formula)"),
                    )
                }
            }
        }
        Justification::Nec(i) => {
            let premise = prior(*i)?;
            if step.formula != premise.clone().boxed() {
                return fail(idx, format!("current formula is not [](step {i})"));
            }
        }
        Justification::Re(i) => {
            let premise = prior(*i)?;
            let (a, b) = match premise.as_iff() {
                Some(pair) => pair,
                None => {
                    return fail(
                        idx,
                        format!("step {i} is not a (desugared) biconditional"),
                    )
                }
            };
            let want = Formula::iff(a.clone().boxed(), b.clone().boxed());
            if step.formula != want {
                return fail(
                    idx,
                    format!("current formula is not the boxed biconditional of step {i}"),
                );
            }
        }
    }
    Ok(())
}

impl Serialize for Justification {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde_json::json;
        let v = match self {
            Justification::Taut => json!("Taut"),
            Justification::AxC => json!("AxC"),
            Justification::AxP => json!("AxP"),
            Justification::AxD => json!("AxD"),
            Justification::Mp(i, j) => json!({ "MP": [i, j] }),
            Justification::Nec(i) => json!({ "Nec": i }),
            Justification::Re(i) => json!({ "RE": i }),
        };
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Justification {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::String(s) => match s.as_str() {
                "Taut" => Ok(Justification::Taut),
                "AxC" => Ok(Justification::AxC),
                "AxP" => Ok(Justification::AxP),
                "AxD" => Ok(Justification::AxD),
                _ => Err(D::Error::custom(format!("unknown justification {s:?}"))),
            },
            serde_json::Value::Object(map) => {
                if let Some(arr) = map.get("MP") {
                    let pair: (usize, usize) = serde_json::from_value(arr.clone())
                        .map_err(|e| D::Error::custom(format!("bad MP indices: {e}")))?;
                    Ok(Justification::Mp(pair.0, pair.1))
                } else if let Some(i) = map.get("Nec") {
                    let i: usize = serde_json::from_value(i.clone())
                        .map_err(|e| D::Error::custom(format!("bad Nec index: {e}")))?;
                    Ok(Justification::Nec(i))
                } else if let Some(i) = map.get("RE") {
                    let i: usize = serde_json::from_value(i.clone())
                        .map_err(|e| D::Error::custom(format!("bad RE index: {e}")))?;
                    Ok(Justification::Re(i))
                } else {
                    Err(D::Error::custom("unknown justification object"))
                }
            }
            _ => Err(D::Error::custom("justification must be a string or an object")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StepJson {
    formula: Formula,
    by: Justification,
}

impl Derivation {
    /// Wire format: a JSON array of `{"formula": ..., "by": ...}` steps;
    /// the logic travels separately.
    pub fn from_json(logic: Logic, json: &str) -> Result<Derivation, serde_json::Error> {
        let steps: Vec<StepJson> = serde_json::from_str(json)?;
        Ok(Derivation {
            logic,
            steps: steps
                .into_iter()
                .map(|s| Step { formula: s.formula, by: s.by })
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        let steps: Vec<StepJson> = self
            .steps
            .iter()
            .map(|s| StepJson { formula: s.formula.clone(), by: s.by.clone() })
            .collect();
        serde_json::to_string(&steps).expect("derivation serializes")
    }

    /// Same steps under another logic tag.
    pub fn retagged(&self, logic: Logic) -> Derivation {
        Derivation { logic, steps: self.steps.clone() }
    }

    pub fn conclusion(&self) -> Option<&Formula> {
        self.steps.last().map(|s| &s.formula)
    }
}

/// Step-list builder used by tests and the curated corpus.
pub fn derivation(logic: Logic, steps: &[(&str, Justification)]) -> Derivation {
    Derivation {
        logic,
        steps: steps
            .iter()
            .map(|(f, by)| Step {
                formula: f.parse().expect("corpus formulas parse"),
                by: by.clone(),
            })
            .collect(),
    }
}
