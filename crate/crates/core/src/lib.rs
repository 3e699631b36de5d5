//! Workbench for the non-normal modal logics EN, ECN, ENP, END, and ECNP.
//!
//! The pieces:
//!
//! - [`formula`]: the modal language, canonical numeric codes, subformula
//!   machinery, and the five logic tags with their inclusion order.
//! - [`neighborhood`]: finite neighborhood frames and models, the
//!   satisfaction relation, and frame-property checks.
//! - [`prover`]: a checker for Hilbert-style derivations (MP, Nec, RE
//!   over propositional tautologies, plus each logic's axioms).
//! - [`decide`]: countermodel search by world types with per-logic
//!   neighborhood admissibility.
//! - [`oracle`]: the independent brute-force small-model oracle.
//! - [`catalog`]: the canonical enumeration of refuted formulas with
//!   falsifying models laid out on disjoint blocks of positive integers.
//! - [`sandbox`]: the staged-provability sandbox — scripted toy theory,
//!   the trigger function h, the g0/g1 output constructions, the
//!   arithmetical-interpretation analogue, truth-lemma seeding, and the
//!   per-run checks.
//! - [`sampling`]: seeded generators for the randomized suites.

pub mod catalog;
pub mod coding;
pub mod decide;
pub mod formula;
pub mod neighborhood;
pub mod oracle;
mod parse;
pub mod prover;
pub mod sampling;
pub mod sandbox;
pub mod sat;
pub mod toy;

pub use coding::Code;
pub use formula::{parse_formula, Formula, Logic, ParseError};
pub use neighborhood::{check_frame, Frame, NeighborhoodModel, WorldId};
pub use toy::{parse_toy, ToyFormula};
