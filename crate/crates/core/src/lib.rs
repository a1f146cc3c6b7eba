//! Toolkit for the sequent calculus LMC of closure l-monoids.
//!
//! * [`syntax`]: formulas, structural terms, sequents, positions, translations.
//! * [`calculus`]: the rules as data, derivation checking, the bundled corpus.
//! * [`search`]: bounded backward proof search.
//! * [`transform`]: cut/mix interchange and mix elimination.
//! * [`models`]: finite closure l-monoids, soundness sweeps, countermodels.
//! * [`traces`]: labelled transition systems and finite trace properties.
//! * [`algebra`]: divisibility, RDP and related monoid checks.

pub mod algebra;
pub mod calculus;
pub mod models;
pub mod search;
pub mod syntax;
pub mod traces;
pub mod transform;

pub use calculus::{check_derivation, Derivation, RuleApp, RuleId};
pub use syntax::{parse_formula, parse_sequent, parse_struct, Formula, Sequent, StructuralTerm};
