//! Reference interpreter and corpus generator for checking the leak
//! detector against an independent implementation.
//!
//! Nothing here shares code with the production engine beyond the IR types:
//! the interpreter in [`simulate`] walks apps path by path with an explicit
//! stack, and [`generate`] produces seeded random apps whose shapes both
//! implementations handle exactly, so any disagreement is a bug.

pub mod generate;
pub mod simulate;

pub use generate::{generate, GeneratedApp};
pub use simulate::{oracle_leaks, oracle_violations, OracleError, SimLimits, SimViolation};
