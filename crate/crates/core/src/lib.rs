//! Static detection and automatic repair of resource leaks in event-driven
//! (lifecycle-driven) applications expressed in a neutral JSON IR.
//!
//! The pipeline: parse an app model and a resource spec ([`ir`]), abstract
//! each procedure's CFG into a resource-flow graph ([`rfg`]), encode the
//! resource's correct-usage protocol as an automaton and the app's possible
//! operation sequences as another ([`automata`]), intersect the complement of
//! the former with the latter to find leaking paths, compose procedures
//! through summaries and unroll the component lifecycle ([`analysis`]), then
//! synthesize, apply, and validate conditional-release fixes ([`repair`]).

pub mod analysis;
pub mod automata;
pub mod ir;
pub mod repair;
pub mod rfg;
