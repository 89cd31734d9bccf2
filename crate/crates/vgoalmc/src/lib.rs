//! Model generation and checking for declarative multi-agent decision
//! specifications.
//!
//! The pipeline: parse a `.vg` specification, generate an equivalent
//! transition system (and a DTMC on top of it), check CTL/PCTL properties
//! with the built-in explicit-state checkers, emit NuSMV and PRISM input
//! files, and run compositional quick error detection for multi-goal
//! systems.

pub mod lang;
pub mod semantics;
pub mod ts;
pub mod dtmc;
pub mod check;
pub mod encode;
pub mod equiv;
pub mod detect;
pub mod report;
