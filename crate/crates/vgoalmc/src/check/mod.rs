//! Internal explicit-state CTL and PCTL model checkers.

pub mod ctl;
pub mod pctl;
pub mod props;
