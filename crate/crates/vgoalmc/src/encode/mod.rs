//! Emitters for external model checkers: NuSMV (`.smv`) and PRISM-style
//! (`.pm` plus a sibling `.props` list). Output is byte-deterministic.

pub mod prism;
pub mod smv;

pub use prism::encode_prism;
pub use smv::encode_smv;

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::check::props::sanitize_ap;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("proposition collision after sanitization: `{0}` and `{1}` both map to `{2}`")]
    ApCollision(String, String, String),
    #[error("transition system is not total; complete self-loops before encoding")]
    NotTotal,
    #[error("DTMC is not stochastic: row of state {0} does not sum to 1")]
    NotStochastic(usize),
}

/// Sanitized name per proposition, with collision detection.
pub(crate) fn sanitized_aps(aps: &BTreeSet<String>) -> Result<BTreeMap<String, String>, EncodeError> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    for ap in aps {
        let s = sanitize_ap(ap);
        if let Some(prev) = seen.get(&s) {
            return Err(EncodeError::ApCollision(prev.clone(), ap.clone(), s));
        }
        seen.insert(s.clone(), ap.clone());
        out.insert(ap.clone(), s);
    }
    Ok(out)
}
