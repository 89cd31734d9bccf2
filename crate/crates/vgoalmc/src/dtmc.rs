//! DTMC construction: annotate the generated transition system with
//! outcome probabilities and normalize each row to a distribution.
//! Probabilities are exact rationals throughout.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::printer::{parse_prob, print_prob};
use crate::semantics::JointAction;
use crate::ts::{ModelMeta, TransitionSystem};

/// Discrete-time Markov chain over the states of a transition system.
/// Edges retain the joint action they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtmc {
    pub states: Vec<String>,
    pub edges: BTreeSet<(usize, usize, BigRational, String)>,
    pub initial_dist: BTreeMap<usize, BigRational>,
    pub aps: BTreeSet<String>,
    pub labels: Vec<BTreeSet<String>>,
    pub meta: ModelMeta,
}

impl Dtmc {
    /// P(s, s') summed over parallel edges.
    pub fn prob(&self, src: usize, dst: usize) -> BigRational {
        self.edges
            .iter()
            .filter(|(s, d, _, _)| *s == src && *d == dst)
            .map(|(_, _, p, _)| p.clone())
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn row(&self, src: usize) -> BTreeMap<usize, BigRational> {
        let mut out: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (s, d, p, _) in &self.edges {
            if *s == src {
                let e = out.entry(*d).or_insert_with(BigRational::zero);
                *e += p.clone();
            }
        }
        out
    }

    pub fn row_sum(&self, src: usize) -> BigRational {
        self.row(src).values().cloned().fold(BigRational::zero(), |a, b| a + b)
    }

    /// Every state must have outgoing probability exactly one.
    pub fn is_stochastic(&self) -> bool {
        (0..self.states.len()).all(|s| self.row_sum(s).is_one())
    }

    /// The set of (src, dst) pairs with positive probability.
    pub fn support(&self) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .filter(|(_, _, p, _)| !p.is_zero())
            .map(|(s, d, _, _)| (*s, *d))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum DtmcError {
    #[error("transition system is not total: state {0} has no outgoing transition (complete self-loops first)")]
    NotTotal(usize),
    #[error("state {0} has zero outgoing weight; cannot normalize")]
    ZeroRow(usize),
    #[error("expected exactly one initial state, found {0}")]
    InitialCount(usize),
}

/// Product of the per-agent outcome probabilities of a joint action
/// label. Labels absent from the probability map (including `skip` and
/// `stutter`) contribute factor one.
pub fn joint_probability(action_label: &str, prob: &BTreeMap<String, BigRational>) -> BigRational {
    let mut p = BigRational::one();
    for label in JointAction::labels_of(action_label) {
        if let Some(f) = prob.get(label) {
            p *= f.clone();
        }
    }
    p
}

/// Build the DTMC of a self-loop-completed transition system. Per-edge
/// weights come from `joint_probability`; rows whose weights do not sum
/// to one are normalized. The initial distribution is the point mass on
/// the unique initial state.
pub fn build_dtmc(
    ts: &TransitionSystem,
    prob: &BTreeMap<String, BigRational>,
) -> Result<Dtmc, DtmcError> {
    if let Some(s) = ts.sink_states().into_iter().next() {
        return Err(DtmcError::NotTotal(s));
    }
    if ts.initial.len() != 1 {
        return Err(DtmcError::InitialCount(ts.initial.len()));
    }
    let mut edges: BTreeSet<(usize, usize, BigRational, String)> = BTreeSet::new();
    let mut rows: BTreeMap<usize, Vec<(usize, BigRational, String)>> = BTreeMap::new();
    for (src, action, dst) in &ts.transitions {
        let w = joint_probability(action, prob);
        rows.entry(*src).or_default().push((*dst, w, action.clone()));
    }
    for (src, row) in rows {
        let sum: BigRational = row
            .iter()
            .map(|(_, w, _)| w.clone())
            .fold(BigRational::zero(), |a, b| a + b);
        if sum.is_zero() {
            return Err(DtmcError::ZeroRow(src));
        }
        for (dst, w, action) in row {
            let p = if sum.is_one() { w } else { w / sum.clone() };
            edges.insert((src, dst, p, action));
        }
    }
    let init = *ts.initial.iter().next().expect("one initial");
    Ok(Dtmc {
        states: ts.states.clone(),
        edges,
        initial_dist: [(init, BigRational::one())].into_iter().collect(),
        aps: ts.aps.clone(),
        labels: ts.labels.clone(),
        meta: ts.meta.clone(),
    })
}

#[derive(Serialize, Deserialize)]
struct DtmcJson {
    version: u32,
    kind: String,
    states: Vec<String>,
    edges: Vec<(usize, usize, String, String)>,
    initial: Vec<(usize, String)>,
    aps: Vec<String>,
    labels: Vec<Vec<String>>,
    #[serde(default)]
    meta: ModelMeta,
}

pub fn dtmc_to_json(d: &Dtmc) -> String {
    let doc = DtmcJson {
        version: 1,
        kind: "dtmc".to_string(),
        states: d.states.clone(),
        edges: d
            .edges
            .iter()
            .map(|(s, t, p, a)| (*s, *t, print_prob(p), a.clone()))
            .collect(),
        initial: d
            .initial_dist
            .iter()
            .map(|(s, p)| (*s, print_prob(p)))
            .collect(),
        aps: d.aps.iter().cloned().collect(),
        labels: d.labels.iter().map(|l| l.iter().cloned().collect()).collect(),
        meta: d.meta.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

pub fn dtmc_from_json(text: &str) -> Result<Dtmc, String> {
    let doc: DtmcJson = serde_json::from_str(text).map_err(|e| format!("invalid DTMC JSON: {e}"))?;
    if doc.kind != "dtmc" {
        return Err(format!("expected kind \"dtmc\", found {:?}", doc.kind));
    }
    if doc.version != 1 {
        return Err(format!("unsupported DTMC version {}", doc.version));
    }
    let n = doc.states.len();
    let mut edges = BTreeSet::new();
    for (s, d, p, a) in doc.edges {
        if s >= n || d >= n {
            return Err("edge endpoint out of range".to_string());
        }
        let p = parse_prob(&p).ok_or_else(|| format!("invalid probability {p:?}"))?;
        edges.insert((s, d, p, a));
    }
    let mut initial_dist = BTreeMap::new();
    for (s, p) in doc.initial {
        let p = parse_prob(&p).ok_or_else(|| format!("invalid probability {p:?}"))?;
        initial_dist.insert(s, p);
    }
    if doc.labels.len() != n {
        return Err("labels array must match states".to_string());
    }
    Ok(Dtmc {
        states: doc.states,
        edges,
        initial_dist,
        aps: doc.aps.into_iter().collect(),
        labels: doc
            .labels
            .into_iter()
            .map(|l| l.into_iter().collect())
            .collect(),
        meta: doc.meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn tiny_ts(transitions: &[(usize, &str, usize)], n: usize) -> TransitionSystem {
        TransitionSystem {
            states: (0..n).map(|i| format!("s{i}")).collect(),
            transitions: transitions
                .iter()
                .map(|(s, a, d)| (*s, a.to_string(), *d))
                .collect(),
            initial: [0].into_iter().collect(),
            finals: BTreeSet::new(),
            aps: BTreeSet::new(),
            labels: vec![BTreeSet::new(); n],
            meta: ModelMeta::default(),
        }
    }

    #[test]
    fn joint_probability_is_a_product() {
        let prob: BTreeMap<String, BigRational> = [
            ("move_ok".to_string(), ratio(9, 10)),
            ("pick_ok".to_string(), ratio(8, 10)),
            ("move_base_err".to_string(), ratio(2, 100)),
        ]
        .into_iter()
        .collect();
        assert_eq!(
            joint_probability("A1:move_ok|A2:pick_ok", &prob),
            ratio(72, 100)
        );
        assert_eq!(joint_probability("A1:skip|R:stutter", &prob), ratio(1, 1));
        assert_eq!(joint_probability("A1:move_base_err", &prob), ratio(2, 100));
    }

    #[test]
    fn rows_are_normalized() {
        // two outgoing edges weighted 0.45 each normalize to 0.5
        let ts = tiny_ts(&[(0, "A1:a_ok", 1), (0, "A1:a_err", 2), (1, "stutter", 1), (2, "stutter", 2)], 3);
        let prob: BTreeMap<String, BigRational> = [
            ("a_ok".to_string(), ratio(45, 100)),
            ("a_err".to_string(), ratio(45, 100)),
        ]
        .into_iter()
        .collect();
        let d = build_dtmc(&ts, &prob).expect("builds");
        assert_eq!(d.prob(0, 1), ratio(1, 2));
        assert_eq!(d.prob(0, 2), ratio(1, 2));
        assert!(d.is_stochastic());
    }

    #[test]
    fn deterministic_ts_with_empty_prob_is_all_ones() {
        let ts = tiny_ts(&[(0, "A1:a_ok", 1), (1, "stutter", 1)], 2);
        let d = build_dtmc(&ts, &BTreeMap::new()).expect("builds");
        assert_eq!(d.prob(0, 1), ratio(1, 1));
        assert_eq!(d.prob(1, 1), ratio(1, 1));
        assert!(d.is_stochastic());
    }

    #[test]
    fn non_total_ts_is_rejected() {
        let ts = tiny_ts(&[(0, "A1:a_ok", 1)], 2);
        assert!(matches!(
            build_dtmc(&ts, &BTreeMap::new()),
            Err(DtmcError::NotTotal(1))
        ));
    }

    #[test]
    fn json_roundtrip_preserves_exact_probabilities() {
        let ts = tiny_ts(
            &[(0, "A1:a_ok", 1), (0, "A1:a_err", 2), (0, "A1:a_hmm", 0), (1, "stutter", 1), (2, "stutter", 2)],
            3,
        );
        // weights 0.2/0.2/0.2 normalize to thirds: exercises fractions
        let prob: BTreeMap<String, BigRational> = [
            ("a_ok".to_string(), ratio(2, 10)),
            ("a_err".to_string(), ratio(2, 10)),
            ("a_hmm".to_string(), ratio(2, 10)),
        ]
        .into_iter()
        .collect();
        let d = build_dtmc(&ts, &prob).expect("builds");
        assert_eq!(d.prob(0, 1), ratio(1, 3));
        let back = dtmc_from_json(&dtmc_to_json(&d)).expect("roundtrips");
        assert_eq!(d, back);
        assert!(back.is_stochastic());
    }
}
