//! Bisimulation equivalence by partition refinement: labels first, then
//! successor-block signatures, on the disjoint union of the two systems.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::dtmc::Dtmc;
use crate::ts::{ModelMeta, TransitionSystem};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EquivError {
    #[error("proposition alphabets differ: only in left {left:?}, only in right {right:?}")]
    AlphabetMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("DTMC is not stochastic: row of state {0} does not sum to 1")]
    NotStochastic(usize),
}

/// Outcome of a bisimilarity check; on failure `witness` names a pair of
/// states (one per system) that cannot be related.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimResult {
    pub equivalent: bool,
    pub witness: Option<(String, String)>,
    pub reason: Option<String>,
}

impl BisimResult {
    fn ok() -> Self {
        BisimResult {
            equivalent: true,
            witness: None,
            reason: None,
        }
    }

    fn fail(witness: (String, String), reason: String) -> Self {
        BisimResult {
            equivalent: false,
            witness: Some(witness),
            reason: Some(reason),
        }
    }
}

fn check_alphabets(
    left: &BTreeSet<String>,
    right: &BTreeSet<String>,
) -> Result<(), EquivError> {
    if left == right {
        return Ok(());
    }
    Err(EquivError::AlphabetMismatch {
        left: left.difference(right).cloned().collect(),
        right: right.difference(left).cloned().collect(),
    })
}

/// Partition refinement on the disjoint union of two labeled graphs.
/// Returns the block id of every node (left system first).
fn refine_blocks(
    labels: &[BTreeSet<String>],
    succ: &[BTreeSet<usize>],
) -> Vec<usize> {
    let n = labels.len();
    let mut block: Vec<usize> = {
        let mut ids: BTreeMap<&BTreeSet<String>, usize> = BTreeMap::new();
        labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect()
    };
    loop {
        let mut sig_ids: BTreeMap<(usize, BTreeSet<usize>), usize> = BTreeMap::new();
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for v in 0..n {
            let sig: BTreeSet<usize> = succ[v].iter().map(|d| block[*d]).collect();
            let key = (block[v], sig);
            let id = sig_ids.len();
            next.push(*sig_ids.entry(key).or_insert(id));
        }
        if next == block {
            return block;
        }
        block = next;
    }
}

/// Bisimulation equivalence of two transition systems (Paige–Tarjan
/// style refinement at desk scale). Both must be over the same
/// proposition alphabet.
pub fn bisimilar_ts(a: &TransitionSystem, b: &TransitionSystem) -> Result<BisimResult, EquivError> {
    check_alphabets(&a.aps, &b.aps)?;
    let na = a.states.len();
    let n = na + b.states.len();
    let mut labels: Vec<BTreeSet<String>> = Vec::with_capacity(n);
    labels.extend(a.labels.iter().cloned());
    labels.extend(b.labels.iter().cloned());
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (s, _, d) in &a.transitions {
        succ[*s].insert(*d);
    }
    for (s, _, d) in &b.transitions {
        succ[na + *s].insert(na + *d);
    }
    let block = refine_blocks(&labels, &succ);

    // condition (a): initial states match up to block equivalence
    for s in &a.initial {
        if !b.initial.iter().any(|t| block[na + *t] == block[*s]) {
            let other = b
                .initial
                .iter()
                .next()
                .map(|t| b.states[*t].clone())
                .unwrap_or_default();
            return Ok(BisimResult::fail(
                (a.states[*s].clone(), other),
                format!("initial state {} of the left system has no equivalent initial state", s),
            ));
        }
    }
    for t in &b.initial {
        if !a.initial.iter().any(|s| block[*s] == block[na + *t]) {
            let other = a
                .initial
                .iter()
                .next()
                .map(|s| a.states[*s].clone())
                .unwrap_or_default();
            return Ok(BisimResult::fail(
                (other, b.states[*t].clone()),
                format!("initial state {} of the right system has no equivalent initial state", t),
            ));
        }
    }
    Ok(BisimResult::ok())
}

/// Probabilistic bisimulation of two DTMCs: refinement splits on labels,
/// then on the exact probability assigned to each block; the initial
/// distributions must give equal mass to every block.
pub fn prob_bisimilar(a: &Dtmc, b: &Dtmc) -> Result<BisimResult, EquivError> {
    check_alphabets(&a.aps, &b.aps)?;
    for d in [a, b] {
        use num_traits::One;
        if let Some(s) = (0..d.states.len()).find(|s| !d.row_sum(*s).is_one()) {
            return Err(EquivError::NotStochastic(s));
        }
    }
    let na = a.states.len();
    let n = na + b.states.len();
    let mut labels: Vec<BTreeSet<String>> = Vec::with_capacity(n);
    labels.extend(a.labels.iter().cloned());
    labels.extend(b.labels.iter().cloned());
    let mut rows: Vec<BTreeMap<usize, BigRational>> = vec![BTreeMap::new(); n];
    for (s, d, p, _) in &a.edges {
        let e = rows[*s].entry(*d).or_insert_with(BigRational::zero);
        *e += p.clone();
    }
    for (s, d, p, _) in &b.edges {
        let e = rows[na + *s].entry(na + *d).or_insert_with(BigRational::zero);
        *e += p.clone();
    }

    let mut block: Vec<usize> = {
        let mut ids: BTreeMap<&BTreeSet<String>, usize> = BTreeMap::new();
        labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect()
    };
    loop {
        let mut sig_ids: BTreeMap<(usize, BTreeMap<usize, BigRational>), usize> = BTreeMap::new();
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for v in 0..n {
            let mut sig: BTreeMap<usize, BigRational> = BTreeMap::new();
            for (d, p) in &rows[v] {
                let e = sig.entry(block[*d]).or_insert_with(BigRational::zero);
                *e += p.clone();
            }
            let key = (block[v], sig);
            let id = sig_ids.len();
            next.push(*sig_ids.entry(key).or_insert(id));
        }
        if next == block {
            break;
        }
        block = next;
    }

    // initial distributions must agree blockwise
    let mut mass_a: BTreeMap<usize, BigRational> = BTreeMap::new();
    for (s, p) in &a.initial_dist {
        let e = mass_a.entry(block[*s]).or_insert_with(BigRational::zero);
        *e += p.clone();
    }
    let mut mass_b: BTreeMap<usize, BigRational> = BTreeMap::new();
    for (s, p) in &b.initial_dist {
        let e = mass_b.entry(block[na + *s]).or_insert_with(BigRational::zero);
        *e += p.clone();
    }
    if mass_a != mass_b {
        let sa = a.initial_dist.keys().next().copied().unwrap_or(0);
        let sb = b.initial_dist.keys().next().copied().unwrap_or(0);
        return Ok(BisimResult::fail(
            (a.states[sa].clone(), b.states[sb].clone()),
            "initial distributions assign different mass to some equivalence class".to_string(),
        ));
    }
    Ok(BisimResult::ok())
}

/// Quotient of a transition system under bisimilarity: one state per
/// block, transitions and labels inherited.
pub fn quotient_ts(ts: &TransitionSystem) -> TransitionSystem {
    let n = ts.states.len();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (s, _, d) in &ts.transitions {
        succ[*s].insert(*d);
    }
    let block = refine_blocks(&ts.labels, &succ);
    build_quotient(
        &block,
        n,
        &ts.labels,
        |out: &mut TransitionSystem, reps: &BTreeMap<usize, usize>| {
            for (s, act, d) in &ts.transitions {
                out.transitions.insert((reps[&block[*s]], act.clone(), reps[&block[*d]]));
            }
            out.initial = ts.initial.iter().map(|s| reps[&block[*s]]).collect();
            out.finals = ts.finals.iter().map(|s| reps[&block[*s]]).collect();
        },
        &ts.aps,
        &ts.meta,
    )
}

fn build_quotient(
    block: &[usize],
    n: usize,
    labels: &[BTreeSet<String>],
    fill: impl FnOnce(&mut TransitionSystem, &BTreeMap<usize, usize>),
    aps: &BTreeSet<String>,
    meta: &ModelMeta,
) -> TransitionSystem {
    // representative id per block, in order of first appearance
    let mut reps: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rep_labels: Vec<BTreeSet<String>> = Vec::new();
    let mut states: Vec<String> = Vec::new();
    for v in 0..n {
        if let std::collections::btree_map::Entry::Vacant(e) = reps.entry(block[v]) {
            e.insert(rep_labels.len());
            rep_labels.push(labels[v].clone());
            states.push(format!("block{}", block[v]));
        }
    }
    let mut out = TransitionSystem {
        states,
        transitions: BTreeSet::new(),
        initial: BTreeSet::new(),
        finals: BTreeSet::new(),
        aps: aps.clone(),
        labels: rep_labels,
        meta: meta.clone(),
    };
    fill(&mut out, &reps);
    out
}

/// Quotient of a DTMC under probabilistic bisimilarity.
pub fn quotient_dtmc(d: &Dtmc) -> Dtmc {
    let n = d.states.len();
    let mut rows: Vec<BTreeMap<usize, BigRational>> = vec![BTreeMap::new(); n];
    for (s, t, p, _) in &d.edges {
        let e = rows[*s].entry(*t).or_insert_with(BigRational::zero);
        *e += p.clone();
    }
    let mut block: Vec<usize> = {
        let mut ids: BTreeMap<&BTreeSet<String>, usize> = BTreeMap::new();
        d.labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect()
    };
    loop {
        let mut sig_ids: BTreeMap<(usize, BTreeMap<usize, BigRational>), usize> = BTreeMap::new();
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for v in 0..n {
            let mut sig: BTreeMap<usize, BigRational> = BTreeMap::new();
            for (t, p) in &rows[v] {
                let e = sig.entry(block[*t]).or_insert_with(BigRational::zero);
                *e += p.clone();
            }
            let key = (block[v], sig);
            let id = sig_ids.len();
            next.push(*sig_ids.entry(key).or_insert(id));
        }
        if next == block {
            break;
        }
        block = next;
    }
    let mut reps: BTreeMap<usize, usize> = BTreeMap::new();
    let mut states = Vec::new();
    let mut labels = Vec::new();
    for v in 0..n {
        if let std::collections::btree_map::Entry::Vacant(e) = reps.entry(block[v]) {
            e.insert(states.len());
            states.push(format!("block{}", block[v]));
            labels.push(d.labels[v].clone());
        }
    }
    let mut edges: BTreeSet<(usize, usize, BigRational, String)> = BTreeSet::new();
    let mut done_blocks: BTreeSet<usize> = BTreeSet::new();
    for v in 0..n {
        if !done_blocks.insert(block[v]) {
            continue;
        }
        let mut sig: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (t, p) in &rows[v] {
            let e = sig.entry(reps[&block[*t]]).or_insert_with(BigRational::zero);
            *e += p.clone();
        }
        for (t, p) in sig {
            edges.insert((reps[&block[v]], t, p, "quotient".to_string()));
        }
    }
    let mut initial_dist: BTreeMap<usize, BigRational> = BTreeMap::new();
    for (s, p) in &d.initial_dist {
        let e = initial_dist
            .entry(reps[&block[*s]])
            .or_insert_with(BigRational::zero);
        *e += p.clone();
    }
    Dtmc {
        states,
        edges,
        initial_dist,
        aps: d.aps.clone(),
        labels,
        meta: d.meta.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn ts(
        n: usize,
        edges: &[(usize, usize)],
        labels: &[&[&str]],
        initial: &[usize],
    ) -> TransitionSystem {
        TransitionSystem {
            states: (0..n).map(|i| format!("s{i}")).collect(),
            transitions: edges.iter().map(|(s, d)| (*s, "t".to_string(), *d)).collect(),
            initial: initial.iter().copied().collect(),
            finals: BTreeSet::new(),
            aps: labels
                .iter()
                .flat_map(|l| l.iter().map(|s| s.to_string()))
                .collect(),
            labels: labels
                .iter()
                .map(|l| l.iter().map(|s| s.to_string()).collect())
                .collect(),
            meta: ModelMeta::default(),
        }
    }

    #[test]
    fn system_is_bisimilar_to_itself_and_renamings() {
        let a = ts(3, &[(0, 1), (0, 2), (1, 1), (2, 2)], &[&[], &["p"], &["q"]], &[0]);
        assert!(bisimilar_ts(&a, &a).expect("check").equivalent);
        // renamed copy: states permuted
        let b = ts(3, &[(2, 0), (2, 1), (0, 0), (1, 1)], &[&["p"], &["q"], &[]], &[2]);
        assert!(bisimilar_ts(&a, &b).expect("check").equivalent);
    }

    #[test]
    fn label_mismatch_is_reported_with_witness() {
        let mut a = ts(1, &[(0, 0)], &[&["p"]], &[0]);
        let mut b = ts(1, &[(0, 0)], &[&["q"]], &[0]);
        // align alphabets so the check reaches refinement
        a.aps.insert("q".to_string());
        b.aps.insert("p".to_string());
        let r = bisimilar_ts(&a, &b).expect("check");
        assert!(!r.equivalent);
        assert!(r.witness.is_some());
    }

    #[test]
    fn alphabet_mismatch_is_an_error() {
        let a = ts(1, &[(0, 0)], &[&["p"]], &[0]);
        let b = ts(1, &[(0, 0)], &[&["q"]], &[0]);
        assert!(matches!(
            bisimilar_ts(&a, &b),
            Err(EquivError::AlphabetMismatch { .. })
        ));
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn dtmc(
        edges: &[(usize, usize, (i64, i64))],
        labels: &[&[&str]],
        initial: &[(usize, (i64, i64))],
    ) -> Dtmc {
        Dtmc {
            states: (0..labels.len()).map(|i| format!("s{i}")).collect(),
            edges: edges
                .iter()
                .enumerate()
                .map(|(i, (s, d, (n, m)))| (*s, *d, ratio(*n, *m), format!("e{i}")))
                .collect(),
            initial_dist: initial.iter().map(|(s, (n, m))| (*s, ratio(*n, *m))).collect(),
            aps: labels
                .iter()
                .flat_map(|l| l.iter().map(|s| s.to_string()))
                .collect(),
            labels: labels
                .iter()
                .map(|l| l.iter().map(|s| s.to_string()).collect())
                .collect(),
            meta: ModelMeta::default(),
        }
    }

    #[test]
    fn branch_to_identical_absorbers_merges() {
        // 0.5/0.5 to two identically labeled absorbing states vs a
        // single certain edge: probabilistically bisimilar
        let a = dtmc(
            &[(0, 1, (1, 2)), (0, 2, (1, 2)), (1, 1, (1, 1)), (2, 2, (1, 1))],
            &[&[], &["g"], &["g"]],
            &[(0, (1, 1))],
        );
        let b = dtmc(
            &[(0, 1, (1, 1)), (1, 1, (1, 1))],
            &[&[], &["g"]],
            &[(0, (1, 1))],
        );
        assert!(prob_bisimilar(&a, &b).expect("check").equivalent);
        // quotient of `a` collapses to two states
        let q = quotient_dtmc(&a);
        assert_eq!(q.states.len(), 2);
        assert!(q.row_sum(0).is_one());
    }

    #[test]
    fn different_probabilities_to_distinct_blocks_differ() {
        let a = dtmc(
            &[(0, 1, (1, 2)), (0, 2, (1, 2)), (1, 1, (1, 1)), (2, 2, (1, 1))],
            &[&[], &["g"], &["h"]],
            &[(0, (1, 1))],
        );
        let b = dtmc(
            &[(0, 1, (1, 4)), (0, 2, (3, 4)), (1, 1, (1, 1)), (2, 2, (1, 1))],
            &[&[], &["g"], &["h"]],
            &[(0, (1, 1))],
        );
        assert!(!prob_bisimilar(&a, &b).expect("check").equivalent);
    }

    #[test]
    fn quotient_is_idempotent() {
        let a = ts(
            4,
            &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 3)],
            &[&[], &["m"], &["m"], &["end"]],
            &[0],
        );
        let q1 = quotient_ts(&a);
        let q2 = quotient_ts(&q1);
        assert_eq!(q1.states.len(), q2.states.len());
        assert!(bisimilar_ts(&a, &q1).expect("check").equivalent);
        assert!(bisimilar_ts(&q1, &q2).expect("check").equivalent);
    }
}
