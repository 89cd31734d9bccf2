//! Breadth-first generation of the transition system, with a per-cycle
//! memo table that replays the previous cycle's per-agent decisions when
//! a state recurs with a different residual goal sequence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::lang::ast::Specification;
use crate::semantics::{
    compose_joint, interpret_goals, interpreted_key, state_cycles, state_label, AgentCycle, Caches,
    EngineError, GroundContext, SystemState, VirtualOption,
};

pub const STUTTER_LABEL: &str = "stutter";
pub const FINAL_AP: &str = "final";
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Explicit-state transition system over canonically numbered states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    /// Canonical serialization per state; index is the state number.
    pub states: Vec<String>,
    pub transitions: BTreeSet<(usize, String, usize)>,
    pub initial: BTreeSet<usize>,
    pub finals: BTreeSet<usize>,
    pub aps: BTreeSet<String>,
    pub labels: Vec<BTreeSet<String>>,
    pub meta: ModelMeta,
}

/// Metadata carried alongside generated models so property synthesis
/// works from the persisted file alone.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(default)]
    pub safety: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub agents: Vec<String>,
}

impl TransitionSystem {
    pub fn successors(&self, s: usize) -> BTreeSet<usize> {
        self.transitions
            .range((s, String::new(), 0)..(s + 1, String::new(), 0))
            .map(|(_, _, d)| *d)
            .collect()
    }

    /// States with no outgoing transition.
    pub fn sink_states(&self) -> BTreeSet<usize> {
        let mut has_out = vec![false; self.states.len()];
        for (s, _, _) in &self.transitions {
            has_out[*s] = true;
        }
        (0..self.states.len()).filter(|s| !has_out[*s]).collect()
    }

    pub fn is_total(&self) -> bool {
        self.sink_states().is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub state_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildStats {
    pub states: usize,
    pub transitions: usize,
    /// States whose cycles ran the full decision machinery.
    pub expanded: usize,
    /// States served from the previous cycle's memo table.
    pub replayed: usize,
    pub duration: Duration,
}

/// Generate the transition system with memoized replay enabled.
pub fn build_ts(
    spec: &Specification,
    opts: &BuildOptions,
) -> Result<(TransitionSystem, BuildStats), EngineError> {
    explore(spec, opts, true)
}

/// Testing oracle: the same exploration running the full reasoning cycle
/// at every state, never consulting the memo table.
pub fn build_ts_naive(
    spec: &Specification,
    opts: &BuildOptions,
) -> Result<(TransitionSystem, BuildStats), EngineError> {
    explore(spec, opts, false)
}

/// Memo record for one state: per agent, the computed options, consumed
/// inbox and terminal flag. Only cycles whose goal handling was the
/// identity before the action phase are recorded; replay re-attaches the
/// current goal sequences and re-normalizes.
struct MemoEntry {
    per_agent: Vec<(Vec<VirtualOption>, BTreeSet<crate::semantics::InboxMsg>, bool)>,
}

/// Memo key: per agent the raw belief base, the focused goal base and
/// the pending inbox. Residual goals beyond the focus are erased.
fn memo_key(state: &SystemState, ids: &[String]) -> String {
    let mut out = String::new();
    for (i, a) in state.agents.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        let _ = write!(out, "{}:", ids[i]);
        for (k, atom) in a.beliefs.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{atom}");
        }
        out.push('|');
        for (k, g) in interpret_goals(&a.goals).iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{g}");
        }
        out.push('|');
        for (k, m) in a.inbox.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}>{}", m.sender, m.payload);
        }
    }
    out
}

fn explore(
    spec: &Specification,
    opts: &BuildOptions,
    memoize: bool,
) -> Result<(TransitionSystem, BuildStats), EngineError> {
    let start = Instant::now();
    let ctx = GroundContext::new(spec)?;
    let mut caches = Caches::default();
    let ids = ctx.agent_ids.clone();

    let mut states: Vec<String> = Vec::new();
    let mut labels: Vec<BTreeSet<String>> = Vec::new();
    let mut finals: BTreeSet<usize> = BTreeSet::new();
    let mut node_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut transitions: BTreeSet<(usize, String, usize)> = BTreeSet::new();
    let mut stats = BuildStats::default();

    let interp_of = |caches: &mut Caches, s: &SystemState| {
        let interps: Vec<_> = s
            .agents
            .iter()
            .map(|a| {
                let model = caches.knowledge.model(&ctx.knowledge, &a.beliefs);
                (model.as_ref().clone(), interpret_goals(&a.goals))
            })
            .collect();
        let key = interpreted_key(&ids, &interps);
        let label = state_label(&ids, &interps);
        (key, label, s.is_terminal())
    };

    let init = SystemState::initial(spec);
    let (init_key, init_label, init_final) = interp_of(&mut caches, &init);
    node_ids.insert(init_key.clone(), 0);
    states.push(init_key);
    labels.push(init_label);
    if init_final {
        finals.insert(0);
    }

    let mut visited_full: BTreeSet<String> = BTreeSet::new();
    visited_full.insert(init.full_key(&ids));
    let mut frontier: Vec<SystemState> = vec![init];
    // decision memo, accumulated across cycles as exploration proceeds
    let mut memo: BTreeMap<String, Rc<MemoEntry>> = BTreeMap::new();

    while !frontier.is_empty() {
        let mut level_transitions: Vec<(usize, String, String)> = Vec::new();
        let mut discovered: BTreeMap<String, (BTreeSet<String>, bool)> = BTreeMap::new();
        let mut next_frontier: BTreeMap<String, SystemState> = BTreeMap::new();

        for state in &frontier {
            if state.is_terminal() {
                continue;
            }
            let (skey, _, _) = interp_of(&mut caches, state);
            let sid = node_ids[&skey];
            let mkey = memo_key(state, &ids);
            let cycles: Vec<AgentCycle> = match memo.get(&mkey) {
                Some(entry) if memoize => {
                    stats.replayed += 1;
                    entry
                        .per_agent
                        .iter()
                        .zip(&state.agents)
                        .map(|((options, consumed, terminal), agent)| AgentCycle {
                            options: options.clone(),
                            post_event_goals: agent.goals.clone(),
                            consumed: consumed.clone(),
                            terminal: *terminal,
                            memoizable: true,
                        })
                        .collect()
                }
                _ => {
                    stats.expanded += 1;
                    let cycles = state_cycles(&ctx, &mut caches, state);
                    if memoize && cycles.iter().all(|c| c.memoizable) {
                        memo.insert(
                            mkey.clone(),
                            Rc::new(MemoEntry {
                                per_agent: cycles
                                    .iter()
                                    .map(|c| (c.options.clone(), c.consumed.clone(), c.terminal))
                                    .collect(),
                            }),
                        );
                    }
                    cycles
                }
            };
            for (action, succ) in compose_joint(&ctx, &mut caches, state, &cycles) {
                let (key, label, is_final) = interp_of(&mut caches, &succ);
                if !node_ids.contains_key(&key) {
                    discovered.entry(key.clone()).or_insert((label, is_final));
                }
                level_transitions.push((sid, action.label(), key));
                let fkey = succ.full_key(&ids);
                if visited_full.insert(fkey.clone()) {
                    if visited_full.len() > opts.state_cap {
                        return Err(EngineError::StateCapExceeded {
                            cap: opts.state_cap,
                        });
                    }
                    next_frontier.insert(fkey, succ);
                }
            }
        }

        // number newly discovered states: BFS level order, lexicographic
        // tie-break on the canonical serialization
        for (key, (label, is_final)) in discovered {
            let id = states.len();
            node_ids.insert(key.clone(), id);
            states.push(key);
            labels.push(label);
            if is_final {
                finals.insert(id);
            }
        }
        for (src, label, dst_key) in level_transitions {
            let dst = node_ids[&dst_key];
            transitions.insert((src, label, dst));
        }
        frontier = next_frontier.into_values().collect();
    }

    let mut aps: BTreeSet<String> = BTreeSet::new();
    for l in &labels {
        aps.extend(l.iter().cloned());
    }
    stats.states = states.len();
    stats.transitions = transitions.len();
    stats.duration = start.elapsed();
    let ts = TransitionSystem {
        states,
        transitions,
        initial: [0].into_iter().collect(),
        finals,
        aps,
        labels,
        meta: ModelMeta {
            safety: spec.safety.clone(),
            agents: ids,
        },
    };
    Ok((ts, stats))
}

/// Add a `stutter` self-loop to every state without outgoing transitions
/// (final and deadlocked states) and expose finality as the AP `final`.
pub fn complete_self_loops(ts: &TransitionSystem) -> TransitionSystem {
    let mut out = ts.clone();
    for s in ts.sink_states() {
        out.transitions.insert((s, STUTTER_LABEL.to_string(), s));
    }
    out.aps.insert(FINAL_AP.to_string());
    for f in &out.finals {
        out.labels[*f].insert(FINAL_AP.to_string());
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TsJson {
    version: u32,
    kind: String,
    states: Vec<String>,
    transitions: Vec<(usize, String, usize)>,
    initial: Vec<usize>,
    #[serde(rename = "final")]
    finals: Vec<usize>,
    aps: Vec<String>,
    labels: Vec<Vec<String>>,
    #[serde(default)]
    meta: ModelMeta,
}

pub fn ts_to_json(ts: &TransitionSystem) -> String {
    let doc = TsJson {
        version: 1,
        kind: "ts".to_string(),
        states: ts.states.clone(),
        transitions: ts.transitions.iter().cloned().collect(),
        initial: ts.initial.iter().copied().collect(),
        finals: ts.finals.iter().copied().collect(),
        aps: ts.aps.iter().cloned().collect(),
        labels: ts
            .labels
            .iter()
            .map(|l| l.iter().cloned().collect())
            .collect(),
        meta: ts.meta.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

pub fn ts_from_json(text: &str) -> Result<TransitionSystem, String> {
    let doc: TsJson = serde_json::from_str(text).map_err(|e| format!("invalid TS JSON: {e}"))?;
    if doc.kind != "ts" {
        return Err(format!("expected kind \"ts\", found {:?}", doc.kind));
    }
    if doc.version != 1 {
        return Err(format!("unsupported TS version {}", doc.version));
    }
    let n = doc.states.len();
    for (s, _, d) in &doc.transitions {
        if *s >= n || *d >= n {
            return Err("transition endpoint out of range".to_string());
        }
    }
    if doc.labels.len() != n {
        return Err("labels array must match states".to_string());
    }
    Ok(TransitionSystem {
        states: doc.states,
        transitions: doc.transitions.into_iter().collect(),
        initial: doc.initial.into_iter().collect(),
        finals: doc.finals.into_iter().collect(),
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
    use crate::lang::parse_spec;

    #[test]
    fn goal_free_spec_gives_single_final_state() {
        let spec = parse_spec("agents:\n  agent A1\n    beliefs: ok\n    goals:\n").expect("parses");
        let (ts, stats) = build_ts(&spec, &BuildOptions::default()).expect("builds");
        assert_eq!(ts.states.len(), 1);
        assert!(ts.transitions.is_empty());
        assert_eq!(ts.initial, [0].into_iter().collect());
        assert_eq!(ts.finals, [0].into_iter().collect());
        assert_eq!(stats.states, 1);

        let completed = complete_self_loops(&ts);
        assert_eq!(completed.transitions.len(), 1);
        assert!(completed.labels[0].contains(FINAL_AP));
    }

    #[test]
    fn json_roundtrip() {
        let spec = parse_spec("agents:\n  agent A1\n    beliefs: ok\n    goals:\n").expect("parses");
        let (ts, _) = build_ts(&spec, &BuildOptions::default()).expect("builds");
        let ts = complete_self_loops(&ts);
        let json = ts_to_json(&ts);
        let back = ts_from_json(&json).expect("parses back");
        assert_eq!(ts, back);
    }
}
