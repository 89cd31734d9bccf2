//! System states: per-agent belief bases, goal sequences and inboxes,
//! plus the interpreted view used for state identity and labeling.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::lang::ast::*;

/// A message sitting in an agent's inbox.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InboxMsg {
    pub sender: String,
    pub payload: Atom,
}

/// Full execution state of one agent: raw belief base, remaining goal
/// sequence (head = focused goal base) and pending inbox.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AgentState {
    pub beliefs: BTreeSet<Atom>,
    pub goals: Vec<BTreeSet<Atom>>,
    pub inbox: BTreeSet<InboxMsg>,
}

/// Full execution state of the system, one entry per agent in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SystemState {
    pub agents: Vec<AgentState>,
}

impl SystemState {
    /// Initial state from the agent declarations. Declared outboxes are
    /// routed into the recipients' inboxes up front.
    pub fn initial(spec: &Specification) -> SystemState {
        let mut agents: Vec<AgentState> = spec
            .agents
            .iter()
            .map(|a| AgentState {
                beliefs: a.beliefs.clone(),
                goals: a.goals.clone(),
                inbox: a
                    .inbox
                    .iter()
                    .map(|m| InboxMsg {
                        sender: m.sender.clone(),
                        payload: m.payload.clone(),
                    })
                    .collect(),
            })
            .collect();
        for a in &spec.agents {
            for m in &a.outbox {
                if let Some(pos) = spec.agents.iter().position(|x| x.id == m.recipient) {
                    agents[pos].inbox.insert(InboxMsg {
                        sender: m.sender.clone(),
                        payload: m.payload.clone(),
                    });
                }
            }
        }
        SystemState { agents }
    }

    /// True iff every agent's goal sequence is empty.
    pub fn is_terminal(&self) -> bool {
        self.agents.iter().all(|a| a.goals.is_empty())
    }

    /// Exploration key: the complete state including goal sequences and
    /// inboxes. Distinguishes states the interpreted key merges.
    pub fn full_key(&self, ids: &[String]) -> String {
        let mut out = String::new();
        for (i, a) in self.agents.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            let _ = write!(out, "{}:", ids[i]);
            push_atom_set(&mut out, &a.beliefs);
            out.push('|');
            for (k, base) in a.goals.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                push_atom_set(&mut out, base);
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
}

/// The focused goal base: head of the sequence, or empty.
pub fn interpret_goals(goals: &[BTreeSet<Atom>]) -> BTreeSet<Atom> {
    goals.first().cloned().unwrap_or_default()
}

fn push_atom_set(out: &mut String, atoms: &BTreeSet<Atom>) {
    out.push('{');
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{a}");
    }
    out.push('}');
}

/// Canonical serialization of the interpreted state: per agent in
/// declaration order, `id:{sorted I(B)}|{sorted I(goals)}`. This is the
/// identity of a transition-system node.
pub fn interpreted_key(ids: &[String], interps: &[(BTreeSet<Atom>, BTreeSet<Atom>)]) -> String {
    let mut out = String::new();
    for (i, (beliefs, goals)) in interps.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        let _ = write!(out, "{}:", ids[i]);
        push_atom_set(&mut out, beliefs);
        out.push('|');
        push_atom_set(&mut out, goals);
    }
    out
}

/// The label of a state: the union over agents of id-qualified minimal
/// model atoms, e.g. `A1.at(6)`.
pub fn state_label(ids: &[String], interps: &[(BTreeSet<Atom>, BTreeSet<Atom>)]) -> BTreeSet<String> {
    let mut label = BTreeSet::new();
    for (i, (beliefs, _)) in interps.iter().enumerate() {
        for atom in beliefs {
            label.insert(format!("{}.{}", ids[i], atom));
        }
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(p: &str, args: &[&str]) -> Atom {
        Atom::new(p, args.iter().map(|a| Term::Const(a.to_string())).collect())
    }

    #[test]
    fn interpret_goals_examples() {
        let g1: BTreeSet<Atom> = [atom("g1", &[])].into_iter().collect();
        let g2: BTreeSet<Atom> = [atom("g2", &[])].into_iter().collect();
        let seq = vec![g1.clone(), g1.clone(), g2];
        assert_eq!(interpret_goals(&seq), g1);
        assert_eq!(interpret_goals(&[]), BTreeSet::new());
        let ab: BTreeSet<Atom> = [atom("a", &[]), atom("b", &[])].into_iter().collect();
        assert_eq!(interpret_goals(std::slice::from_ref(&ab)), ab);
    }

    #[test]
    fn terminal_iff_all_goal_sequences_empty() {
        let empty = AgentState {
            beliefs: BTreeSet::new(),
            goals: vec![],
            inbox: BTreeSet::new(),
        };
        let busy = AgentState {
            goals: vec![[atom("g1", &[])].into_iter().collect()],
            ..empty.clone()
        };
        assert!(SystemState {
            agents: vec![empty.clone(), empty.clone()]
        }
        .is_terminal());
        assert!(!SystemState {
            agents: vec![busy, empty]
        }
        .is_terminal());
    }

    #[test]
    fn keys_are_deterministic() {
        let ids = vec!["A1".to_string()];
        let b: BTreeSet<Atom> = [atom("at", &["6"]), atom("battery", &["1"])]
            .into_iter()
            .collect();
        let g: BTreeSet<Atom> = [atom("transport", &["3", "2"])].into_iter().collect();
        let key = interpreted_key(&ids, &[(b.clone(), g.clone())]);
        assert_eq!(key, "A1:{at(6),battery(1)}|{transport(3,2)}");
        let label = state_label(&ids, &[(b, g)]);
        assert!(label.contains("A1.at(6)"));
        assert!(label.contains("A1.battery(1)"));
    }
}
