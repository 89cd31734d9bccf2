//! Core syntax tree for the `.vg` specification language.
//!
//! A specification is a set of agents plus system-wide rule sections:
//! knowledge, constraints, action rules, send rules, event rules, action
//! effects, variable domains, outcome probabilities and safety
//! declarations. See docs/LANGUAGE.md for the grammar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;

/// Source position (1-based) used by diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A term is either a constant symbol or a variable.
///
/// Constants are integers, lowercase-initial identifiers, declared agent
/// ids, and members of declared domains. Every other uppercase-initial
/// identifier is a variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Const(s) | Term::Var(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A predicate applied to terms, e.g. `at(6)` or `reserved(A1,6)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn propositional(pred: impl Into<String>) -> Self {
        Atom::new(pred, Vec::new())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    /// Variables occurring in this atom, in argument order.
    pub fn vars(&self) -> Vec<&str> {
        self.args
            .iter()
            .filter_map(|t| match t {
                Term::Var(v) => Some(v.as_str()),
                Term::Const(_) => None,
            })
            .collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A body literal. Plain literals test the derived belief model, `goal`
/// literals test the focused goal base, `received` literals match inbox
/// messages and `achieved` literals fire on goal completion (event rules
/// only).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Literal {
    Belief { atom: Atom, negated: bool },
    Goal { atom: Atom, negated: bool },
    Received { sender: Term, payload: Atom },
    Achieved { goal: Atom },
}

impl Literal {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Literal::Belief { atom, .. } | Literal::Goal { atom, .. } => atom.vars(),
            Literal::Received { sender, payload } => {
                let mut vs = Vec::new();
                if let Term::Var(v) = sender {
                    vs.push(v.as_str());
                }
                vs.extend(payload.vars());
                vs
            }
            Literal::Achieved { goal } => goal.vars(),
        }
    }

    /// A literal binds its variables during matching unless it is negated.
    pub fn is_binding(&self) -> bool {
        match self {
            Literal::Belief { negated, .. } | Literal::Goal { negated, .. } => !negated,
            Literal::Received { .. } | Literal::Achieved { .. } => true,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Belief { atom, negated } => {
                if *negated {
                    write!(f, "not {atom}")
                } else {
                    write!(f, "{atom}")
                }
            }
            Literal::Goal { atom, negated } => {
                if *negated {
                    write!(f, "not goal({atom})")
                } else {
                    write!(f, "goal({atom})")
                }
            }
            Literal::Received { sender, payload } => write!(f, "received({sender},{payload})"),
            Literal::Achieved { goal } => write!(f, "achieved({goal})"),
        }
    }
}

/// A derivation rule `body implies head`, optionally with body-scoped
/// existential variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
    pub exists_vars: BTreeSet<String>,
    pub span: Span,
}

/// A message-generation rule `trigger implies send(recipient, payload)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SendRule {
    pub trigger: Vec<Literal>,
    pub recipient: Term,
    pub payload: Atom,
    pub exists_vars: BTreeSet<String>,
    pub span: Span,
}

/// One effect of an event rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventOp {
    AddBelief(Atom),
    DelBelief(Atom),
    AdoptGoal(Vec<Atom>),
    DropGoal(Vec<Atom>),
}

impl fmt::Display for EventOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bases = |f: &mut fmt::Formatter<'_>, atoms: &[Atom]| -> fmt::Result {
            write!(f, "[")?;
            for (i, a) in atoms.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, "]")
        };
        match self {
            EventOp::AddBelief(a) => write!(f, "add {a}"),
            EventOp::DelBelief(a) => write!(f, "del {a}"),
            EventOp::AdoptGoal(b) => {
                write!(f, "adopt ")?;
                bases(f, b)
            }
            EventOp::DropGoal(b) => {
                write!(f, "drop ")?;
                bases(f, b)
            }
        }
    }
}

/// An event-processing rule `trigger implies op, op, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRule {
    pub trigger: Vec<Literal>,
    pub ops: Vec<EventOp>,
    pub exists_vars: BTreeSet<String>,
    pub span: Span,
}

impl EventRule {
    pub fn received_literal(&self) -> Option<&Literal> {
        self.trigger
            .iter()
            .find(|l| matches!(l, Literal::Received { .. }))
    }

    pub fn achieved_literal(&self) -> Option<&Literal> {
        self.trigger
            .iter()
            .find(|l| matches!(l, Literal::Achieved { .. }))
    }
}

/// One declared outcome of an action: a label plus STRIPS add/delete lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub label: String,
    pub adds: Vec<Atom>,
    pub dels: Vec<Atom>,
}

/// An action schema: parameters, precondition and outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDef {
    pub name: String,
    pub params: Vec<String>,
    pub pre: Vec<Literal>,
    pub outcomes: Vec<Outcome>,
    pub span: Span,
}

/// A message in transit: sender, recipient and a ground payload atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Message {
    pub sender: String,
    pub recipient: String,
    pub payload: Atom,
}

/// The declaration of one agent: id, initial beliefs, goal sequence and
/// (usually empty) initial outbox/inbox.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSpec {
    pub id: String,
    pub beliefs: BTreeSet<Atom>,
    pub goals: Vec<BTreeSet<Atom>>,
    pub outbox: BTreeSet<Message>,
    pub inbox: BTreeSet<Message>,
    pub span: Span,
}

/// A parsed specification with its ten sections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Specification {
    pub agents: Vec<AgentSpec>,
    pub knowledge: Vec<Rule>,
    pub constraints: Vec<Rule>,
    pub action_rules: Vec<Rule>,
    pub send_rules: Vec<SendRule>,
    pub event_rules: Vec<EventRule>,
    pub effects: Vec<ActionDef>,
    /// Domain name -> constants, in declaration order (no duplicates).
    pub domains: BTreeMap<String, Vec<String>>,
    /// Outcome label (or action-name shorthand) -> probability.
    pub prob: BTreeMap<String, BigRational>,
    /// Agent id -> names of its safety atoms.
    pub safety: BTreeMap<String, Vec<String>>,
}

impl Specification {
    pub fn agent(&self, id: &str) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn agent_ids(&self) -> Vec<&str> {
        self.agents.iter().map(|a| a.id.as_str()).collect()
    }

    pub fn action_def(&self, name: &str) -> Option<&ActionDef> {
        self.effects.iter().find(|d| d.name == name)
    }

    /// Probability map with action-name shorthands resolved to the
    /// success (first declared) outcome label of the action.
    pub fn resolved_prob(&self) -> BTreeMap<String, BigRational> {
        let mut out = BTreeMap::new();
        for (key, p) in &self.prob {
            let resolved = match self.action_def(key) {
                Some(def) if !self.is_outcome_label(key) => def
                    .outcomes
                    .first()
                    .map(|o| o.label.clone())
                    .unwrap_or_else(|| key.clone()),
                _ => key.clone(),
            };
            out.insert(resolved, p.clone());
        }
        out
    }

    pub fn is_outcome_label(&self, label: &str) -> bool {
        self.effects
            .iter()
            .any(|d| d.outcomes.iter().any(|o| o.label == label))
    }
}
