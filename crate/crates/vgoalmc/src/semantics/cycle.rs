//! The per-agent reasoning cycle and the synchronous joint step.
//!
//! One cycle per agent: (1) event rules process the inbox and belief
//! triggers, (2) achieved focused goals pop (firing achievement
//! handlers), (3) constraints derive, (4) feasible actions generate one
//! option per declared outcome, applying add/delete lists, (5) send
//! rules emit messages from the post-effect state. A blocked agent with
//! goals contributes a `skip` option; an agent without goals contributes
//! its (event-updated) substate unchanged. The joint step is the
//! Cartesian product of per-agent options with messages routed into
//! recipient inboxes for the next cycle.

use std::collections::{BTreeMap, BTreeSet};

use crate::lang::ast::*;
use crate::lang::ground::{
    ground_action_def, ground_event_rule, ground_rule, ground_send_rule, GroundAction,
};
use crate::lang::validate::{has_errors, validate};

use super::model::{ModelCache, StratifiedRules};
use super::state::{interpret_goals, AgentState, InboxMsg, SystemState};
use super::EngineError;

/// The label used for an agent that takes no action this cycle.
pub const SKIP_LABEL: &str = "skip";

/// A specification grounded over its domains and ready to execute.
pub struct GroundContext {
    pub spec: Specification,
    pub agent_ids: Vec<String>,
    pub knowledge: StratifiedRules,
    pub constraints: StratifiedRules,
    action_rules: Vec<Rule>,
    send_rules: Vec<SendRule>,
    msg_events: Vec<EventRule>,
    belief_events: Vec<EventRule>,
    achieve_events: Vec<EventRule>,
    actions: BTreeMap<Atom, GroundAction>,
}

impl GroundContext {
    /// Validate and ground a specification. Fails on validation errors
    /// (warnings, e.g. dropped messages to absent agents, pass).
    pub fn new(spec: &Specification) -> Result<GroundContext, EngineError> {
        let diags = validate(spec);
        if has_errors(&diags) {
            let text = diags
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("\n");
            return Err(EngineError::Invalid(text));
        }
        let domains = &spec.domains;
        let knowledge = StratifiedRules::build(&spec.knowledge, domains)?;
        let constraints = StratifiedRules::build(&spec.constraints, domains)?;
        let mut action_rules = Vec::new();
        for rule in &spec.action_rules {
            action_rules.extend(ground_rule(rule, domains)?);
        }
        let ids: BTreeSet<&str> = spec.agents.iter().map(|a| a.id.as_str()).collect();
        let mut send_rules = Vec::new();
        for rule in &spec.send_rules {
            for g in ground_send_rule(rule, domains)? {
                // messages to absent agents are dropped (validation warned)
                if matches!(&g.recipient, Term::Const(c) if ids.contains(c.as_str())) {
                    send_rules.push(g);
                }
            }
        }
        let mut msg_events = Vec::new();
        let mut belief_events = Vec::new();
        let mut achieve_events = Vec::new();
        for rule in &spec.event_rules {
            for g in ground_event_rule(rule, domains)? {
                if g.received_literal().is_some() {
                    msg_events.push(g);
                } else if g.achieved_literal().is_some() {
                    achieve_events.push(g);
                } else {
                    belief_events.push(g);
                }
            }
        }
        let mut actions = BTreeMap::new();
        for def in &spec.effects {
            for g in ground_action_def(def, domains)? {
                actions.insert(g.head.clone(), g);
            }
        }
        Ok(GroundContext {
            agent_ids: spec.agents.iter().map(|a| a.id.clone()).collect(),
            spec: spec.clone(),
            knowledge,
            constraints,
            action_rules,
            send_rules,
            msg_events,
            belief_events,
            achieve_events,
            actions,
        })
    }
}

/// Minimal-model memos for the knowledge and constraint programs.
#[derive(Default)]
pub struct Caches {
    pub knowledge: ModelCache,
    pub constraints: ModelCache,
}

impl Caches {
    fn model(&mut self, ctx: &GroundContext, beliefs: &BTreeSet<Atom>) -> std::rc::Rc<BTreeSet<Atom>> {
        self.knowledge.model(&ctx.knowledge, beliefs)
    }

    fn constrained(
        &mut self,
        ctx: &GroundContext,
        model: &BTreeSet<Atom>,
    ) -> std::rc::Rc<BTreeSet<Atom>> {
        if ctx.constraints.is_empty() {
            return self.knowledge.model(&ctx.knowledge, model);
        }
        self.constraints.model(&ctx.constraints, model)
    }
}

struct EvalCtx<'a> {
    model: &'a BTreeSet<Atom>,
    goal: &'a BTreeSet<Atom>,
    inbox: &'a BTreeSet<InboxMsg>,
}

fn holds(lit: &Literal, e: &EvalCtx) -> bool {
    match lit {
        Literal::Belief { atom, negated } => e.model.contains(atom) != *negated,
        Literal::Goal { atom, negated } => e.goal.contains(atom) != *negated,
        Literal::Received { sender, payload } => match sender {
            Term::Const(s) => e.inbox.contains(&InboxMsg {
                sender: s.clone(),
                payload: payload.clone(),
            }),
            Term::Var(_) => false,
        },
        Literal::Achieved { .. } => false,
    }
}

fn body_holds(body: &[Literal], e: &EvalCtx) -> bool {
    body.iter().all(|l| holds(l, e))
}

/// One candidate next step for an agent: an outcome label, the raw
/// post-effect belief base (goal popping not yet applied) and the
/// messages sent from that option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualOption {
    pub label: String,
    pub beliefs: BTreeSet<Atom>,
    pub sent: BTreeSet<(String, Atom)>,
}

/// The outcome of one agent's reasoning cycle.
pub struct AgentCycle {
    pub options: Vec<VirtualOption>,
    /// Goal sequence after event processing and pre-action popping;
    /// option beliefs normalize against this sequence.
    pub post_event_goals: Vec<BTreeSet<Atom>>,
    pub consumed: BTreeSet<InboxMsg>,
    pub terminal: bool,
    /// False when events changed goals or a pre-action pop fired; such
    /// cycles must not be replayed against a different goal sequence.
    pub memoizable: bool,
}

/// Apply event rules: inbox messages in canonical order first, then
/// belief-triggered rules, each applied sequentially.
fn event_phase(
    ctx: &GroundContext,
    caches: &mut Caches,
    beliefs: &mut BTreeSet<Atom>,
    goals: &mut Vec<BTreeSet<Atom>>,
    inbox: &BTreeSet<InboxMsg>,
) -> bool {
    let mut changed_goals = false;
    let apply_ops = |ops: &[EventOp],
                         beliefs: &mut BTreeSet<Atom>,
                         goals: &mut Vec<BTreeSet<Atom>>,
                         changed_goals: &mut bool| {
        for op in ops {
            match op {
                EventOp::AddBelief(a) => {
                    beliefs.insert(a.clone());
                }
                EventOp::DelBelief(a) => {
                    beliefs.remove(a);
                }
                EventOp::AdoptGoal(base) => {
                    goals.push(base.iter().cloned().collect());
                    *changed_goals = true;
                }
                EventOp::DropGoal(base) => {
                    let target: BTreeSet<Atom> = base.iter().cloned().collect();
                    let before = goals.len();
                    goals.retain(|b| *b != target);
                    if goals.len() != before {
                        *changed_goals = true;
                    }
                }
            }
        }
    };

    for msg in inbox.iter() {
        for rule in &ctx.msg_events {
            let (sender, payload) = match rule.received_literal() {
                Some(Literal::Received { sender, payload }) => (sender, payload),
                _ => continue,
            };
            if !matches!(sender, Term::Const(s) if *s == msg.sender) || payload != &msg.payload {
                continue;
            }
            let model = caches.model(ctx, beliefs);
            let focus = interpret_goals(goals);
            let e = EvalCtx {
                model: &model,
                goal: &focus,
                inbox,
            };
            let rest: Vec<&Literal> = rule
                .trigger
                .iter()
                .filter(|l| !matches!(l, Literal::Received { .. }))
                .collect();
            if rest.iter().all(|l| holds(l, &e)) {
                apply_ops(&rule.ops, beliefs, goals, &mut changed_goals);
            }
        }
    }
    for rule in &ctx.belief_events {
        let model = caches.model(ctx, beliefs);
        let focus = interpret_goals(goals);
        let e = EvalCtx {
            model: &model,
            goal: &focus,
            inbox,
        };
        if body_holds(&rule.trigger, &e) {
            apply_ops(&rule.ops, beliefs, goals, &mut changed_goals);
        }
    }
    changed_goals
}

/// Pop focused goal bases that hold in the current minimal model. Each
/// pop fires matching achievement handlers before the base is removed;
/// popping continues while the (new) focus is satisfied. Returns the
/// number of pops.
pub fn normalize_goals(
    ctx: &GroundContext,
    caches: &mut Caches,
    beliefs: &mut BTreeSet<Atom>,
    goals: &mut Vec<BTreeSet<Atom>>,
) -> usize {
    let mut pops = 0;
    loop {
        let focused = match goals.first() {
            Some(f) if !f.is_empty() => f.clone(),
            Some(_) => {
                // an empty goal base is trivially achieved
                goals.remove(0);
                pops += 1;
                continue;
            }
            None => break,
        };
        let model = caches.model(ctx, beliefs);
        if !focused.iter().all(|g| model.contains(g)) {
            break;
        }
        let empty_inbox = BTreeSet::new();
        let snapshot = model.as_ref().clone();
        for rule in &ctx.achieve_events {
            let goal_atom = match rule.achieved_literal() {
                Some(Literal::Achieved { goal }) => goal,
                _ => continue,
            };
            if !focused.contains(goal_atom) {
                continue;
            }
            let e = EvalCtx {
                model: &snapshot,
                goal: &focused,
                inbox: &empty_inbox,
            };
            let rest: Vec<&Literal> = rule
                .trigger
                .iter()
                .filter(|l| !matches!(l, Literal::Achieved { .. }))
                .collect();
            if rest.iter().all(|l| holds(l, &e)) {
                for op in &rule.ops {
                    match op {
                        EventOp::AddBelief(a) => {
                            beliefs.insert(a.clone());
                        }
                        EventOp::DelBelief(a) => {
                            beliefs.remove(a);
                        }
                        EventOp::AdoptGoal(_) | EventOp::DropGoal(_) => {}
                    }
                }
            }
        }
        goals.remove(0);
        pops += 1;
    }
    pops
}

fn eval_sends(
    ctx: &GroundContext,
    model: &BTreeSet<Atom>,
    goal: &BTreeSet<Atom>,
    inbox: &BTreeSet<InboxMsg>,
) -> BTreeSet<(String, Atom)> {
    let mut out = BTreeSet::new();
    let e = EvalCtx { model, goal, inbox };
    for rule in &ctx.send_rules {
        if body_holds(&rule.trigger, &e) {
            if let Term::Const(recipient) = &rule.recipient {
                out.insert((recipient.clone(), rule.payload.clone()));
            }
        }
    }
    out
}

/// Run one reasoning cycle for the agent at `idx`.
pub fn agent_cycle(ctx: &GroundContext, caches: &mut Caches, agent: &AgentState) -> AgentCycle {
    let mut beliefs = agent.beliefs.clone();
    let mut goals = agent.goals.clone();
    let inbox = agent.inbox.clone();

    let changed_goals = event_phase(ctx, caches, &mut beliefs, &mut goals, &inbox);
    let pre_pops = normalize_goals(ctx, caches, &mut beliefs, &mut goals);
    let memoizable = !changed_goals && pre_pops == 0;

    if goals.is_empty() {
        let model = caches.model(ctx, &beliefs);
        let sent = eval_sends(ctx, &model, &BTreeSet::new(), &inbox);
        return AgentCycle {
            options: vec![VirtualOption {
                label: SKIP_LABEL.to_string(),
                beliefs,
                sent,
            }],
            post_event_goals: goals,
            consumed: inbox,
            terminal: true,
            memoizable,
        };
    }

    let model = caches.model(ctx, &beliefs);
    let constrained = caches.constrained(ctx, &model);
    let focus = goals[0].clone();
    let e = EvalCtx {
        model: &constrained,
        goal: &focus,
        inbox: &inbox,
    };
    let mut candidates: BTreeSet<Atom> = BTreeSet::new();
    for rule in &ctx.action_rules {
        if body_holds(&rule.body, &e) {
            candidates.insert(rule.head.clone());
        }
    }
    let mut options = Vec::new();
    for cand in &candidates {
        let Some(action) = ctx.actions.get(cand) else {
            continue;
        };
        if !body_holds(&action.pre, &e) {
            continue;
        }
        for outcome in &action.outcomes {
            let mut next = beliefs.clone();
            for d in &outcome.dels {
                next.remove(d);
            }
            for a in &outcome.adds {
                next.insert(a.clone());
            }
            let next_model = caches.model(ctx, &next);
            let sent = eval_sends(ctx, &next_model, &focus, &inbox);
            options.push(VirtualOption {
                label: outcome.label.clone(),
                beliefs: next,
                sent,
            });
        }
    }
    if options.is_empty() {
        let sent = eval_sends(ctx, &model, &focus, &inbox);
        options.push(VirtualOption {
            label: SKIP_LABEL.to_string(),
            beliefs,
            sent,
        });
    }
    AgentCycle {
        options,
        post_event_goals: goals,
        consumed: inbox,
        terminal: false,
        memoizable,
    }
}

/// One reasoning cycle for a single agent, as a set of
/// (outcome label, successor agent state, outgoing messages) options.
/// Agents without goals contribute nothing here.
pub fn agent_options(
    ctx: &GroundContext,
    caches: &mut Caches,
    agent: &AgentState,
) -> Vec<(String, AgentState, BTreeSet<(String, Atom)>)> {
    let cycle = agent_cycle(ctx, caches, agent);
    if cycle.terminal {
        return Vec::new();
    }
    cycle
        .options
        .iter()
        .map(|opt| {
            let mut beliefs = opt.beliefs.clone();
            let mut goals = cycle.post_event_goals.clone();
            normalize_goals(ctx, caches, &mut beliefs, &mut goals);
            (
                opt.label.clone(),
                AgentState {
                    beliefs,
                    goals,
                    inbox: BTreeSet::new(),
                },
                opt.sent.clone(),
            )
        })
        .collect()
}

/// A joint action: per agent, the consumed inbox and the chosen outcome
/// label (`skip` for blocked or goal-free agents).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointAction {
    pub entries: Vec<(String, BTreeSet<InboxMsg>, String)>,
}

impl JointAction {
    /// Canonical label, e.g. `A1:move_ok|A2:skip|R:skip`.
    pub fn label(&self) -> String {
        self.entries
            .iter()
            .map(|(id, _, lab)| format!("{id}:{lab}"))
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Outcome labels of a canonical label string.
    pub fn labels_of(label: &str) -> Vec<&str> {
        label
            .split('|')
            .map(|part| part.split_once(':').map(|(_, l)| l).unwrap_or(part))
            .collect()
    }
}

/// Compose per-agent cycles into joint successors: the Cartesian product
/// of options, with sent messages routed into recipient inboxes. A joint
/// option where every agent skips and nothing changes is dropped.
pub fn compose_joint(
    ctx: &GroundContext,
    caches: &mut Caches,
    state: &SystemState,
    cycles: &[AgentCycle],
) -> Vec<(JointAction, SystemState)> {
    let n = cycles.len();
    let mut successors = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let chosen: Vec<&VirtualOption> = (0..n).map(|i| &cycles[i].options[choice[i]]).collect();
        // route messages first: inboxes of the successor state
        let mut inboxes: Vec<BTreeSet<InboxMsg>> = vec![BTreeSet::new(); n];
        for (i, opt) in chosen.iter().enumerate() {
            for (recipient, payload) in &opt.sent {
                if let Some(j) = ctx.agent_ids.iter().position(|id| id == recipient) {
                    inboxes[j].insert(InboxMsg {
                        sender: ctx.agent_ids[i].clone(),
                        payload: payload.clone(),
                    });
                }
            }
        }
        let mut agents = Vec::with_capacity(n);
        for (i, opt) in chosen.iter().enumerate() {
            let mut beliefs = opt.beliefs.clone();
            let mut goals = cycles[i].post_event_goals.clone();
            normalize_goals(ctx, caches, &mut beliefs, &mut goals);
            agents.push(AgentState {
                beliefs,
                goals,
                inbox: std::mem::take(&mut inboxes[i]),
            });
        }
        let successor = SystemState { agents };
        let all_skip = chosen.iter().all(|o| o.label == SKIP_LABEL);
        if !(all_skip && successor == *state) {
            let action = JointAction {
                entries: (0..n)
                    .map(|i| {
                        (
                            ctx.agent_ids[i].clone(),
                            cycles[i].consumed.clone(),
                            chosen[i].label.clone(),
                        )
                    })
                    .collect(),
            };
            successors.push((action, successor));
        }
        // odometer increment over option indices
        let mut k = n;
        loop {
            if k == 0 {
                return successors;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < cycles[k].options.len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// All (joint action, successor) pairs of a non-terminal state.
pub fn joint_successors(
    ctx: &GroundContext,
    caches: &mut Caches,
    state: &SystemState,
) -> Vec<(JointAction, SystemState)> {
    if state.is_terminal() {
        return Vec::new();
    }
    let cycles: Vec<AgentCycle> = state
        .agents
        .iter()
        .map(|a| agent_cycle(ctx, caches, a))
        .collect();
    compose_joint(ctx, caches, state, &cycles)
}

/// Run the per-agent cycles of a state, for builders that memoize them.
pub fn state_cycles(ctx: &GroundContext, caches: &mut Caches, state: &SystemState) -> Vec<AgentCycle> {
    state
        .agents
        .iter()
        .map(|a| agent_cycle(ctx, caches, a))
        .collect()
}
