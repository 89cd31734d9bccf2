//! Static validation of a parsed specification.
//!
//! Validation never fails; it reports a list of diagnostics. Builders
//! refuse to run when any diagnostic has `Severity::Error`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use super::ast::*;
use super::ground::domain_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => write!(f, "warning"),
            Severity::Error => write!(f, "error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Run all static checks; an empty result means the specification is
/// well-formed (warnings may still be present for droppable issues).
pub fn validate(spec: &Specification) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut push = |severity: Severity, span: Span, message: String| {
        diags.push(Diagnostic {
            severity,
            span,
            message,
        });
    };

    check_probabilities(spec, &mut push);
    check_ground_agent_sections(spec, &mut push);
    check_rule_shapes(spec, &mut push);
    check_action_defs(spec, &mut push);
    check_safety_section(spec, &mut push);
    check_send_recipients(spec, &mut push);
    check_event_rules(spec, &mut push);
    check_stratification(spec, &mut push);
    diags
}

fn check_probabilities(spec: &Specification, push: &mut impl FnMut(Severity, Span, String)) {
    for (label, p) in &spec.prob {
        if p < &num_rational::BigRational::zero() || p > &num_rational::BigRational::one() {
            push(
                Severity::Error,
                Span::default(),
                format!("probability out of range: `{label}` = {p} not in [0,1]"),
            );
        }
        let is_action = spec.effects.iter().any(|d| d.name == *label);
        if !spec.is_outcome_label(label) && !is_action {
            push(
                Severity::Error,
                Span::default(),
                format!("probability entry `{label}` names no declared outcome or action"),
            );
        }
    }
}

fn check_ground_agent_sections(
    spec: &Specification,
    push: &mut impl FnMut(Severity, Span, String),
) {
    for agent in &spec.agents {
        for atom in &agent.beliefs {
            if !atom.is_ground() {
                push(
                    Severity::Error,
                    agent.span,
                    format!("belief `{atom}` of agent {} is not ground", agent.id),
                );
            }
        }
        for base in &agent.goals {
            for atom in base {
                if !atom.is_ground() {
                    push(
                        Severity::Error,
                        agent.span,
                        format!("goal atom `{atom}` of agent {} is not ground", agent.id),
                    );
                }
            }
        }
    }
}

fn var_has_domain(var: &str, domains: &BTreeMap<String, Vec<String>>) -> bool {
    domains.contains_key(&domain_key(var))
}

fn positive_body_vars(body: &[Literal]) -> BTreeSet<String> {
    let mut vars = BTreeSet::new();
    for lit in body {
        if lit.is_binding() {
            for v in lit.vars() {
                vars.insert(v.to_string());
            }
        }
    }
    vars
}

fn check_rule_vars(
    kind: &str,
    span: Span,
    head_vars: &[&str],
    body: &[Literal],
    exists: &BTreeSet<String>,
    domains: &BTreeMap<String, Vec<String>>,
    push: &mut impl FnMut(Severity, Span, String),
) {
    let positive = positive_body_vars(body);
    for v in head_vars {
        if exists.contains(*v) {
            push(
                Severity::Error,
                span,
                format!("{kind}: head variable `{v}` is declared existential"),
            );
        }
        if !positive.contains(*v) && !var_has_domain(v, domains) {
            push(
                Severity::Error,
                span,
                format!("unsafe rule: head variable `{v}` occurs in no positive body literal and has no domain"),
            );
        }
    }
    let mut body_vars = BTreeSet::new();
    for lit in body {
        for v in lit.vars() {
            body_vars.insert(v.to_string());
        }
    }
    for v in &body_vars {
        if !head_vars.contains(&v.as_str()) && !exists.contains(v) {
            push(
                Severity::Error,
                span,
                format!("{kind}: body variable `{v}` must be declared with `exists` or appear in the head"),
            );
        }
        if !var_has_domain(v, domains) {
            push(
                Severity::Error,
                span,
                format!("{kind}: variable `{v}` has no domain named `{}`", domain_key(v)),
            );
        }
    }
    for v in exists {
        if !body_vars.contains(v) {
            push(
                Severity::Warning,
                span,
                format!("{kind}: existential variable `{v}` is unused"),
            );
        }
    }
}

fn check_rule_shapes(spec: &Specification, push: &mut impl FnMut(Severity, Span, String)) {
    for (section, rules, allow_goal) in [
        ("knowledge rule", &spec.knowledge, false),
        ("constraint rule", &spec.constraints, false),
        ("action rule", &spec.action_rules, true),
    ] {
        for rule in rules.iter() {
            for lit in &rule.body {
                match lit {
                    Literal::Goal { .. } if !allow_goal => push(
                        Severity::Error,
                        rule.span,
                        format!("{section}: goal(...) literals are not allowed here"),
                    ),
                    Literal::Received { .. } => push(
                        Severity::Error,
                        rule.span,
                        format!("{section}: received(...) literals are not allowed here"),
                    ),
                    Literal::Achieved { .. } => push(
                        Severity::Error,
                        rule.span,
                        format!("{section}: achieved(...) literals are only allowed in event rules"),
                    ),
                    _ => {}
                }
            }
            let head_vars = rule.head.vars();
            check_rule_vars(
                section,
                rule.span,
                &head_vars,
                &rule.body,
                &rule.exists_vars,
                &spec.domains,
                push,
            );
        }
    }
    // action rule heads must name a declared action with matching arity
    for rule in &spec.action_rules {
        match spec.action_def(&rule.head.pred) {
            None => push(
                Severity::Error,
                rule.span,
                format!("action rule head `{}` names no declared action", rule.head.pred),
            ),
            Some(def) if def.params.len() != rule.head.args.len() => push(
                Severity::Error,
                rule.span,
                format!(
                    "action rule head `{}` has {} args but the action takes {}",
                    rule.head.pred,
                    rule.head.args.len(),
                    def.params.len()
                ),
            ),
            Some(_) => {}
        }
    }
    for rule in &spec.send_rules {
        for lit in &rule.trigger {
            if matches!(lit, Literal::Achieved { .. }) {
                push(
                    Severity::Error,
                    rule.span,
                    "send rule: achieved(...) literals are only allowed in event rules".into(),
                );
            }
        }
        let mut head_vars: Vec<&str> = rule.payload.vars();
        if let Term::Var(v) = &rule.recipient {
            head_vars.push(v.as_str());
        }
        check_rule_vars(
            "send rule",
            rule.span,
            &head_vars,
            &rule.trigger,
            &rule.exists_vars,
            &spec.domains,
            push,
        );
    }
    for rule in &spec.event_rules {
        let mut head_vars: Vec<&str> = Vec::new();
        for op in &rule.ops {
            match op {
                EventOp::AddBelief(a) | EventOp::DelBelief(a) => head_vars.extend(a.vars()),
                EventOp::AdoptGoal(base) | EventOp::DropGoal(base) => {
                    for a in base {
                        head_vars.extend(a.vars());
                    }
                }
            }
        }
        check_rule_vars(
            "event rule",
            rule.span,
            &head_vars,
            &rule.trigger,
            &rule.exists_vars,
            &spec.domains,
            push,
        );
    }
}

fn check_action_defs(spec: &Specification, push: &mut impl FnMut(Severity, Span, String)) {
    let mut seen_labels: BTreeMap<&str, &str> = BTreeMap::new();
    let mut known_preds: BTreeSet<&str> = BTreeSet::new();
    for agent in &spec.agents {
        known_preds.extend(agent.beliefs.iter().map(|a| a.pred.as_str()));
        for base in &agent.goals {
            known_preds.extend(base.iter().map(|a| a.pred.as_str()));
        }
    }
    for rule in spec
        .knowledge
        .iter()
        .chain(&spec.constraints)
        .chain(&spec.action_rules)
    {
        known_preds.insert(rule.head.pred.as_str());
        for lit in &rule.body {
            collect_literal_preds(lit, &mut known_preds);
        }
    }
    for rule in &spec.send_rules {
        known_preds.insert(rule.payload.pred.as_str());
        for lit in &rule.trigger {
            collect_literal_preds(lit, &mut known_preds);
        }
    }
    for rule in &spec.event_rules {
        for lit in &rule.trigger {
            collect_literal_preds(lit, &mut known_preds);
        }
        for op in &rule.ops {
            match op {
                EventOp::AddBelief(a) | EventOp::DelBelief(a) => {
                    known_preds.insert(a.pred.as_str());
                }
                EventOp::AdoptGoal(base) | EventOp::DropGoal(base) => {
                    known_preds.extend(base.iter().map(|a| a.pred.as_str()));
                }
            }
        }
    }
    for def in &spec.effects {
        for lit in &def.pre {
            collect_literal_preds(lit, &mut known_preds);
        }
    }

    for def in &spec.effects {
        if def.outcomes.is_empty() {
            push(
                Severity::Error,
                def.span,
                format!("action `{}` declares no outcomes", def.name),
            );
        }
        let mut local = BTreeSet::new();
        for o in &def.outcomes {
            if !local.insert(o.label.as_str()) {
                push(
                    Severity::Error,
                    def.span,
                    format!("action `{}` repeats outcome label `{}`", def.name, o.label),
                );
            }
            match seen_labels.get(o.label.as_str()) {
                Some(other) if *other != def.name => push(
                    Severity::Error,
                    def.span,
                    format!(
                        "outcome label `{}` is used by both `{other}` and `{}`",
                        o.label, def.name
                    ),
                ),
                _ => {
                    seen_labels.insert(o.label.as_str(), def.name.as_str());
                }
            }
            for atom in o.adds.iter().chain(&o.dels) {
                if !known_preds.contains(atom.pred.as_str()) {
                    push(
                        Severity::Warning,
                        def.span,
                        format!(
                            "effect of `{}` references predicate `{}` that appears nowhere else (possible typo)",
                            def.name, atom.pred
                        ),
                    );
                }
                for v in atom.vars() {
                    if !def.params.iter().any(|p| p == v) {
                        push(
                            Severity::Error,
                            def.span,
                            format!(
                                "effect of `{}` uses variable `{v}` that is not a parameter",
                                def.name
                            ),
                        );
                    }
                }
            }
        }
        for lit in &def.pre {
            for v in lit.vars() {
                if !def.params.iter().any(|p| p == v) {
                    push(
                        Severity::Error,
                        def.span,
                        format!(
                            "precondition of `{}` uses variable `{v}` that is not a parameter",
                            def.name
                        ),
                    );
                }
            }
        }
        for p in &def.params {
            if !var_has_domain(p, &spec.domains) {
                push(
                    Severity::Error,
                    def.span,
                    format!(
                        "action `{}`: parameter `{p}` has no domain named `{}`",
                        def.name,
                        domain_key(p)
                    ),
                );
            }
        }
    }
}

fn collect_literal_preds<'a>(lit: &'a Literal, preds: &mut BTreeSet<&'a str>) {
    match lit {
        Literal::Belief { atom, .. } | Literal::Goal { atom, .. } => {
            preds.insert(atom.pred.as_str());
        }
        Literal::Received { payload, .. } => {
            preds.insert(payload.pred.as_str());
        }
        Literal::Achieved { goal } => {
            preds.insert(goal.pred.as_str());
        }
    }
}

fn check_safety_section(spec: &Specification, push: &mut impl FnMut(Severity, Span, String)) {
    let heads: BTreeSet<&str> = spec
        .knowledge
        .iter()
        .chain(&spec.constraints)
        .map(|r| r.head.pred.as_str())
        .collect();
    for (agent, atoms) in &spec.safety {
        if spec.agent(agent).is_none() {
            push(
                Severity::Error,
                Span::default(),
                format!("safety section names undeclared agent `{agent}`"),
            );
        }
        for atom in atoms {
            if !heads.contains(atom.as_str()) {
                push(
                    Severity::Error,
                    Span::default(),
                    format!("safety atom `{atom}` is not derivable (no rule has it as head)"),
                );
            }
        }
    }
}

fn check_send_recipients(spec: &Specification, push: &mut impl FnMut(Severity, Span, String)) {
    let ids: BTreeSet<&str> = spec.agents.iter().map(|a| a.id.as_str()).collect();
    for rule in &spec.send_rules {
        match &rule.recipient {
            Term::Const(c) => {
                if !ids.contains(c.as_str()) {
                    push(
                        Severity::Warning,
                        rule.span,
                        format!("send rule recipient `{c}` is not a declared agent; messages to it are dropped"),
                    );
                }
            }
            Term::Var(v) => {
                // after grounding the recipient constants must be agent ids
                if let Some(consts) = spec.domains.get(&domain_key(v)) {
                    let stray: Vec<&String> =
                        consts.iter().filter(|c| !ids.contains(c.as_str())).collect();
                    if !stray.is_empty() {
                        push(
                            Severity::Warning,
                            rule.span,
                            format!(
                                "send rule recipient variable `{v}` ranges over non-agent constants {:?}; those messages are dropped",
                                stray
                            ),
                        );
                    }
                }
            }
        }
    }
}

fn check_event_rules(spec: &Specification, push: &mut impl FnMut(Severity, Span, String)) {
    for rule in &spec.event_rules {
        let received = rule
            .trigger
            .iter()
            .filter(|l| matches!(l, Literal::Received { .. }))
            .count();
        if received > 1 {
            push(
                Severity::Error,
                rule.span,
                "event rule: at most one received(...) literal is supported".into(),
            );
        }
        let achieved = rule
            .trigger
            .iter()
            .filter(|l| matches!(l, Literal::Achieved { .. }))
            .count();
        if achieved > 1 {
            push(
                Severity::Error,
                rule.span,
                "event rule: at most one achieved(...) literal is supported".into(),
            );
        }
        if achieved > 0 && received > 0 {
            push(
                Severity::Error,
                rule.span,
                "event rule: received(...) and achieved(...) cannot be combined".into(),
            );
        }
        if achieved > 0 {
            for op in &rule.ops {
                if matches!(op, EventOp::AdoptGoal(_) | EventOp::DropGoal(_)) {
                    push(
                        Severity::Error,
                        rule.span,
                        "achievement handlers may only add or delete beliefs".into(),
                    );
                }
            }
        }
    }
}

/// Stratification check: the predicate dependency graph of a rule
/// program must have no cycle that passes through a negated edge.
fn check_stratification(spec: &Specification, push: &mut impl FnMut(Severity, Span, String)) {
    for (section, rules) in [("knowledge", &spec.knowledge), ("constraints", &spec.constraints)] {
        if let Some(cycle_pred) = find_negative_cycle(rules) {
            push(
                Severity::Error,
                Span::default(),
                format!(
                    "{section} rules are not stratified: predicate `{cycle_pred}` depends negatively on itself"
                ),
            );
        }
    }
}

fn find_negative_cycle(rules: &[Rule]) -> Option<String> {
    // edges head -> body predicate, marked negative for negated literals
    let mut preds: BTreeSet<&str> = BTreeSet::new();
    let mut edges: BTreeSet<(&str, &str, bool)> = BTreeSet::new();
    for rule in rules {
        preds.insert(rule.head.pred.as_str());
        for lit in &rule.body {
            if let Literal::Belief { atom, negated } = lit {
                preds.insert(atom.pred.as_str());
                edges.insert((rule.head.pred.as_str(), atom.pred.as_str(), *negated));
            }
        }
    }
    // a negative edge inside a strongly connected component is a violation
    let nodes: Vec<&str> = preds.into_iter().collect();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (h, b, _) in &edges {
        adj[index[h]].push(index[b]);
    }
    let scc = tarjan_scc(&adj);
    for (h, b, neg) in &edges {
        if *neg && scc[index[h]] == scc[index[b]] {
            // self-negation or a loop back from body to head
            if index[h] == index[b] || scc_has_path(&adj, index[b], index[h]) {
                return Some(h.to_string());
            }
        }
    }
    None
}

fn scc_has_path(adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if n == to {
            return true;
        }
        if seen[n] {
            continue;
        }
        seen[n] = true;
        stack.extend(adj[n].iter().copied());
    }
    false
}

fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        comp: Vec<usize>,
        ncomp: usize,
    }
    fn strong(st: &mut State, v: usize) {
        st.index[v] = Some(st.next);
        st.low[v] = st.next;
        st.next += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for i in 0..st.adj[v].len() {
            let w = st.adj[v][i];
            if st.index[w].is_none() {
                strong(st, w);
                st.low[v] = st.low[v].min(st.low[w]);
            } else if st.on_stack[w] {
                st.low[v] = st.low[v].min(st.index[w].expect("indexed"));
            }
        }
        if st.low[v] == st.index[v].expect("indexed") {
            loop {
                let w = st.stack.pop().expect("stack nonempty");
                st.on_stack[w] = false;
                st.comp[w] = st.ncomp;
                if w == v {
                    break;
                }
            }
            st.ncomp += 1;
        }
    }
    let n = adj.len();
    let mut st = State {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        comp: vec![0; n],
        ncomp: 0,
    };
    for v in 0..n {
        if st.index[v].is_none() {
            strong(&mut st, v);
        }
    }
    st.comp
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_spec;
    use super::*;

    #[test]
    fn probability_out_of_range() {
        let src = "effects:\n  action ping\n    outcome ping_ok:\nprob:\n  ping_ok = 1.3\n";
        let spec = parse_spec(src).expect("parses");
        let diags = validate(&spec);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("out of range")));
    }

    #[test]
    fn unsafe_rule_is_flagged() {
        let src = "knowledge:\n  exists Q. p(Q) implies q(W)\ndomains:\n  q = {1}\n";
        let spec = parse_spec(src).expect("parses");
        let diags = validate(&spec);
        assert!(diags.iter().any(|d| d.message.contains("unsafe rule")));
    }

    #[test]
    fn negative_cycle_is_rejected() {
        let src = "knowledge:\n  not q implies p\n  p implies q\n";
        let spec = parse_spec(src).expect("parses");
        let diags = validate(&spec);
        assert!(diags
            .iter()
            .any(|d| d.message.contains("not stratified")), "{diags:?}");
    }

    #[test]
    fn negation_without_cycle_is_fine() {
        let src = "knowledge:\n  not q implies p\n  r implies q\n";
        let spec = parse_spec(src).expect("parses");
        let diags = validate(&spec);
        assert!(!has_errors(&diags), "{diags:?}");
    }

    #[test]
    fn safety_atom_must_be_derivable() {
        let src = "agents:\n  agent A1\n    beliefs:\n    goals:\nsafety:\n  A1: mystery\n";
        let spec = parse_spec(src).expect("parses");
        let diags = validate(&spec);
        assert!(diags.iter().any(|d| d.message.contains("not derivable")));
    }
}
