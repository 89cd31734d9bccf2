//! Grounding of rules over the declared finite domains.
//!
//! A variable `X` resolves to the domain whose name equals the variable
//! lowercased with trailing digits stripped (`P`, `P2` -> domain `p`,
//! `Loc` -> domain `loc`). Grounding a rule enumerates the Cartesian
//! product of the domains of its distinct variables in a fixed order:
//! variables sorted by name, constants in declaration order.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroundError {
    #[error("{span}: variable `{var}` has no domain (expected a domain named `{expected}`)")]
    UnboundedVariable {
        span: Span,
        var: String,
        expected: String,
    },
}

/// Domain key for a variable name: lowercase, trailing digits stripped.
pub fn domain_key(var: &str) -> String {
    let stripped = var.trim_end_matches(|c: char| c.is_ascii_digit());
    let base = if stripped.is_empty() { var } else { stripped };
    base.to_ascii_lowercase()
}

pub type Binding = BTreeMap<String, String>;

/// Enumerate all assignments of `vars` over their domains.
fn assignments(
    vars: &[String],
    domains: &BTreeMap<String, Vec<String>>,
    span: Span,
) -> Result<Vec<Binding>, GroundError> {
    let mut columns = Vec::with_capacity(vars.len());
    for v in vars {
        let key = domain_key(v);
        let consts = domains
            .get(&key)
            .ok_or_else(|| GroundError::UnboundedVariable {
                span,
                var: v.clone(),
                expected: key.clone(),
            })?;
        columns.push((v.clone(), consts));
    }
    let mut out = vec![Binding::new()];
    for (var, consts) in columns {
        let mut next = Vec::with_capacity(out.len() * consts.len());
        for partial in &out {
            for c in consts {
                let mut b = partial.clone();
                b.insert(var.clone(), c.clone());
                next.push(b);
            }
        }
        out = next;
    }
    Ok(out)
}

pub fn subst_term(t: &Term, b: &Binding) -> Term {
    match t {
        Term::Var(v) => match b.get(v) {
            Some(c) => Term::Const(c.clone()),
            None => t.clone(),
        },
        Term::Const(_) => t.clone(),
    }
}

pub fn subst_atom(a: &Atom, b: &Binding) -> Atom {
    Atom::new(
        a.pred.clone(),
        a.args.iter().map(|t| subst_term(t, b)).collect(),
    )
}

pub fn subst_literal(l: &Literal, b: &Binding) -> Literal {
    match l {
        Literal::Belief { atom, negated } => Literal::Belief {
            atom: subst_atom(atom, b),
            negated: *negated,
        },
        Literal::Goal { atom, negated } => Literal::Goal {
            atom: subst_atom(atom, b),
            negated: *negated,
        },
        Literal::Received { sender, payload } => Literal::Received {
            sender: subst_term(sender, b),
            payload: subst_atom(payload, b),
        },
        Literal::Achieved { goal } => Literal::Achieved {
            goal: subst_atom(goal, b),
        },
    }
}

fn rule_vars(head: Option<&Atom>, body: &[Literal]) -> Vec<String> {
    let mut vars: Vec<String> = Vec::new();
    let mut push = |v: &str| {
        if !vars.iter().any(|x| x == v) {
            vars.push(v.to_string());
        }
    };
    if let Some(h) = head {
        for v in h.vars() {
            push(v);
        }
    }
    for lit in body {
        for v in lit.vars() {
            push(v);
        }
    }
    vars.sort();
    vars
}

/// Ground one rule over the domains; each instance is variable-free.
pub fn ground_rule(
    rule: &Rule,
    domains: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<Rule>, GroundError> {
    let vars = rule_vars(Some(&rule.head), &rule.body);
    let mut out = Vec::new();
    for b in assignments(&vars, domains, rule.span)? {
        out.push(Rule {
            head: subst_atom(&rule.head, &b),
            body: rule.body.iter().map(|l| subst_literal(l, &b)).collect(),
            exists_vars: Default::default(),
            span: rule.span,
        });
    }
    Ok(out)
}

pub fn ground_send_rule(
    rule: &SendRule,
    domains: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<SendRule>, GroundError> {
    let mut vars = rule_vars(Some(&rule.payload), &rule.trigger);
    if let Term::Var(v) = &rule.recipient {
        if !vars.iter().any(|x| x == v) {
            vars.push(v.clone());
            vars.sort();
        }
    }
    let mut out = Vec::new();
    for b in assignments(&vars, domains, rule.span)? {
        out.push(SendRule {
            trigger: rule.trigger.iter().map(|l| subst_literal(l, &b)).collect(),
            recipient: subst_term(&rule.recipient, &b),
            payload: subst_atom(&rule.payload, &b),
            exists_vars: Default::default(),
            span: rule.span,
        });
    }
    Ok(out)
}

pub fn ground_event_rule(
    rule: &EventRule,
    domains: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<EventRule>, GroundError> {
    let mut vars = rule_vars(None, &rule.trigger);
    for op in &rule.ops {
        let atoms: Vec<&Atom> = match op {
            EventOp::AddBelief(a) | EventOp::DelBelief(a) => vec![a],
            EventOp::AdoptGoal(base) | EventOp::DropGoal(base) => base.iter().collect(),
        };
        for a in atoms {
            for v in a.vars() {
                if !vars.iter().any(|x| x == v) {
                    vars.push(v.to_string());
                }
            }
        }
    }
    vars.sort();
    let mut out = Vec::new();
    for b in assignments(&vars, domains, rule.span)? {
        let ops = rule
            .ops
            .iter()
            .map(|op| match op {
                EventOp::AddBelief(a) => EventOp::AddBelief(subst_atom(a, &b)),
                EventOp::DelBelief(a) => EventOp::DelBelief(subst_atom(a, &b)),
                EventOp::AdoptGoal(base) => {
                    EventOp::AdoptGoal(base.iter().map(|a| subst_atom(a, &b)).collect())
                }
                EventOp::DropGoal(base) => {
                    EventOp::DropGoal(base.iter().map(|a| subst_atom(a, &b)).collect())
                }
            })
            .collect();
        out.push(EventRule {
            trigger: rule.trigger.iter().map(|l| subst_literal(l, &b)).collect(),
            ops,
            exists_vars: Default::default(),
            span: rule.span,
        });
    }
    Ok(out)
}

/// A fully instantiated action: ground head plus ground precondition and
/// outcome lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub head: Atom,
    pub pre: Vec<Literal>,
    pub outcomes: Vec<Outcome>,
}

/// Instantiate an action definition for every parameter assignment.
pub fn ground_action_def(
    def: &ActionDef,
    domains: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<GroundAction>, GroundError> {
    let mut vars: Vec<String> = def.params.clone();
    vars.sort();
    vars.dedup();
    let mut out = Vec::new();
    for b in assignments(&vars, domains, def.span)? {
        let head = Atom::new(
            def.name.clone(),
            def.params
                .iter()
                .map(|p| Term::Const(b[p].clone()))
                .collect(),
        );
        out.push(GroundAction {
            head,
            pre: def.pre.iter().map(|l| subst_literal(l, &b)).collect(),
            outcomes: def
                .outcomes
                .iter()
                .map(|o| Outcome {
                    label: o.label.clone(),
                    adds: o.adds.iter().map(|a| subst_atom(a, &b)).collect(),
                    dels: o.dels.iter().map(|a| subst_atom(a, &b)).collect(),
                })
                .collect(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domains(pairs: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
        pairs
            .iter()
            .map(|(k, vs)| (k.to_string(), vs.iter().map(|v| v.to_string()).collect()))
            .collect()
    }

    fn rule(src_head: Atom, body: Vec<Literal>) -> Rule {
        Rule {
            head: src_head,
            body,
            exists_vars: Default::default(),
            span: Span::default(),
        }
    }

    #[test]
    fn ground_rule_without_vars_is_identity() {
        let r = rule(
            Atom::propositional("safe1"),
            vec![Literal::Belief {
                atom: Atom::new("battery", vec![Term::Const("1".into())]),
                negated: false,
            }],
        );
        let d = domains(&[]);
        let g = ground_rule(&r, &d).expect("grounds");
        assert_eq!(g, vec![r]);
    }

    #[test]
    fn ground_counts_match_domain_product() {
        let r = rule(
            Atom::propositional("safe2"),
            vec![Literal::Belief {
                atom: Atom::new("at", vec![Term::Var("P".into())]),
                negated: false,
            }],
        );
        let d = domains(&[("p", &["2", "3", "4", "5"])]);
        assert_eq!(ground_rule(&r, &d).expect("grounds").len(), 4);

        let r2 = rule(
            Atom::new("edge", vec![Term::Var("X".into()), Term::Var("Y".into())]),
            vec![
                Literal::Belief {
                    atom: Atom::new("a", vec![Term::Var("X".into())]),
                    negated: false,
                },
                Literal::Belief {
                    atom: Atom::new("b", vec![Term::Var("Y".into())]),
                    negated: false,
                },
            ],
        );
        let d2 = domains(&[("x", &["1", "2"]), ("y", &["1", "2", "3"])]);
        assert_eq!(ground_rule(&r2, &d2).expect("grounds").len(), 6);
    }

    #[test]
    fn unbounded_variable_is_reported() {
        let r = rule(
            Atom::new("p", vec![Term::Var("Q".into())]),
            vec![Literal::Belief {
                atom: Atom::new("r", vec![Term::Var("Q".into())]),
                negated: false,
            }],
        );
        match ground_rule(&r, &domains(&[])) {
            Err(GroundError::UnboundedVariable { var, expected, .. }) => {
                assert_eq!(var, "Q");
                assert_eq!(expected, "q");
            }
            other => panic!("expected unbounded variable error, got {other:?}"),
        }
    }

    #[test]
    fn domain_key_strips_digits() {
        assert_eq!(domain_key("P2"), "p");
        assert_eq!(domain_key("Loc"), "loc");
        assert_eq!(domain_key("X"), "x");
    }
}
