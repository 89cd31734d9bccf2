//! Canonical pretty-printer for specifications.
//!
//! The printer emits a normalized layout that parses back to the same
//! specification (`parse . print . parse == parse`).

use std::fmt::Write;

use num_traits::One;

use super::ast::*;

pub fn print_spec(spec: &Specification) -> String {
    let mut out = String::new();
    if !spec.agents.is_empty() {
        out.push_str("agents:\n");
        for agent in &spec.agents {
            let _ = writeln!(out, "  agent {}", agent.id);
            let beliefs: Vec<String> = agent.beliefs.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "    beliefs: {}", beliefs.join(", "));
            let goals: Vec<String> = agent.goals.iter().map(|b| print_base(b)).collect();
            let _ = writeln!(out, "    goals: {}", goals.join(", "));
            if !agent.inbox.is_empty() {
                let msgs: Vec<String> = agent
                    .inbox
                    .iter()
                    .map(|m| format!("({}, {})", m.sender, m.payload))
                    .collect();
                let _ = writeln!(out, "    inbox: {}", msgs.join(", "));
            }
            if !agent.outbox.is_empty() {
                let msgs: Vec<String> = agent
                    .outbox
                    .iter()
                    .map(|m| format!("({}, {})", m.recipient, m.payload))
                    .collect();
                let _ = writeln!(out, "    outbox: {}", msgs.join(", "));
            }
        }
    }
    print_rules(&mut out, "knowledge", &spec.knowledge);
    print_rules(&mut out, "constraints", &spec.constraints);
    print_rules(&mut out, "actions", &spec.action_rules);
    if !spec.send_rules.is_empty() {
        out.push_str("send:\n");
        for rule in &spec.send_rules {
            let _ = writeln!(
                out,
                "  {}{} implies send({}, {})",
                exists_prefix(&rule.exists_vars),
                print_body(&rule.trigger),
                rule.recipient,
                rule.payload
            );
        }
    }
    if !spec.event_rules.is_empty() {
        out.push_str("events:\n");
        for rule in &spec.event_rules {
            let ops: Vec<String> = rule.ops.iter().map(|o| o.to_string()).collect();
            let _ = writeln!(
                out,
                "  {}{} implies {}",
                exists_prefix(&rule.exists_vars),
                print_body(&rule.trigger),
                ops.join(", ")
            );
        }
    }
    if !spec.effects.is_empty() {
        out.push_str("effects:\n");
        for def in &spec.effects {
            let params = def.params.join(", ");
            if def.params.is_empty() {
                let _ = writeln!(out, "  action {}", def.name);
            } else {
                let _ = writeln!(out, "  action {}({})", def.name, params);
            }
            if !def.pre.is_empty() {
                let pre: Vec<String> = def.pre.iter().map(|l| l.to_string()).collect();
                let _ = writeln!(out, "    pre: {}", pre.join(", "));
            }
            for o in &def.outcomes {
                let mut parts = Vec::new();
                if !o.adds.is_empty() {
                    parts.push(format!("add {}", atoms_csv(&o.adds)));
                }
                if !o.dels.is_empty() {
                    parts.push(format!("del {}", atoms_csv(&o.dels)));
                }
                let _ = writeln!(out, "    outcome {}: {}", o.label, parts.join("; "));
            }
        }
    }
    if !spec.domains.is_empty() {
        out.push_str("domains:\n");
        for (name, consts) in &spec.domains {
            let _ = writeln!(out, "  {} = {{{}}}", name, consts.join(", "));
        }
    }
    if !spec.prob.is_empty() {
        out.push_str("prob:\n");
        for (label, p) in &spec.prob {
            let _ = writeln!(out, "  {} = {}", label, print_prob(p));
        }
    }
    if !spec.safety.is_empty() {
        out.push_str("safety:\n");
        for (agent, atoms) in &spec.safety {
            let _ = writeln!(out, "  {}: {}", agent, atoms.join(", "));
        }
    }
    out
}

fn print_rules(out: &mut String, section: &str, rules: &[Rule]) {
    if rules.is_empty() {
        return;
    }
    let _ = writeln!(out, "{section}:");
    for rule in rules {
        let _ = writeln!(
            out,
            "  {}{} implies {}",
            exists_prefix(&rule.exists_vars),
            print_body(&rule.body),
            rule.head
        );
    }
}

fn exists_prefix(vars: &std::collections::BTreeSet<String>) -> String {
    if vars.is_empty() {
        String::new()
    } else {
        format!(
            "exists {}. ",
            vars.iter().cloned().collect::<Vec<_>>().join(", ")
        )
    }
}

fn print_body(body: &[Literal]) -> String {
    body.iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(" and ")
}

fn print_base(base: &std::collections::BTreeSet<Atom>) -> String {
    format!("[{}]", atoms_csv(&base.iter().cloned().collect::<Vec<_>>()))
}

fn atoms_csv(atoms: &[Atom]) -> String {
    atoms
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Render an exact probability: terminating decimals print as decimals,
/// everything else prints as `num/den`.
pub fn print_prob(p: &num_rational::BigRational) -> String {
    use num_bigint::BigInt;
    let denom = p.denom().clone();
    if denom.is_one() {
        return p.numer().to_string();
    }
    // terminating decimal iff denom = 2^a * 5^b
    let mut d = denom.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut a = 0u32;
    let mut b = 0u32;
    while !d.is_one() && num_traits::Zero::is_zero(&(&d % &two)) {
        d /= &two;
        a += 1;
    }
    while !d.is_one() && num_traits::Zero::is_zero(&(&d % &five)) {
        d /= &five;
        b += 1;
    }
    if d.is_one() {
        let digits = a.max(b);
        let scale = BigInt::from(10u32).pow(digits);
        let scaled = p.numer() * &scale / p.denom();
        let s = scaled.to_string();
        let s = format!("{:0>width$}", s, width = (digits as usize) + 1);
        let split = s.len() - digits as usize;
        format!("{}.{}", &s[..split], &s[split..])
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

/// Parse a probability rendered by `print_prob`: an integer, a decimal
/// or a `num/den` fraction.
pub fn parse_prob(s: &str) -> Option<num_rational::BigRational> {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.parse().ok()?;
        let d: BigInt = d.parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.is_empty() {
            return None;
        }
        let denom = BigInt::from(10u32).pow(frac.len() as u32);
        let whole: BigInt = if whole.is_empty() { BigInt::from(0) } else { whole.parse().ok()? };
        let fr: BigInt = frac.parse().ok()?;
        let sign = if s.starts_with('-') { -1 } else { 1 };
        return Some(BigRational::new(
            whole * &denom + BigInt::from(sign) * fr,
            denom,
        ));
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_spec;
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn print_prob_forms() {
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(print_prob(&half), "0.5");
        let nine_tenths = BigRational::new(9.into(), 10.into());
        assert_eq!(print_prob(&nine_tenths), "0.9");
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(print_prob(&third), "1/3");
        let one = BigRational::from_integer(1.into());
        assert_eq!(print_prob(&one), "1");
    }

    #[test]
    fn roundtrip_is_stable() {
        let src = r#"
agents:
  agent A1
    beliefs: at(6), battery(1)
    goals: [transport(3,2)], [transport(4,2)]
  agent R
    beliefs: idle(3)
    goals:
knowledge:
  battery(1) implies safe1
  exists P. at(P) and not at(9) implies safe2
actions:
  goal(transport(F,T)) and at(H) implies move(H, F)
send:
  announce(L) implies send(R, arrive(L))
events:
  received(Ag, arrive(L)) and idle(L) implies del idle(L), add reserved(Ag, L)
effects:
  action move(X, Y)
    pre: at(X)
    outcome move_ok: add at(Y); del at(X)
    outcome move_base_err: add crash
domains:
  p = {2, 3, 9}
  h = {6}
  f = {3, 4}
  t = {2}
  l = {2, 3}
  ag = {A1}
  x = {2, 3, 6}
  y = {2, 3, 6}
prob:
  move_ok = 0.9
  move_base_err = 1/10
safety:
  A1: safe1, safe2
"#;
        let first = parse_spec(src).expect("first parse");
        let printed = print_spec(&first);
        let second = parse_spec(&printed).expect("printed output parses");
        // canonical form is a fixed point (spans aside, the trees agree)
        assert_eq!(printed, print_spec(&second));
        assert_eq!(first.agents.len(), second.agents.len());
        assert_eq!(first.knowledge.len(), second.knowledge.len());
        assert_eq!(first.prob, second.prob);
    }
}
