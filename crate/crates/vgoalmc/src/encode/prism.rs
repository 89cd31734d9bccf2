//! PRISM-language DTMC emission: one module with an enumerated state
//! variable, one guarded command per state, labels per proposition, and
//! properties in a sibling `.props` text. Probabilities render as
//! fractions; decimals never appear.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_rational::BigRational;
use num_traits::One;

use super::{sanitized_aps, EncodeError};
use crate::check::pctl::{PctlFormula, PctlPath};
use crate::dtmc::Dtmc;

/// Render a DTMC as PRISM input plus the property list.
pub fn encode_prism(d: &Dtmc, props: &[PctlFormula]) -> Result<(String, String), EncodeError> {
    if let Some(s) = (0..d.states.len()).find(|s| !d.row_sum(*s).is_one()) {
        return Err(EncodeError::NotStochastic(s));
    }
    let names = sanitized_aps(&d.aps)?;
    let n = d.states.len();
    let init = d
        .initial_dist
        .keys()
        .next()
        .copied()
        .unwrap_or(0);
    let mut out = String::new();
    out.push_str("dtmc\n\n");
    out.push_str("module main\n");
    let _ = writeln!(out, "  s : [0..{}] init {init};", n.max(1) - 1);
    out.push('\n');
    for s in 0..n {
        let row = d.row(s);
        if row.is_empty() {
            continue;
        }
        let terms: Vec<String> = row
            .iter()
            .map(|(t, p)| format!("{}:(s'={t})", frac(p)))
            .collect();
        let _ = writeln!(out, "  [] s={s} -> {};", terms.join(" + "));
    }
    out.push_str("endmodule\n");
    if !names.is_empty() {
        out.push('\n');
        for (ap, name) in &names {
            let states: Vec<String> = (0..n)
                .filter(|s| d.labels[*s].contains(ap))
                .map(|s| format!("s={s}"))
                .collect();
            if states.is_empty() {
                let _ = writeln!(out, "label \"{name}\" = false;");
            } else {
                let _ = writeln!(out, "label \"{name}\" = {};", states.join("|"));
            }
        }
    }
    let mut props_text = String::new();
    for f in props {
        let _ = writeln!(props_text, "{}", render_pctl(f, &names));
    }
    Ok((out, props_text))
}

/// Exact fraction rendering: `1`, `9/10`, `1/3`.
fn frac(p: &BigRational) -> String {
    if p.denom().is_one() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

/// PRISM property rendering over sanitized (quoted) label names.
pub fn render_pctl(f: &PctlFormula, names: &BTreeMap<String, String>) -> String {
    match f {
        PctlFormula::True => "true".to_string(),
        PctlFormula::False => "false".to_string(),
        PctlFormula::Ap(ap) => format!("\"{}\"", names.get(ap).cloned().unwrap_or_else(|| ap.clone())),
        PctlFormula::Not(x) => format!("!{}", render_pctl_atomic(x, names)),
        PctlFormula::And(a, b) => {
            format!("({} & {})", render_pctl(a, names), render_pctl(b, names))
        }
        PctlFormula::Or(a, b) => {
            format!("({} | {})", render_pctl(a, names), render_pctl(b, names))
        }
        PctlFormula::Implies(a, b) => {
            format!("({} => {})", render_pctl(a, names), render_pctl(b, names))
        }
        PctlFormula::Prob { op, bound, path } => {
            let path = match path {
                PctlPath::Next(x) => format!("X {}", render_pctl_atomic(x, names)),
                PctlPath::Until(a, b) => format!(
                    "{} U {}",
                    render_pctl_atomic(a, names),
                    render_pctl_atomic(b, names)
                ),
                PctlPath::Finally(x) => format!("F {}", render_pctl_atomic(x, names)),
                PctlPath::Globally(x) => format!("G {}", render_pctl_atomic(x, names)),
            };
            format!("P{}{} [ {} ]", op, frac(bound), path)
        }
    }
}

fn render_pctl_atomic(f: &PctlFormula, names: &BTreeMap<String, String>) -> String {
    match f {
        PctlFormula::Ap(_) | PctlFormula::True | PctlFormula::False => render_pctl(f, names),
        _ => format!("({})", render_pctl(f, names)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::pctl::parse_pctl;
    use crate::ts::ModelMeta;
    use std::collections::BTreeSet;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn absorbing_and_branching_commands() {
        let d = Dtmc {
            states: vec!["a".into(), "b".into(), "c".into()],
            edges: [
                (0usize, 1usize, ratio(1, 2), "x".to_string()),
                (0, 2, ratio(1, 2), "y".to_string()),
                (1, 1, ratio(1, 1), "stutter".to_string()),
                (2, 2, ratio(1, 1), "stutter".to_string()),
            ]
            .into_iter()
            .collect(),
            initial_dist: [(0, ratio(1, 1))].into_iter().collect(),
            aps: ["goal".to_string()].into_iter().collect(),
            labels: vec![
                BTreeSet::new(),
                ["goal".to_string()].into_iter().collect(),
                BTreeSet::new(),
            ],
            meta: ModelMeta::default(),
        };
        let (pm, props) = encode_prism(&d, &[parse_pctl("P>=1 [F goal]").expect("p")]).expect("encodes");
        assert!(pm.starts_with("dtmc\n"));
        assert!(pm.contains("s : [0..2] init 0;"));
        assert!(pm.contains("[] s=0 -> 1/2:(s'=1) + 1/2:(s'=2);"));
        assert!(pm.contains("[] s=1 -> 1:(s'=1);"));
        assert!(pm.contains("label \"goal\" = s=1;"));
        assert_eq!(props, "P>=1 [ F \"goal\" ]\n");
    }

    #[test]
    fn non_stochastic_is_refused() {
        let d = Dtmc {
            states: vec!["a".into()],
            edges: [(0usize, 0usize, ratio(1, 2), "x".to_string())].into_iter().collect(),
            initial_dist: [(0, ratio(1, 1))].into_iter().collect(),
            aps: BTreeSet::new(),
            labels: vec![BTreeSet::new()],
            meta: ModelMeta::default(),
        };
        assert!(matches!(
            encode_prism(&d, &[]),
            Err(EncodeError::NotStochastic(0))
        ));
    }
}
