//! Built-in property synthesis and name resolution.
//!
//! Formulas may reference `safety`, `liveness` and `non-errors`, plus
//! sanitized atomic propositions like `A1_safe1`. This module expands
//! those names against a concrete model's proposition alphabet and
//! metadata.

use std::collections::{BTreeMap, BTreeSet};

use crate::check::ctl::CtlFormula;
use crate::check::pctl::PctlFormula;
use crate::ts::ModelMeta;

pub const DEFAULT_ERROR_PREDICATES: &[&str] = &["err", "crash"];

/// `A1.at(6)` -> `A1_at_6`: dot, parenthesis and comma become
/// underscores, the closing parenthesis is dropped.
pub fn sanitize_ap(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            '.' | '(' | ',' => out.push('_'),
            ')' => {}
            _ => out.push(c),
        }
    }
    out
}

/// The predicate of a qualified proposition: `A1.at(6)` -> `at`.
pub fn ap_predicate(ap: &str) -> &str {
    let body = ap.split_once('.').map(|(_, b)| b).unwrap_or(ap);
    body.split_once('(').map(|(p, _)| p).unwrap_or(body)
}

/// Sanitized-name lookup plus the synthesized named formulas of a model.
pub struct PropertyEnv {
    by_sanitized: BTreeMap<String, String>,
    aps: BTreeSet<String>,
    error_aps: Vec<String>,
    safety_aps: Vec<(String, bool)>,
    pub warnings: Vec<String>,
}

impl PropertyEnv {
    pub fn new(
        aps: &BTreeSet<String>,
        meta: &ModelMeta,
        error_predicates: &[String],
    ) -> Result<PropertyEnv, String> {
        let mut by_sanitized = BTreeMap::new();
        for ap in aps {
            let s = sanitize_ap(ap);
            if let Some(prev) = by_sanitized.insert(s.clone(), ap.clone()) {
                if prev != *ap {
                    return Err(format!(
                        "proposition name collision after sanitization: `{prev}` and `{ap}` both map to `{s}`"
                    ));
                }
            }
        }
        let mut warnings = Vec::new();
        let error_aps: Vec<String> = aps
            .iter()
            .filter(|ap| {
                let pred = ap_predicate(ap);
                error_predicates.iter().any(|e| pred.contains(e.as_str()))
            })
            .cloned()
            .collect();
        if error_aps.is_empty() && !error_predicates.is_empty() {
            warnings.push(format!(
                "no proposition matches the error predicates {error_predicates:?}; non-errors is trivially true"
            ));
        }
        // safety conjuncts for agents present in the model; atoms that
        // never occur are unsatisfiable conjuncts
        let mut safety_aps = Vec::new();
        for (agent, atoms) in &meta.safety {
            if !meta.agents.is_empty() && !meta.agents.contains(agent) {
                continue;
            }
            for atom in atoms {
                let ap = format!("{agent}.{atom}");
                let present = aps.contains(&ap);
                if !present {
                    warnings.push(format!(
                        "safety atom `{ap}` is never derivable in this model; the safety property is unsatisfiable"
                    ));
                }
                safety_aps.push((ap, present));
            }
        }
        Ok(PropertyEnv {
            by_sanitized,
            aps: aps.clone(),
            error_aps,
            safety_aps,
            warnings,
        })
    }

    fn ctl_conj(parts: Vec<CtlFormula>) -> CtlFormula {
        parts
            .into_iter()
            .reduce(|a, b| CtlFormula::And(Box::new(a), Box::new(b)))
            .unwrap_or(CtlFormula::True)
    }

    fn pctl_conj(parts: Vec<PctlFormula>) -> PctlFormula {
        parts
            .into_iter()
            .reduce(|a, b| PctlFormula::And(Box::new(a), Box::new(b)))
            .unwrap_or(PctlFormula::True)
    }

    /// Named formulas: `safety`, `liveness`, `non-errors`.
    pub fn builtin_ctl(&self, name: &str) -> Option<CtlFormula> {
        match name {
            "safety" => Some(Self::ctl_conj(
                self.safety_aps
                    .iter()
                    .map(|(ap, present)| {
                        if *present {
                            CtlFormula::Ap(ap.clone())
                        } else {
                            CtlFormula::False
                        }
                    })
                    .collect(),
            )),
            "liveness" => Some(CtlFormula::Ap(crate::ts::FINAL_AP.to_string())),
            "non-errors" | "non_errors" => Some(Self::ctl_conj(
                self.error_aps
                    .iter()
                    .map(|ap| CtlFormula::Not(Box::new(CtlFormula::Ap(ap.clone()))))
                    .collect(),
            )),
            _ => None,
        }
    }

    pub fn builtin_pctl(&self, name: &str) -> Option<PctlFormula> {
        match name {
            "safety" => Some(Self::pctl_conj(
                self.safety_aps
                    .iter()
                    .map(|(ap, present)| {
                        if *present {
                            PctlFormula::Ap(ap.clone())
                        } else {
                            PctlFormula::False
                        }
                    })
                    .collect(),
            )),
            "liveness" => Some(PctlFormula::Ap(crate::ts::FINAL_AP.to_string())),
            "non-errors" | "non_errors" => Some(Self::pctl_conj(
                self.error_aps
                    .iter()
                    .map(|ap| PctlFormula::Not(Box::new(PctlFormula::Ap(ap.clone()))))
                    .collect(),
            )),
            _ => None,
        }
    }

    fn resolve_name(&self, name: &str) -> Option<String> {
        if self.aps.contains(name) {
            return Some(name.to_string());
        }
        self.by_sanitized.get(name).cloned()
    }

    /// Expand builtin names and sanitized propositions in a CTL formula.
    pub fn resolve_ctl(&self, f: &CtlFormula) -> CtlFormula {
        use CtlFormula::*;
        match f {
            Ap(name) => {
                if let Some(b) = self.builtin_ctl(name) {
                    b
                } else if let Some(raw) = self.resolve_name(name) {
                    Ap(raw)
                } else {
                    Ap(name.clone())
                }
            }
            True => True,
            False => False,
            Not(x) => Not(Box::new(self.resolve_ctl(x))),
            And(a, b) => And(Box::new(self.resolve_ctl(a)), Box::new(self.resolve_ctl(b))),
            Or(a, b) => Or(Box::new(self.resolve_ctl(a)), Box::new(self.resolve_ctl(b))),
            Implies(a, b) => Implies(Box::new(self.resolve_ctl(a)), Box::new(self.resolve_ctl(b))),
            Ex(x) => Ex(Box::new(self.resolve_ctl(x))),
            Ef(x) => Ef(Box::new(self.resolve_ctl(x))),
            Eg(x) => Eg(Box::new(self.resolve_ctl(x))),
            Eu(a, b) => Eu(Box::new(self.resolve_ctl(a)), Box::new(self.resolve_ctl(b))),
            Ax(x) => Ax(Box::new(self.resolve_ctl(x))),
            Af(x) => Af(Box::new(self.resolve_ctl(x))),
            Ag(x) => Ag(Box::new(self.resolve_ctl(x))),
            Au(a, b) => Au(Box::new(self.resolve_ctl(a)), Box::new(self.resolve_ctl(b))),
        }
    }

    pub fn resolve_pctl(&self, f: &PctlFormula) -> PctlFormula {
        use crate::check::pctl::PctlPath;
        use PctlFormula::*;
        match f {
            Ap(name) => {
                if let Some(b) = self.builtin_pctl(name) {
                    b
                } else if let Some(raw) = self.resolve_name(name) {
                    Ap(raw)
                } else {
                    Ap(name.clone())
                }
            }
            True => True,
            False => False,
            Not(x) => Not(Box::new(self.resolve_pctl(x))),
            And(a, b) => And(Box::new(self.resolve_pctl(a)), Box::new(self.resolve_pctl(b))),
            Or(a, b) => Or(Box::new(self.resolve_pctl(a)), Box::new(self.resolve_pctl(b))),
            Implies(a, b) => Implies(Box::new(self.resolve_pctl(a)), Box::new(self.resolve_pctl(b))),
            Prob { op, bound, path } => Prob {
                op: *op,
                bound: bound.clone(),
                path: match path {
                    PctlPath::Next(x) => PctlPath::Next(Box::new(self.resolve_pctl(x))),
                    PctlPath::Until(a, b) => PctlPath::Until(
                        Box::new(self.resolve_pctl(a)),
                        Box::new(self.resolve_pctl(b)),
                    ),
                    PctlPath::Finally(x) => PctlPath::Finally(Box::new(self.resolve_pctl(x))),
                    PctlPath::Globally(x) => PctlPath::Globally(Box::new(self.resolve_pctl(x))),
                },
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize_examples() {
        assert_eq!(sanitize_ap("A1.at(6)"), "A1_at_6");
        assert_eq!(sanitize_ap("R.idle(2)"), "R_idle_2");
        assert_eq!(sanitize_ap("A1.reserved(A1,6)"), "A1_reserved_A1_6");
        assert_eq!(sanitize_ap("final"), "final");
    }

    #[test]
    fn builtin_synthesis() {
        let aps: BTreeSet<String> = [
            "A1.safe1".to_string(),
            "A1.dockerr".to_string(),
            "A2.crash".to_string(),
            "final".to_string(),
        ]
        .into_iter()
        .collect();
        let meta = ModelMeta {
            safety: [("A1".to_string(), vec!["safe1".to_string()])]
                .into_iter()
                .collect(),
            agents: vec!["A1".to_string(), "A2".to_string()],
        };
        let errs: Vec<String> = DEFAULT_ERROR_PREDICATES.iter().map(|s| s.to_string()).collect();
        let env = PropertyEnv::new(&aps, &meta, &errs).expect("env");
        assert_eq!(env.builtin_ctl("safety").expect("safety").to_string(), "A1.safe1");
        assert_eq!(
            env.builtin_ctl("non-errors").expect("ne").to_string(),
            "(!(A1.dockerr) & !(A2.crash))"
        );
        assert_eq!(env.builtin_ctl("liveness").expect("live").to_string(), "final");
    }

    #[test]
    fn missing_safety_atom_is_false() {
        let aps: BTreeSet<String> = ["final".to_string()].into_iter().collect();
        let meta = ModelMeta {
            safety: [("A1".to_string(), vec!["safe1".to_string()])]
                .into_iter()
                .collect(),
            agents: vec!["A1".to_string()],
        };
        let env = PropertyEnv::new(&aps, &meta, &[]).expect("env");
        assert_eq!(env.builtin_ctl("safety").expect("safety"), CtlFormula::False);
        assert!(!env.warnings.is_empty());
    }

    #[test]
    fn no_error_aps_means_true() {
        let aps: BTreeSet<String> = ["final".to_string()].into_iter().collect();
        let meta = ModelMeta::default();
        let errs: Vec<String> = DEFAULT_ERROR_PREDICATES.iter().map(|s| s.to_string()).collect();
        let env = PropertyEnv::new(&aps, &meta, &errs).expect("env");
        assert_eq!(env.builtin_ctl("non-errors").expect("ne"), CtlFormula::True);
    }

    #[test]
    fn resolves_sanitized_names() {
        let aps: BTreeSet<String> = ["A1.at(6)".to_string()].into_iter().collect();
        let env = PropertyEnv::new(&aps, &ModelMeta::default(), &[]).expect("env");
        let f = crate::check::ctl::parse_ctl("AG A1_at_6").expect("parses");
        assert_eq!(env.resolve_ctl(&f).to_string(), "AG (A1.at(6))");
    }
}
