//! Minimal-model computation: stratified forward chaining over ground
//! rules, seeded with a belief base.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use crate::lang::ast::*;
use crate::lang::ground::{ground_rule, GroundError};

/// Ground rules grouped into evaluation strata. Rules in stratum k may
/// negate only predicates fully defined in strata < k.
#[derive(Debug, Clone, Default)]
pub struct StratifiedRules {
    pub strata: Vec<Vec<Rule>>,
}

impl StratifiedRules {
    /// Ground `rules` over `domains` and split them into strata.
    pub fn build(
        rules: &[Rule],
        domains: &BTreeMap<String, Vec<String>>,
    ) -> Result<Self, GroundError> {
        let stratum_of = predicate_strata(rules);
        let max = stratum_of.values().copied().max().unwrap_or(0);
        let mut strata = vec![Vec::new(); max + 1];
        for rule in rules {
            let s = stratum_of.get(rule.head.pred.as_str()).copied().unwrap_or(0);
            for g in ground_rule(rule, domains)? {
                strata[s].push(g);
            }
        }
        Ok(StratifiedRules { strata })
    }

    pub fn is_empty(&self) -> bool {
        self.strata.iter().all(|s| s.is_empty())
    }

    /// Least fixpoint of the program seeded with `base`.
    pub fn fixpoint(&self, base: &BTreeSet<Atom>) -> BTreeSet<Atom> {
        let mut model = base.clone();
        for stratum in &self.strata {
            loop {
                let mut changed = false;
                for rule in stratum {
                    if model.contains(&rule.head) {
                        continue;
                    }
                    if rule.body.iter().all(|lit| match lit {
                        Literal::Belief { atom, negated } => model.contains(atom) != *negated,
                        // only belief literals appear in derivation rules
                        _ => false,
                    }) {
                        model.insert(rule.head.clone());
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        model
    }
}

/// Assign each predicate a stratum: heads sit at least as high as their
/// positive body predicates and strictly above their negated ones.
/// Assumes stratifiability (validated separately); iteration is capped.
fn predicate_strata(rules: &[Rule]) -> BTreeMap<&str, usize> {
    let mut stratum: BTreeMap<&str, usize> = BTreeMap::new();
    for rule in rules {
        stratum.entry(rule.head.pred.as_str()).or_insert(0);
        for lit in &rule.body {
            if let Literal::Belief { atom, .. } = lit {
                stratum.entry(atom.pred.as_str()).or_insert(0);
            }
        }
    }
    let cap = stratum.len() + 1;
    for _ in 0..cap {
        let mut changed = false;
        for rule in rules {
            let mut need = 0usize;
            for lit in &rule.body {
                if let Literal::Belief { atom, negated } = lit {
                    let b = stratum[atom.pred.as_str()];
                    need = need.max(if *negated { b + 1 } else { b });
                }
            }
            let h = stratum.get_mut(rule.head.pred.as_str()).expect("seeded");
            if *h < need {
                *h = need;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    stratum
}

/// Memo for minimal models keyed by belief base. Belief bases recur
/// heavily across states, so this dominates exploration performance.
#[derive(Default)]
pub struct ModelCache {
    entries: BTreeMap<BTreeSet<Atom>, Rc<BTreeSet<Atom>>>,
}

impl ModelCache {
    pub fn model(&mut self, rules: &StratifiedRules, base: &BTreeSet<Atom>) -> Rc<BTreeSet<Atom>> {
        if let Some(hit) = self.entries.get(base) {
            return Rc::clone(hit);
        }
        let model = Rc::new(rules.fixpoint(base));
        self.entries.insert(base.clone(), Rc::clone(&model));
        model
    }
}

/// The least set of ground atoms closed under `rules`, seeded with
/// `beliefs`. Grounds the rules over `domains` first.
pub fn minimal_model(
    beliefs: &BTreeSet<Atom>,
    rules: &[Rule],
    domains: &BTreeMap<String, Vec<String>>,
) -> Result<BTreeSet<Atom>, GroundError> {
    let program = StratifiedRules::build(rules, domains)?;
    Ok(program.fixpoint(beliefs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_spec;

    fn atoms(list: &[&str]) -> BTreeSet<Atom> {
        list.iter()
            .map(|s| {
                crate::lang::parse_spec(&format!("agents:\n  agent Z\n    beliefs: {s}\n    goals:\n"))
                    .expect("atom parses")
                    .agents[0]
                    .beliefs
                    .iter()
                    .next()
                    .expect("one atom")
                    .clone()
            })
            .collect()
    }

    #[test]
    fn battery_rule_derives_safe1() {
        let spec = parse_spec("knowledge:\n  battery(1) implies safe1\n").expect("parses");
        let model =
            minimal_model(&atoms(&["battery(1)"]), &spec.knowledge, &spec.domains).expect("model");
        assert!(model.contains(&Atom::propositional("safe1")));
        assert!(model.contains(&atoms(&["battery(1)"]).iter().next().expect("atom").clone()));
    }

    #[test]
    fn empty_rules_return_beliefs() {
        let base = atoms(&["at(3)", "battery(1)"]);
        let model = minimal_model(&base, &[], &BTreeMap::new()).expect("model");
        assert_eq!(model, base);
    }

    #[test]
    fn existential_negation_example() {
        let src = "knowledge:\n  exists P. at(P) and not at(9) implies safe2\ndomains:\n  p = {3, 9}\n";
        let spec = parse_spec(src).expect("parses");
        let m1 = minimal_model(&atoms(&["at(3)"]), &spec.knowledge, &spec.domains).expect("model");
        assert!(m1.contains(&Atom::propositional("safe2")));
        let m2 = minimal_model(&atoms(&["at(9)"]), &spec.knowledge, &spec.domains).expect("model");
        assert!(!m2.contains(&Atom::propositional("safe2")));
    }

    #[test]
    fn idempotent_and_monotone() {
        let src = "knowledge:\n  a implies b\n  b implies c\n";
        let spec = parse_spec(src).expect("parses");
        let base = atoms(&["a"]);
        let m1 = minimal_model(&base, &spec.knowledge, &spec.domains).expect("model");
        let m2 = minimal_model(&m1, &spec.knowledge, &spec.domains).expect("model");
        assert_eq!(m1, m2, "applying the closure twice adds nothing");
        assert!(m1.is_superset(&base));

        let bigger = atoms(&["a", "d"]);
        let m3 = minimal_model(&bigger, &spec.knowledge, &spec.domains).expect("model");
        assert!(m3.is_superset(&m1), "monotone for negation-free programs");
    }

    #[test]
    fn stratified_negation_evaluates_lower_strata_first() {
        // q is underivable, so p should hold
        let src = "knowledge:\n  not q implies p\n  r implies q\n";
        let spec = parse_spec(src).expect("parses");
        let m = minimal_model(&BTreeSet::new(), &spec.knowledge, &spec.domains).expect("model");
        assert!(m.contains(&Atom::propositional("p")));
        // with r present, q blocks p
        let m2 = minimal_model(&atoms(&["r"]), &spec.knowledge, &spec.domains).expect("model");
        assert!(m2.contains(&Atom::propositional("q")));
        assert!(!m2.contains(&Atom::propositional("p")));
    }
}
