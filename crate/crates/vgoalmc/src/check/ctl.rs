//! Explicit-state CTL checking by fixpoint labeling: EX via predecessor
//! image, EU/EF as least fixpoints, EG as a greatest fixpoint, and the
//! universal operators by duality.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ts::TransitionSystem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CtlFormula {
    True,
    False,
    Ap(String),
    Not(Box<CtlFormula>),
    And(Box<CtlFormula>, Box<CtlFormula>),
    Or(Box<CtlFormula>, Box<CtlFormula>),
    Implies(Box<CtlFormula>, Box<CtlFormula>),
    Ex(Box<CtlFormula>),
    Ef(Box<CtlFormula>),
    Eg(Box<CtlFormula>),
    Eu(Box<CtlFormula>, Box<CtlFormula>),
    Ax(Box<CtlFormula>),
    Af(Box<CtlFormula>),
    Ag(Box<CtlFormula>),
    Au(Box<CtlFormula>, Box<CtlFormula>),
}

impl fmt::Display for CtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CtlFormula::True => write!(f, "true"),
            CtlFormula::False => write!(f, "false"),
            CtlFormula::Ap(a) => write!(f, "{a}"),
            CtlFormula::Not(x) => write!(f, "!({x})"),
            CtlFormula::And(a, b) => write!(f, "({a} & {b})"),
            CtlFormula::Or(a, b) => write!(f, "({a} | {b})"),
            CtlFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
            CtlFormula::Ex(x) => write!(f, "EX ({x})"),
            CtlFormula::Ef(x) => write!(f, "EF ({x})"),
            CtlFormula::Eg(x) => write!(f, "EG ({x})"),
            CtlFormula::Eu(a, b) => write!(f, "E [{a} U {b}]"),
            CtlFormula::Ax(x) => write!(f, "AX ({x})"),
            CtlFormula::Af(x) => write!(f, "AF ({x})"),
            CtlFormula::Ag(x) => write!(f, "AG ({x})"),
            CtlFormula::Au(a, b) => write!(f, "A [{a} U {b}]"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("formula syntax error at offset {at}: {msg}")]
    Syntax { at: usize, msg: String },
    #[error("unknown atomic proposition `{0}`")]
    UnknownAp(String),
    #[error("transition system is not total; complete self-loops before checking")]
    NotTotal,
}

// ---------------------------------------------------------------------
// parsing

struct FTokens {
    toks: Vec<(FTok, usize)>,
    pos: usize,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum FTok {
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Not,
    And,
    Or,
    Implies,
}

fn tokenize(text: &str) -> Result<FTokens, CheckError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                toks.push((FTok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((FTok::RParen, i));
                i += 1;
            }
            '[' => {
                toks.push((FTok::LBracket, i));
                i += 1;
            }
            ']' => {
                toks.push((FTok::RBracket, i));
                i += 1;
            }
            '!' => {
                toks.push((FTok::Not, i));
                i += 1;
            }
            '&' => {
                toks.push((FTok::And, i));
                i += 1;
            }
            '|' => {
                toks.push((FTok::Or, i));
                i += 1;
            }
            '-' if i + 1 < bytes.len() && bytes[i + 1] as char == '>' => {
                toks.push((FTok::Implies, i));
                i += 2;
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let ch = bytes[i] as char;
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        i += 1;
                    } else if ch == '-' && i + 1 < bytes.len() && bytes[i + 1] as char != '>' {
                        // hyphen inside a name (e.g. non-errors); `->` stays an arrow
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push((FTok::Ident(text[start..i].to_string()), start));
            }
            other => {
                return Err(CheckError::Syntax {
                    at: i,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(FTokens {
        toks,
        pos: 0,
        len: text.len(),
    })
}

impl FTokens {
    fn peek(&self) -> Option<&FTok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map(|(_, a)| *a).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<FTok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &FTok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(FTok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: FTok, what: &str) -> Result<(), CheckError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(CheckError::Syntax {
                at: self.at(),
                msg: format!("expected {what}"),
            })
        }
    }
}

/// Parse a CTL formula. Precedence: `!` binds tightest, then `&`, `|`,
/// `->`; temporal prefixes take their immediate argument.
pub fn parse_ctl(text: &str) -> Result<CtlFormula, CheckError> {
    let mut t = tokenize(text)?;
    let f = parse_implies(&mut t)?;
    if t.peek().is_some() {
        return Err(CheckError::Syntax {
            at: t.at(),
            msg: "trailing input after formula".to_string(),
        });
    }
    Ok(f)
}

fn parse_implies(t: &mut FTokens) -> Result<CtlFormula, CheckError> {
    let lhs = parse_or(t)?;
    if t.eat(&FTok::Implies) {
        let rhs = parse_implies(t)?;
        Ok(CtlFormula::Implies(Box::new(lhs), Box::new(rhs)))
    } else {
        Ok(lhs)
    }
}

fn parse_or(t: &mut FTokens) -> Result<CtlFormula, CheckError> {
    let mut lhs = parse_and(t)?;
    loop {
        if t.eat(&FTok::Or) || t.eat_ident("or") {
            let rhs = parse_and(t)?;
            lhs = CtlFormula::Or(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_and(t: &mut FTokens) -> Result<CtlFormula, CheckError> {
    let mut lhs = parse_unary(t)?;
    loop {
        if t.eat(&FTok::And) || t.eat_ident("and") {
            let rhs = parse_unary(t)?;
            lhs = CtlFormula::And(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_unary(t: &mut FTokens) -> Result<CtlFormula, CheckError> {
    if t.eat(&FTok::Not) || t.eat_ident("not") {
        return Ok(CtlFormula::Not(Box::new(parse_unary(t)?)));
    }
    let at = t.at();
    match t.bump() {
        Some(FTok::LParen) => {
            let inner = parse_implies(t)?;
            t.expect(FTok::RParen, "`)`")?;
            Ok(inner)
        }
        Some(FTok::Ident(id)) => match id.as_str() {
            "true" => Ok(CtlFormula::True),
            "false" => Ok(CtlFormula::False),
            "EX" => Ok(CtlFormula::Ex(Box::new(parse_unary(t)?))),
            "EF" => Ok(CtlFormula::Ef(Box::new(parse_unary(t)?))),
            "EG" => Ok(CtlFormula::Eg(Box::new(parse_unary(t)?))),
            "AX" => Ok(CtlFormula::Ax(Box::new(parse_unary(t)?))),
            "AF" => Ok(CtlFormula::Af(Box::new(parse_unary(t)?))),
            "AG" => Ok(CtlFormula::Ag(Box::new(parse_unary(t)?))),
            "E" | "A" => {
                t.expect(FTok::LBracket, "`[` after path quantifier")?;
                let lhs = parse_implies(t)?;
                if !t.eat_ident("U") {
                    return Err(CheckError::Syntax {
                        at: t.at(),
                        msg: "expected `U` in until formula".to_string(),
                    });
                }
                let rhs = parse_implies(t)?;
                t.expect(FTok::RBracket, "`]`")?;
                if id == "E" {
                    Ok(CtlFormula::Eu(Box::new(lhs), Box::new(rhs)))
                } else {
                    Ok(CtlFormula::Au(Box::new(lhs), Box::new(rhs)))
                }
            }
            _ => Ok(CtlFormula::Ap(id)),
        },
        _ => Err(CheckError::Syntax {
            at,
            msg: "expected a formula".to_string(),
        }),
    }
}

// ---------------------------------------------------------------------
// checking

/// Predecessor lists of the (action-collapsed) transition graph.
struct Graph {
    n: usize,
    succ: Vec<BTreeSet<usize>>,
    pred: Vec<BTreeSet<usize>>,
}

impl Graph {
    fn of(ts: &TransitionSystem) -> Graph {
        let n = ts.states.len();
        let mut succ = vec![BTreeSet::new(); n];
        let mut pred = vec![BTreeSet::new(); n];
        for (s, _, d) in &ts.transitions {
            succ[*s].insert(*d);
            pred[*d].insert(*s);
        }
        Graph { n, succ, pred }
    }
}

type StateSet = Vec<bool>;

fn set_from(n: usize, pred: impl Fn(usize) -> bool) -> StateSet {
    (0..n).map(pred).collect()
}

/// The exact set of states satisfying `f`, as a sorted set of indices.
pub fn check_ctl(ts: &TransitionSystem, f: &CtlFormula) -> Result<BTreeSet<usize>, CheckError> {
    if !ts.is_total() {
        return Err(CheckError::NotTotal);
    }
    let g = Graph::of(ts);
    let sat = eval(ts, &g, f)?;
    Ok((0..g.n).filter(|s| sat[*s]).collect())
}

/// Verdict for the whole model: every initial state satisfies `f`.
pub fn holds_initially(ts: &TransitionSystem, f: &CtlFormula) -> Result<bool, CheckError> {
    let sat = check_ctl(ts, f)?;
    Ok(ts.initial.iter().all(|s| sat.contains(s)))
}

fn eval(ts: &TransitionSystem, g: &Graph, f: &CtlFormula) -> Result<StateSet, CheckError> {
    Ok(match f {
        CtlFormula::True => set_from(g.n, |_| true),
        CtlFormula::False => set_from(g.n, |_| false),
        CtlFormula::Ap(name) => {
            if !ts.aps.contains(name) {
                return Err(CheckError::UnknownAp(name.clone()));
            }
            set_from(g.n, |s| ts.labels[s].contains(name))
        }
        CtlFormula::Not(x) => {
            let inner = eval(ts, g, x)?;
            set_from(g.n, |s| !inner[s])
        }
        CtlFormula::And(a, b) => {
            let (a, b) = (eval(ts, g, a)?, eval(ts, g, b)?);
            set_from(g.n, |s| a[s] && b[s])
        }
        CtlFormula::Or(a, b) => {
            let (a, b) = (eval(ts, g, a)?, eval(ts, g, b)?);
            set_from(g.n, |s| a[s] || b[s])
        }
        CtlFormula::Implies(a, b) => {
            let (a, b) = (eval(ts, g, a)?, eval(ts, g, b)?);
            set_from(g.n, |s| !a[s] || b[s])
        }
        CtlFormula::Ex(x) => ex(g, &eval(ts, g, x)?),
        CtlFormula::Ef(x) => eu(g, &set_from(g.n, |_| true), &eval(ts, g, x)?),
        CtlFormula::Eg(x) => eg(g, &eval(ts, g, x)?),
        CtlFormula::Eu(a, b) => eu(g, &eval(ts, g, a)?, &eval(ts, g, b)?),
        // duals: AX f = !EX !f, AG f = !EF !f, AF f = !EG !f,
        // A[a U b] = !(E[!b U !a & !b] | EG !b)
        CtlFormula::Ax(x) => {
            let inner = eval(ts, g, x)?;
            let not_inner = set_from(g.n, |s| !inner[s]);
            let e = ex(g, &not_inner);
            set_from(g.n, |s| !e[s])
        }
        CtlFormula::Ag(x) => {
            let inner = eval(ts, g, x)?;
            let not_inner = set_from(g.n, |s| !inner[s]);
            let e = eu(g, &set_from(g.n, |_| true), &not_inner);
            set_from(g.n, |s| !e[s])
        }
        CtlFormula::Af(x) => {
            let inner = eval(ts, g, x)?;
            let e = eg(g, &set_from(g.n, |s| !inner[s]));
            set_from(g.n, |s| !e[s])
        }
        CtlFormula::Au(a, b) => {
            let (a, b) = (eval(ts, g, a)?, eval(ts, g, b)?);
            let not_b = set_from(g.n, |s| !b[s]);
            let not_a_and_not_b = set_from(g.n, |s| !a[s] && !b[s]);
            let e1 = eu(g, &not_b, &not_a_and_not_b);
            let e2 = eg(g, &not_b);
            set_from(g.n, |s| !(e1[s] || e2[s]))
        }
    })
}

/// States with some successor in `target`.
fn ex(g: &Graph, target: &StateSet) -> StateSet {
    set_from(g.n, |s| g.succ[s].iter().any(|d| target[*d]))
}

/// Least fixpoint: states reaching `target` through `hold` states.
fn eu(g: &Graph, hold: &StateSet, target: &StateSet) -> StateSet {
    let mut sat = target.clone();
    let mut work: Vec<usize> = (0..g.n).filter(|s| sat[*s]).collect();
    while let Some(s) = work.pop() {
        for p in &g.pred[s] {
            if !sat[*p] && hold[*p] {
                sat[*p] = true;
                work.push(*p);
            }
        }
    }
    sat
}

/// Greatest fixpoint: states with an infinite path through `hold`.
fn eg(g: &Graph, hold: &StateSet) -> StateSet {
    let mut sat = hold.clone();
    // count successors inside the candidate set
    let mut count: Vec<usize> = (0..g.n)
        .map(|s| g.succ[s].iter().filter(|d| sat[**d]).count())
        .collect();
    let mut work: Vec<usize> = (0..g.n).filter(|s| sat[*s] && count[*s] == 0).collect();
    while let Some(s) = work.pop() {
        sat[s] = false;
        for p in &g.pred[s] {
            if sat[*p] {
                count[*p] -= 1;
                if count[*p] == 0 {
                    work.push(*p);
                }
            }
        }
    }
    sat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ts::ModelMeta;
    use std::collections::BTreeSet;

    fn model(
        n: usize,
        edges: &[(usize, usize)],
        labels: &[&[&str]],
        initial: &[usize],
    ) -> TransitionSystem {
        let aps: BTreeSet<String> = labels
            .iter()
            .flat_map(|l| l.iter().map(|s| s.to_string()))
            .collect();
        TransitionSystem {
            states: (0..n).map(|i| format!("s{i}")).collect(),
            transitions: edges
                .iter()
                .map(|(s, d)| (*s, "t".to_string(), *d))
                .collect(),
            initial: initial.iter().copied().collect(),
            finals: BTreeSet::new(),
            aps,
            labels: labels
                .iter()
                .map(|l| l.iter().map(|s| s.to_string()).collect())
                .collect(),
            meta: ModelMeta::default(),
        }
    }

    #[test]
    fn parses_with_precedence() {
        let f = parse_ctl("EG (a -> EF b)").expect("parses");
        assert_eq!(f.to_string(), "EG ((a -> EF (b)))");
        let f = parse_ctl("AG safe1").expect("parses");
        assert_eq!(f, CtlFormula::Ag(Box::new(CtlFormula::Ap("safe1".into()))));
        let f = parse_ctl("!a & b | c").expect("parses");
        assert_eq!(f.to_string(), "((!(a) & b) | c)");
        let f = parse_ctl("E [non-errors U (non-errors & final)]").expect("parses");
        assert!(matches!(f, CtlFormula::Eu(_, _)));
    }

    #[test]
    fn self_loop_satisfies_ag() {
        let ts = model(1, &[(0, 0)], &[&["safe"]], &[0]);
        let sat = check_ctl(&ts, &parse_ctl("AG safe").expect("parses")).expect("checks");
        assert_eq!(sat, [0].into_iter().collect::<BTreeSet<_>>());
        assert!(holds_initially(&ts, &parse_ctl("AG safe").expect("parses")).expect("checks"));
    }

    #[test]
    fn chain_satisfies_ef_and_af() {
        // s0 -> s1 (absorbing, goal)
        let ts = model(2, &[(0, 1), (1, 1)], &[&[], &["goal"]], &[0]);
        assert!(holds_initially(&ts, &parse_ctl("EF goal").expect("p")).expect("c"));
        assert!(holds_initially(&ts, &parse_ctl("AF goal").expect("p")).expect("c"));
        assert!(!holds_initially(&ts, &parse_ctl("goal").expect("p")).expect("c"));
    }

    #[test]
    fn eg_implication_holds_via_branch() {
        // s0 -> s1 {a} absorbing, s0 -> s2 {a,b} absorbing
        let ts = model(
            3,
            &[(0, 1), (0, 2), (1, 1), (2, 2)],
            &[&[], &["a"], &["a", "b"]],
            &[0],
        );
        let f = parse_ctl("EG (a -> EF b)").expect("parses");
        let sat = check_ctl(&ts, &f).expect("checks");
        assert!(sat.contains(&0), "s0 satisfies via the s2 branch");
        assert!(sat.contains(&2));
        assert!(!sat.contains(&1), "s1 stutters in a without b");
    }

    #[test]
    fn duality_ag_ef() {
        let ts = model(
            3,
            &[(0, 1), (0, 2), (1, 1), (2, 2)],
            &[&["p"], &["p"], &[]],
            &[0],
        );
        let ag = check_ctl(&ts, &parse_ctl("AG p").expect("p")).expect("c");
        let ef_not = check_ctl(&ts, &parse_ctl("EF !p").expect("p")).expect("c");
        let complement: BTreeSet<usize> = (0..3).filter(|s| !ef_not.contains(s)).collect();
        assert_eq!(ag, complement);
    }

    #[test]
    fn unknown_ap_is_reported() {
        let ts = model(1, &[(0, 0)], &[&["safe"]], &[0]);
        match check_ctl(&ts, &parse_ctl("AG nosuch").expect("p")) {
            Err(CheckError::UnknownAp(name)) => assert_eq!(name, "nosuch"),
            other => panic!("expected unknown AP, got {other:?}"),
        }
    }
}
