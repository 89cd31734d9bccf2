//! PCTL checking over DTMCs. Until-probabilities use the standard
//! three-way partition: prob-0 and prob-1 states by graph analysis, the
//! remainder by an exact rational linear solve. Qualitative bounds
//! (`> 0`, `>= 1`) come from the graph analysis alone, which keeps large
//! models cheap. A value-iteration fallback is available for models too
//! large to solve exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::dtmc::Dtmc;
use crate::lang::printer::{parse_prob, print_prob};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    fn apply(&self, value: &BigRational, bound: &BigRational) -> bool {
        match self {
            CmpOp::Lt => value < bound,
            CmpOp::Le => value <= bound,
            CmpOp::Gt => value > bound,
            CmpOp::Ge => value >= bound,
            CmpOp::Eq => value == bound,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmpOp::Lt => write!(f, "<"),
            CmpOp::Le => write!(f, "<="),
            CmpOp::Gt => write!(f, ">"),
            CmpOp::Ge => write!(f, ">="),
            CmpOp::Eq => write!(f, "="),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PctlFormula {
    True,
    False,
    Ap(String),
    Not(Box<PctlFormula>),
    And(Box<PctlFormula>, Box<PctlFormula>),
    Or(Box<PctlFormula>, Box<PctlFormula>),
    Implies(Box<PctlFormula>, Box<PctlFormula>),
    Prob {
        op: CmpOp,
        bound: BigRational,
        path: PctlPath,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PctlPath {
    Next(Box<PctlFormula>),
    Until(Box<PctlFormula>, Box<PctlFormula>),
    Finally(Box<PctlFormula>),
    Globally(Box<PctlFormula>),
}

impl fmt::Display for PctlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PctlFormula::True => write!(f, "true"),
            PctlFormula::False => write!(f, "false"),
            PctlFormula::Ap(a) => write!(f, "{a}"),
            PctlFormula::Not(x) => write!(f, "!({x})"),
            PctlFormula::And(a, b) => write!(f, "({a} & {b})"),
            PctlFormula::Or(a, b) => write!(f, "({a} | {b})"),
            PctlFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
            PctlFormula::Prob { op, bound, path } => {
                write!(f, "P{}{} [{}]", op, print_prob(bound), path)
            }
        }
    }
}

impl fmt::Display for PctlPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PctlPath::Next(x) => write!(f, "X ({x})"),
            PctlPath::Until(a, b) => write!(f, "{a} U {b}"),
            PctlPath::Finally(x) => write!(f, "F ({x})"),
            PctlPath::Globally(x) => write!(f, "G ({x})"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PctlError {
    #[error("formula syntax error at offset {at}: {msg}")]
    Syntax { at: usize, msg: String },
    #[error("unknown atomic proposition `{0}`")]
    UnknownAp(String),
    #[error("DTMC is not stochastic: row of state {0} does not sum to 1")]
    NotStochastic(usize),
    #[error("probability bound {0} outside [0,1]")]
    BadBound(String),
    #[error("model too large for the exact solver ({states} states in the linear system); use value iteration")]
    TooLarge { states: usize },
}

// ---------------------------------------------------------------------
// parsing

/// Parse a PCTL state formula, e.g. `P>=1 [G safety]` or
/// `P>0 [non-errors U (non-errors & liveness)]`.
pub fn parse_pctl(text: &str) -> Result<PctlFormula, PctlError> {
    let mut p = PParser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let f = p.parse_implies()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(PctlError::Syntax {
            at: p.pos,
            msg: "trailing input after formula".to_string(),
        });
    }
    Ok(f)
}

struct PParser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.bytes.get(self.pos).map(|b| *b as char)
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos] as char;
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else if c == '-'
                && self.pos + 1 < self.bytes.len()
                && (self.bytes[self.pos + 1] as char).is_ascii_alphanumeric()
            {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos > start {
            Some(self.text[start..self.pos].to_string())
        } else {
            None
        }
    }

    fn err(&self, msg: &str) -> PctlError {
        PctlError::Syntax {
            at: self.pos,
            msg: msg.to_string(),
        }
    }

    fn parse_implies(&mut self) -> Result<PctlFormula, PctlError> {
        let lhs = self.parse_or()?;
        if self.eat_str("->") {
            let rhs = self.parse_implies()?;
            return Ok(PctlFormula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<PctlFormula, PctlError> {
        let mut lhs = self.parse_and()?;
        loop {
            self.skip_ws();
            if self.eat('|') {
                let rhs = self.parse_and()?;
                lhs = PctlFormula::Or(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_and(&mut self) -> Result<PctlFormula, PctlError> {
        let mut lhs = self.parse_unary()?;
        loop {
            self.skip_ws();
            if self.eat('&') {
                let rhs = self.parse_unary()?;
                lhs = PctlFormula::And(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<PctlFormula, PctlError> {
        self.skip_ws();
        if self.eat('!') {
            return Ok(PctlFormula::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat('(') {
            let inner = self.parse_implies()?;
            if !self.eat(')') {
                return Err(self.err("expected `)`"));
            }
            return Ok(inner);
        }
        let save = self.pos;
        match self.ident() {
            Some(id) if id == "true" => Ok(PctlFormula::True),
            Some(id) if id == "false" => Ok(PctlFormula::False),
            Some(id) if id == "P" => {
                self.pos = save + 1;
                self.parse_prob_operator()
            }
            Some(id) if id == "not" => Ok(PctlFormula::Not(Box::new(self.parse_unary()?))),
            Some(id) => Ok(PctlFormula::Ap(id)),
            None => Err(self.err("expected a formula")),
        }
    }

    fn parse_prob_operator(&mut self) -> Result<PctlFormula, PctlError> {
        self.skip_ws();
        let op = if self.eat_str(">=") {
            CmpOp::Ge
        } else if self.eat_str("<=") {
            CmpOp::Le
        } else if self.eat_str(">") {
            CmpOp::Gt
        } else if self.eat_str("<") {
            CmpOp::Lt
        } else if self.eat_str("=") {
            CmpOp::Eq
        } else {
            return Err(self.err("expected a comparison after P"));
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos] as char;
            if c.is_ascii_digit() || c == '.' || c == '/' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let bound_text = &self.text[start..self.pos];
        let bound = parse_prob(bound_text).ok_or_else(|| self.err("expected a probability bound"))?;
        if bound < BigRational::zero() || bound > BigRational::one() {
            return Err(PctlError::BadBound(bound_text.to_string()));
        }
        if !self.eat('[') {
            return Err(self.err("expected `[` before path formula"));
        }
        let path = self.parse_path()?;
        if !self.eat(']') {
            return Err(self.err("expected `]` after path formula"));
        }
        Ok(PctlFormula::Prob { op, bound, path })
    }

    fn parse_path(&mut self) -> Result<PctlPath, PctlError> {
        self.skip_ws();
        let save = self.pos;
        if let Some(id) = self.ident() {
            match id.as_str() {
                "X" => return Ok(PctlPath::Next(Box::new(self.parse_unary()?))),
                "F" => return Ok(PctlPath::Finally(Box::new(self.parse_unary()?))),
                "G" => return Ok(PctlPath::Globally(Box::new(self.parse_unary()?))),
                _ => self.pos = save,
            }
        }
        let lhs = self.parse_implies()?;
        self.skip_ws();
        if let Some(id) = self.ident() {
            if id == "U" {
                let rhs = self.parse_implies()?;
                return Ok(PctlPath::Until(Box::new(lhs), Box::new(rhs)));
            }
        }
        Err(self.err("expected `U` in path formula"))
    }
}

// ---------------------------------------------------------------------
// checking

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Exact rational linear solve (default; errors beyond `max_exact`).
    Exact,
    /// f64 value iteration, tolerance 1e-10, at most 10^6 sweeps.
    Iterative,
}

#[derive(Debug, Clone)]
pub struct PctlOptions {
    pub mode: SolveMode,
    /// Largest linear system the exact solver accepts.
    pub max_exact: usize,
}

impl Default for PctlOptions {
    fn default() -> Self {
        PctlOptions {
            mode: SolveMode::Exact,
            max_exact: 5_000,
        }
    }
}

/// Result of checking one PCTL state formula.
#[derive(Debug, Clone)]
pub struct PctlVerdict {
    /// Whether every initial state satisfies the formula.
    pub holds: bool,
    pub sat: BTreeSet<usize>,
    /// For a top-level probability operator: the computed probability at
    /// each initial state (exact; absent under value iteration).
    pub probabilities: BTreeMap<usize, BigRational>,
}

pub fn check_pctl(d: &Dtmc, f: &PctlFormula, opts: &PctlOptions) -> Result<PctlVerdict, PctlError> {
    if let Some(bad) = (0..d.states.len()).find(|s| !d.row_sum(*s).is_one()) {
        return Err(PctlError::NotStochastic(bad));
    }
    let sat = eval_state(d, f, opts)?;
    let mut probabilities = BTreeMap::new();
    if let PctlFormula::Prob { path, .. } = f {
        if let Ok(probs) = path_probabilities(d, path, opts) {
            for s in d.initial_dist.keys() {
                probabilities.insert(*s, probs[*s].clone());
            }
        }
    }
    let holds = d.initial_dist.keys().all(|s| sat.contains(s));
    Ok(PctlVerdict {
        holds,
        sat,
        probabilities,
    })
}

fn eval_state(d: &Dtmc, f: &PctlFormula, opts: &PctlOptions) -> Result<BTreeSet<usize>, PctlError> {
    let n = d.states.len();
    Ok(match f {
        PctlFormula::True => (0..n).collect(),
        PctlFormula::False => BTreeSet::new(),
        PctlFormula::Ap(name) => {
            if !d.aps.contains(name) {
                return Err(PctlError::UnknownAp(name.clone()));
            }
            (0..n).filter(|s| d.labels[*s].contains(name)).collect()
        }
        PctlFormula::Not(x) => {
            let inner = eval_state(d, x, opts)?;
            (0..n).filter(|s| !inner.contains(s)).collect()
        }
        PctlFormula::And(a, b) => {
            let (a, b) = (eval_state(d, a, opts)?, eval_state(d, b, opts)?);
            a.intersection(&b).copied().collect()
        }
        PctlFormula::Or(a, b) => {
            let (a, b) = (eval_state(d, a, opts)?, eval_state(d, b, opts)?);
            a.union(&b).copied().collect()
        }
        PctlFormula::Implies(a, b) => {
            let (a, b) = (eval_state(d, a, opts)?, eval_state(d, b, opts)?);
            (0..n).filter(|s| !a.contains(s) || b.contains(s)).collect()
        }
        PctlFormula::Prob { op, bound, path } => {
            // qualitative bounds need only the graph analysis
            match (op, bound) {
                (CmpOp::Gt, b) if b.is_zero() => {
                    let (zero, _) = until_zero_one(d, path, opts)?;
                    return Ok((0..n).filter(|s| !zero.contains(s)).collect());
                }
                (CmpOp::Ge, b) if b.is_one() => {
                    let (_, one) = until_zero_one(d, path, opts)?;
                    return Ok(one);
                }
                (CmpOp::Le, b) if b.is_zero() => {
                    let (zero, _) = until_zero_one(d, path, opts)?;
                    return Ok(zero);
                }
                (CmpOp::Lt, b) if b.is_one() => {
                    let (_, one) = until_zero_one(d, path, opts)?;
                    return Ok((0..n).filter(|s| !one.contains(s)).collect());
                }
                _ => {}
            }
            let probs = path_probabilities(d, path, opts)?;
            (0..n).filter(|s| op.apply(&probs[*s], bound)).collect()
        }
    })
}

/// The prob-0 and prob-1 state sets of a path formula, by graph analysis.
fn until_zero_one(
    d: &Dtmc,
    path: &PctlPath,
    opts: &PctlOptions,
) -> Result<(BTreeSet<usize>, BTreeSet<usize>), PctlError> {
    let n = d.states.len();
    match path {
        PctlPath::Next(f) => {
            let target = eval_state(d, f, opts)?;
            let mut zero = BTreeSet::new();
            let mut one = BTreeSet::new();
            for s in 0..n {
                let mass: BigRational = d
                    .row(s)
                    .into_iter()
                    .filter(|(t, _)| target.contains(t))
                    .map(|(_, p)| p)
                    .fold(BigRational::zero(), |a, b| a + b);
                if mass.is_zero() {
                    zero.insert(s);
                } else if mass.is_one() {
                    one.insert(s);
                }
            }
            Ok((zero, one))
        }
        PctlPath::Finally(f) => {
            let hold: BTreeSet<usize> = (0..n).collect();
            let target = eval_state(d, f, opts)?;
            Ok(qualitative_until(d, &hold, &target))
        }
        PctlPath::Until(a, b) => {
            let hold = eval_state(d, a, opts)?;
            let target = eval_state(d, b, opts)?;
            Ok(qualitative_until(d, &hold, &target))
        }
        PctlPath::Globally(f) => {
            // P(G f) = 1 - P(F !f): zero/one sets swap
            let not_f = PctlPath::Finally(Box::new(PctlFormula::Not(f.clone())));
            let (zero, one) = until_zero_one(d, &not_f, opts)?;
            Ok((one, zero))
        }
    }
}

/// Standard qualitative analysis for `hold U target` on a DTMC:
/// prob-0 states cannot reach the target through hold states; prob-1
/// states cannot reach a prob-0 state through hold-and-not-target states.
fn qualitative_until(
    d: &Dtmc,
    hold: &BTreeSet<usize>,
    target: &BTreeSet<usize>,
) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let n = d.states.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, t) in d.support() {
        pred[t].push(s);
    }
    // backward reachability from target through hold
    let mut can_reach = vec![false; n];
    let mut work: Vec<usize> = target.iter().copied().collect();
    for &t in target {
        can_reach[t] = true;
    }
    while let Some(t) = work.pop() {
        for &p in &pred[t] {
            if !can_reach[p] && hold.contains(&p) {
                can_reach[p] = true;
                work.push(p);
            }
        }
    }
    let zero: BTreeSet<usize> = (0..n).filter(|s| !can_reach[*s]).collect();
    // backward reachability from prob-0 through hold \ target
    let mut can_fail = vec![false; n];
    let mut work: Vec<usize> = zero.iter().copied().collect();
    for &z in &zero {
        can_fail[z] = true;
    }
    while let Some(t) = work.pop() {
        for &p in &pred[t] {
            if !can_fail[p] && hold.contains(&p) && !target.contains(&p) {
                can_fail[p] = true;
                work.push(p);
            }
        }
    }
    let one: BTreeSet<usize> = (0..n).filter(|s| !can_fail[*s]).collect();
    (zero, one)
}

/// Exact probability of the path formula at every state.
pub fn path_probabilities(
    d: &Dtmc,
    path: &PctlPath,
    opts: &PctlOptions,
) -> Result<Vec<BigRational>, PctlError> {
    let n = d.states.len();
    match path {
        PctlPath::Next(f) => {
            let target = eval_state(d, f, opts)?;
            Ok((0..n)
                .map(|s| {
                    d.row(s)
                        .into_iter()
                        .filter(|(t, _)| target.contains(t))
                        .map(|(_, p)| p)
                        .fold(BigRational::zero(), |a, b| a + b)
                })
                .collect())
        }
        PctlPath::Finally(f) => {
            let hold: BTreeSet<usize> = (0..n).collect();
            let target = eval_state(d, f, opts)?;
            until_probabilities(d, &hold, &target, opts)
        }
        PctlPath::Until(a, b) => {
            let hold = eval_state(d, a, opts)?;
            let target = eval_state(d, b, opts)?;
            until_probabilities(d, &hold, &target, opts)
        }
        PctlPath::Globally(f) => {
            let not_f = PctlPath::Finally(Box::new(PctlFormula::Not(f.clone())));
            let fail = path_probabilities(d, &not_f, opts)?;
            Ok(fail
                .into_iter()
                .map(|p| BigRational::one() - p)
                .collect())
        }
    }
}

fn until_probabilities(
    d: &Dtmc,
    hold: &BTreeSet<usize>,
    target: &BTreeSet<usize>,
    opts: &PctlOptions,
) -> Result<Vec<BigRational>, PctlError> {
    let n = d.states.len();
    let (zero, one) = qualitative_until(d, hold, target);
    let rest: Vec<usize> = (0..n)
        .filter(|s| !zero.contains(s) && !one.contains(s))
        .collect();
    let mut probs: Vec<BigRational> = vec![BigRational::zero(); n];
    for &s in &one {
        probs[s] = BigRational::one();
    }
    if rest.is_empty() {
        return Ok(probs);
    }
    match opts.mode {
        SolveMode::Exact => {
            if rest.len() > opts.max_exact {
                return Err(PctlError::TooLarge { states: rest.len() });
            }
            let idx: BTreeMap<usize, usize> = rest.iter().enumerate().map(|(i, s)| (*s, i)).collect();
            let m = rest.len();
            // x = A x + b  =>  (I - A) x = b
            let mut matrix: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); m + 1]; m];
            for (i, &s) in rest.iter().enumerate() {
                matrix[i][i] = BigRational::one();
                for (t, p) in d.row(s) {
                    if let Some(&j) = idx.get(&t) {
                        matrix[i][j] -= p.clone();
                    }
                    if one.contains(&t) {
                        matrix[i][m] += p;
                    }
                }
            }
            let solution = gauss_exact(&mut matrix);
            for (i, &s) in rest.iter().enumerate() {
                probs[s] = solution[i].clone();
            }
            Ok(probs)
        }
        SolveMode::Iterative => {
            let mut x: Vec<f64> = (0..n)
                .map(|s| if one.contains(&s) { 1.0 } else { 0.0 })
                .collect();
            let rows: Vec<BTreeMap<usize, f64>> = (0..n)
                .map(|s| {
                    d.row(s)
                        .into_iter()
                        .map(|(t, p)| {
                            let approx = p.numer().to_string().parse::<f64>().unwrap_or(0.0)
                                / p.denom().to_string().parse::<f64>().unwrap_or(1.0);
                            (t, approx)
                        })
                        .collect()
                })
                .collect();
            for _ in 0..1_000_000 {
                let mut delta: f64 = 0.0;
                for &s in &rest {
                    let v: f64 = rows[s].iter().map(|(t, p)| p * x[*t]).sum();
                    delta = delta.max((v - x[s]).abs());
                    x[s] = v;
                }
                if delta < 1e-10 {
                    break;
                }
            }
            for &s in &rest {
                // rational approximation of the iterate, for a uniform API
                let scaled = (x[s] * 1e12).round() as i64;
                probs[s] = BigRational::new(scaled.into(), 1_000_000_000_000i64.into());
            }
            Ok(probs)
        }
    }
}

/// Gaussian elimination with partial (first nonzero) pivoting over the
/// rationals; the matrix is `m x (m+1)` in augmented form. Rows of a
/// proper stochastic system are always solvable after the prob-0/1
/// elimination.
fn gauss_exact(matrix: &mut [Vec<BigRational>]) -> Vec<BigRational> {
    let m = matrix.len();
    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| !matrix[r][col].is_zero())
            .expect("system is nonsingular after prob-0/1 elimination");
        matrix.swap(col, pivot);
        let p = matrix[col][col].clone();
        for c in col..=m {
            matrix[col][c] = &matrix[col][c] / &p;
        }
        for r in 0..m {
            if r != col && !matrix[r][col].is_zero() {
                let factor = matrix[r][col].clone();
                for c in col..=m {
                    let sub = &factor * &matrix[col][c];
                    matrix[r][c] -= sub;
                }
            }
        }
    }
    (0..m).map(|r| matrix[r][m].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtmc::Dtmc;
    use crate::ts::ModelMeta;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn chain(edges: &[(usize, usize, (i64, i64))], labels: &[&[&str]]) -> Dtmc {
        let n = labels.len();
        Dtmc {
            states: (0..n).map(|i| format!("s{i}")).collect(),
            edges: edges
                .iter()
                .map(|(s, d, (pn, pd))| (*s, *d, ratio(*pn, *pd), "t".to_string()))
                .collect(),
            initial_dist: [(0, ratio(1, 1))].into_iter().collect(),
            aps: labels
                .iter()
                .flat_map(|l| l.iter().map(|s| s.to_string()))
                .collect(),
            labels: labels
                .iter()
                .map(|l| l.iter().map(|s| s.to_string()).collect())
                .collect(),
            meta: ModelMeta::default(),
        }
    }

    #[test]
    fn parses_paper_style_formulas() {
        let f = parse_pctl("P>=1 [G safety]").expect("parses");
        assert_eq!(f.to_string(), "P>=1 [G (safety)]");
        let f = parse_pctl("P>0 [a U (a & b)]").expect("parses");
        match &f {
            PctlFormula::Prob { op, bound, path } => {
                assert_eq!(*op, CmpOp::Gt);
                assert!(bound.is_zero());
                assert!(matches!(path, PctlPath::Until(_, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = parse_pctl("P>0 [non-errors U (non-errors & liveness)]").expect("parses");
        assert!(matches!(f, PctlFormula::Prob { .. }));
    }

    #[test]
    fn certain_reachability() {
        // s0 -> s1 (p=1), s1 absorbing goal
        let d = chain(&[(0, 1, (1, 1)), (1, 1, (1, 1))], &[&[], &["goal"]]);
        let v = check_pctl(&d, &parse_pctl("P>=1 [F goal]").expect("p"), &PctlOptions::default())
            .expect("checks");
        assert!(v.holds);
        assert_eq!(v.probabilities[&0], ratio(1, 1));
    }

    #[test]
    fn one_step_split() {
        // s0 -> goal (0.9), s0 -> trap (0.1)
        let d = chain(
            &[(0, 1, (9, 10)), (0, 2, (1, 10)), (1, 1, (1, 1)), (2, 2, (1, 1))],
            &[&[], &["goal"], &["trap"]],
        );
        let v = check_pctl(&d, &parse_pctl("P>=0.9 [F goal]").expect("p"), &PctlOptions::default())
            .expect("checks");
        assert!(v.holds);
        assert_eq!(v.probabilities[&0], ratio(9, 10));
    }

    #[test]
    fn self_loop_half_half_reaches_goal_almost_surely() {
        // s0 -> s0 (1/2), s0 -> goal (1/2): x = 1/2 x + 1/2 => x = 1
        let d = chain(
            &[(0, 0, (1, 2)), (0, 1, (1, 2)), (1, 1, (1, 1))],
            &[&[], &["goal"]],
        );
        let v = check_pctl(&d, &parse_pctl("P>=1 [F goal]").expect("p"), &PctlOptions::default())
            .expect("checks");
        assert!(v.holds);
        assert_eq!(v.probabilities[&0], ratio(1, 1));
    }

    #[test]
    fn exact_linear_solve_on_gamblers_walk() {
        // s1 and s2 between traps: s1 -> s0 trap (1/2), s1 -> s2 (1/2);
        // s2 -> s1 (1/2), s2 -> s3 goal (1/2). P(s1 reaches goal) = 1/3.
        let d = chain(
            &[
                (0, 0, (1, 1)),
                (1, 0, (1, 2)),
                (1, 2, (1, 2)),
                (2, 1, (1, 2)),
                (2, 3, (1, 2)),
                (3, 3, (1, 1)),
            ],
            &[&["trap"], &[], &[], &["goal"]],
        );
        let probs = path_probabilities(
            &d,
            &PctlPath::Finally(Box::new(PctlFormula::Ap("goal".into()))),
            &PctlOptions::default(),
        )
        .expect("solves");
        assert_eq!(probs[1], ratio(1, 3));
        assert_eq!(probs[2], ratio(2, 3));
    }

    #[test]
    fn globally_via_complement() {
        // s0 -> s1 (1/4) unsafe absorbing; s0 -> s2 (3/4) safe absorbing
        let d = chain(
            &[(0, 1, (1, 4)), (0, 2, (3, 4)), (1, 1, (1, 1)), (2, 2, (1, 1))],
            &[&["safe"], &[], &["safe"]],
        );
        let v = check_pctl(
            &d,
            &parse_pctl("P>=0.75 [G safe]").expect("p"),
            &PctlOptions::default(),
        )
        .expect("checks");
        assert!(v.holds);
        assert_eq!(v.probabilities[&0], ratio(3, 4));
    }

    #[test]
    fn qualitative_bounds_skip_the_solver() {
        let d = chain(
            &[(0, 0, (1, 2)), (0, 1, (1, 2)), (1, 1, (1, 1))],
            &[&[], &["goal"]],
        );
        let tight = PctlOptions {
            max_exact: 0,
            ..PctlOptions::default()
        };
        // qualitative: P>0 works even with exact solving disabled
        let v = check_pctl(&d, &parse_pctl("P>0 [F goal]").expect("p"), &tight).expect("checks");
        assert!(v.holds);
    }

    #[test]
    fn non_stochastic_is_rejected() {
        let d = chain(&[(0, 0, (1, 2))], &[&[]]);
        assert!(matches!(
            check_pctl(&d, &parse_pctl("P>0 [F true]").expect("p"), &PctlOptions::default()),
            Err(PctlError::NotStochastic(0))
        ));
    }
}
