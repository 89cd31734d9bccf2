//! Parser for the line-oriented `.vg` format.
//!
//! Parsing happens in two passes. The first pass tokenizes each line and
//! builds raw entries with every identifier argument held as an
//! unresolved symbol. The second pass resolves symbols to constants or
//! variables: integers and lowercase-initial identifiers are constants,
//! as are declared agent ids and members of declared domains; every
//! other uppercase-initial identifier is a variable.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::ast::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: duplicate agent id `{id}`")]
    DuplicateAgent { span: Span, id: String },
    #[error("{span}: predicate `{pred}` used with arity {found}, previously {expected}")]
    ArityConflict {
        span: Span,
        pred: String,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    fn syntax(span: Span, msg: impl Into<String>) -> Self {
        ParseError::Syntax {
            span,
            msg: msg.into(),
        }
    }
}

/// Parse a `.vg` specification source text.
pub fn parse_spec(text: &str) -> Result<Specification, ParseError> {
    let raw = RawSpec::parse(text)?;
    raw.resolve()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Agents,
    Knowledge,
    Constraints,
    Actions,
    Send,
    Events,
    Effects,
    Domains,
    Prob,
    Safety,
}

const SECTION_NAMES: &[(&str, Section)] = &[
    ("agents", Section::Agents),
    ("knowledge", Section::Knowledge),
    ("constraints", Section::Constraints),
    ("actions", Section::Actions),
    ("send", Section::Send),
    ("events", Section::Events),
    ("effects", Section::Effects),
    ("domains", Section::Domains),
    ("prob", Section::Prob),
    ("safety", Section::Safety),
];

/// Specification before symbol resolution. Atom args are `Term::Var` for
/// every identifier; `resolve` reclassifies them.
#[derive(Default)]
struct RawSpec {
    spec: Specification,
    arities: BTreeMap<String, (usize, Span)>,
}

impl RawSpec {
    fn parse(text: &str) -> Result<Self, ParseError> {
        let mut raw = RawSpec::default();
        let mut section = Section::None;
        let mut pending_action: Option<ActionDef> = None;

        for (idx, line_raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(line_raw);
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let span = Span {
                line: line_no,
                col: line.len() - line.trim_start().len() + 1,
            };

            if let Some(next) = section_header(trimmed) {
                raw.flush_action(&mut pending_action);
                section = next;
                continue;
            }

            let mut lx = Lexer::new(trimmed, line_no, span.col);
            match section {
                Section::None => {
                    return Err(ParseError::syntax(
                        span,
                        format!("expected a section header, found `{trimmed}`"),
                    ));
                }
                Section::Agents => raw.parse_agent_line(&mut lx, span)?,
                Section::Knowledge => {
                    let rule = raw.parse_rule(&mut lx, span)?;
                    raw.spec.knowledge.push(rule);
                }
                Section::Constraints => {
                    let rule = raw.parse_rule(&mut lx, span)?;
                    raw.spec.constraints.push(rule);
                }
                Section::Actions => {
                    let rule = raw.parse_rule(&mut lx, span)?;
                    raw.spec.action_rules.push(rule);
                }
                Section::Send => {
                    let rule = raw.parse_send_rule(&mut lx, span)?;
                    raw.spec.send_rules.push(rule);
                }
                Section::Events => {
                    let rule = raw.parse_event_rule(&mut lx, span)?;
                    raw.spec.event_rules.push(rule);
                }
                Section::Effects => raw.parse_effect_line(&mut lx, span, &mut pending_action)?,
                Section::Domains => raw.parse_domain_line(&mut lx, span)?,
                Section::Prob => raw.parse_prob_line(&mut lx, span)?,
                Section::Safety => raw.parse_safety_line(&mut lx, span)?,
            }
        }
        raw.flush_action(&mut pending_action);
        Ok(raw)
    }

    fn flush_action(&mut self, pending: &mut Option<ActionDef>) {
        if let Some(def) = pending.take() {
            self.spec.effects.push(def);
        }
    }

    fn record_arity(&mut self, atom: &Atom, span: Span) -> Result<(), ParseError> {
        let n = atom.args.len();
        match self.arities.get(&atom.pred) {
            Some((expected, _)) if *expected != n => Err(ParseError::ArityConflict {
                span,
                pred: atom.pred.clone(),
                expected: *expected,
                found: n,
            }),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(atom.pred.clone(), (n, span));
                Ok(())
            }
        }
    }

    fn parse_atom(&mut self, lx: &mut Lexer) -> Result<Atom, ParseError> {
        let span = lx.span();
        let pred = lx.expect_ident("predicate name")?;
        let mut args = Vec::new();
        if lx.eat(Tok::LParen) {
            if !lx.check(Tok::RParen) {
                loop {
                    args.push(lx.expect_term()?);
                    if !lx.eat(Tok::Comma) {
                        break;
                    }
                }
            }
            lx.expect(Tok::RParen)?;
        }
        let atom = Atom::new(pred, args);
        self.record_arity(&atom, span)?;
        Ok(atom)
    }

    fn parse_atom_list(&mut self, lx: &mut Lexer) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = Vec::new();
        if lx.at_end() {
            return Ok(atoms);
        }
        loop {
            atoms.push(self.parse_atom(lx)?);
            if !lx.eat(Tok::Comma) {
                break;
            }
        }
        Ok(atoms)
    }

    fn parse_goal_bases(&mut self, lx: &mut Lexer) -> Result<Vec<Vec<Atom>>, ParseError> {
        let mut bases = Vec::new();
        if lx.at_end() {
            return Ok(bases);
        }
        loop {
            lx.expect(Tok::LBracket)?;
            let mut base = Vec::new();
            if !lx.check(Tok::RBracket) {
                loop {
                    base.push(self.parse_atom(lx)?);
                    if !lx.eat(Tok::Comma) {
                        break;
                    }
                }
            }
            lx.expect(Tok::RBracket)?;
            bases.push(base);
            if !lx.eat(Tok::Comma) {
                break;
            }
        }
        Ok(bases)
    }

    fn parse_agent_line(&mut self, lx: &mut Lexer, span: Span) -> Result<(), ParseError> {
        if lx.eat_keyword("agent") {
            let id = lx.expect_ident("agent id")?;
            lx.expect_end()?;
            if self.spec.agents.iter().any(|a| a.id == id) {
                return Err(ParseError::DuplicateAgent { span, id });
            }
            self.spec.agents.push(AgentSpec {
                id,
                beliefs: BTreeSet::new(),
                goals: Vec::new(),
                outbox: BTreeSet::new(),
                inbox: BTreeSet::new(),
                span,
            });
            return Ok(());
        }
        let field = lx.expect_ident("`agent` or an agent field")?;
        lx.expect(Tok::Colon)?;
        if self.spec.agents.is_empty() {
            return Err(ParseError::syntax(
                span,
                format!("`{field}:` before any `agent` declaration"),
            ));
        }
        match field.as_str() {
            "beliefs" => {
                let atoms = self.parse_atom_list(lx)?;
                lx.expect_end()?;
                let agent = self.spec.agents.last_mut().expect("agent present");
                agent.beliefs.extend(atoms);
            }
            "goals" => {
                let bases = self.parse_goal_bases(lx)?;
                lx.expect_end()?;
                let agent = self.spec.agents.last_mut().expect("agent present");
                agent
                    .goals
                    .extend(bases.into_iter().map(|b| b.into_iter().collect()));
            }
            "inbox" | "outbox" => {
                let mut msgs = Vec::new();
                if !lx.at_end() {
                    loop {
                        lx.expect(Tok::LParen)?;
                        let other = lx.expect_ident("agent id")?;
                        lx.expect(Tok::Comma)?;
                        let payload = self.parse_atom(lx)?;
                        lx.expect(Tok::RParen)?;
                        msgs.push((other, payload));
                        if !lx.eat(Tok::Comma) {
                            break;
                        }
                    }
                }
                lx.expect_end()?;
                let agent = self.spec.agents.last_mut().expect("agent present");
                let id = agent.id.clone();
                for (other, payload) in msgs {
                    let msg = if field == "inbox" {
                        Message {
                            sender: other,
                            recipient: id.clone(),
                            payload,
                        }
                    } else {
                        Message {
                            sender: id.clone(),
                            recipient: other,
                            payload,
                        }
                    };
                    if field == "inbox" {
                        agent.inbox.insert(msg);
                    } else {
                        agent.outbox.insert(msg);
                    }
                }
            }
            other => {
                return Err(ParseError::syntax(
                    span,
                    format!("unknown agent field `{other}` (expected beliefs, goals, inbox or outbox)"),
                ));
            }
        }
        Ok(())
    }

    fn parse_exists_prefix(&mut self, lx: &mut Lexer) -> Result<BTreeSet<String>, ParseError> {
        let mut vars = BTreeSet::new();
        if lx.eat_keyword("exists") {
            loop {
                vars.insert(lx.expect_ident("variable name")?);
                if !lx.eat(Tok::Comma) {
                    break;
                }
            }
            lx.expect(Tok::Dot)?;
        }
        Ok(vars)
    }

    fn parse_literal(&mut self, lx: &mut Lexer) -> Result<Literal, ParseError> {
        let negated = lx.eat_keyword("not");
        if lx.check_keyword("goal") && lx.peek2() == Some(Tok::LParen) {
            lx.bump();
            lx.expect(Tok::LParen)?;
            let atom = self.parse_atom(lx)?;
            lx.expect(Tok::RParen)?;
            return Ok(Literal::Goal { atom, negated });
        }
        if lx.check_keyword("received") && lx.peek2() == Some(Tok::LParen) {
            let span = lx.span();
            lx.bump();
            lx.expect(Tok::LParen)?;
            let sender = lx.expect_term()?;
            lx.expect(Tok::Comma)?;
            let payload = self.parse_atom(lx)?;
            lx.expect(Tok::RParen)?;
            if negated {
                return Err(ParseError::syntax(span, "received(...) cannot be negated"));
            }
            return Ok(Literal::Received { sender, payload });
        }
        if lx.check_keyword("achieved") && lx.peek2() == Some(Tok::LParen) {
            let span = lx.span();
            lx.bump();
            lx.expect(Tok::LParen)?;
            let goal = self.parse_atom(lx)?;
            lx.expect(Tok::RParen)?;
            if negated {
                return Err(ParseError::syntax(span, "achieved(...) cannot be negated"));
            }
            return Ok(Literal::Achieved { goal });
        }
        let atom = self.parse_atom(lx)?;
        Ok(Literal::Belief { atom, negated })
    }

    fn parse_body(&mut self, lx: &mut Lexer) -> Result<Vec<Literal>, ParseError> {
        let mut body = vec![self.parse_literal(lx)?];
        while lx.eat_keyword("and") {
            body.push(self.parse_literal(lx)?);
        }
        Ok(body)
    }

    fn parse_rule(&mut self, lx: &mut Lexer, span: Span) -> Result<Rule, ParseError> {
        let exists_vars = self.parse_exists_prefix(lx)?;
        let body = self.parse_body(lx)?;
        lx.expect_keyword("implies")?;
        let head = self.parse_atom(lx)?;
        lx.expect_end()?;
        Ok(Rule {
            head,
            body,
            exists_vars,
            span,
        })
    }

    fn parse_send_rule(&mut self, lx: &mut Lexer, span: Span) -> Result<SendRule, ParseError> {
        let exists_vars = self.parse_exists_prefix(lx)?;
        let trigger = self.parse_body(lx)?;
        lx.expect_keyword("implies")?;
        lx.expect_keyword("send")?;
        lx.expect(Tok::LParen)?;
        let recipient = lx.expect_term()?;
        lx.expect(Tok::Comma)?;
        let payload = self.parse_atom(lx)?;
        lx.expect(Tok::RParen)?;
        lx.expect_end()?;
        Ok(SendRule {
            trigger,
            recipient,
            payload,
            exists_vars,
            span,
        })
    }

    fn parse_event_rule(&mut self, lx: &mut Lexer, span: Span) -> Result<EventRule, ParseError> {
        let exists_vars = self.parse_exists_prefix(lx)?;
        let trigger = self.parse_body(lx)?;
        lx.expect_keyword("implies")?;
        let mut ops = Vec::new();
        loop {
            if lx.eat_keyword("add") {
                ops.push(EventOp::AddBelief(self.parse_atom(lx)?));
            } else if lx.eat_keyword("del") {
                ops.push(EventOp::DelBelief(self.parse_atom(lx)?));
            } else if lx.eat_keyword("adopt") {
                lx.expect(Tok::LBracket)?;
                let mut base = Vec::new();
                if !lx.check(Tok::RBracket) {
                    loop {
                        base.push(self.parse_atom(lx)?);
                        if !lx.eat(Tok::Comma) {
                            break;
                        }
                    }
                }
                lx.expect(Tok::RBracket)?;
                ops.push(EventOp::AdoptGoal(base));
            } else if lx.eat_keyword("drop") {
                lx.expect(Tok::LBracket)?;
                let mut base = Vec::new();
                if !lx.check(Tok::RBracket) {
                    loop {
                        base.push(self.parse_atom(lx)?);
                        if !lx.eat(Tok::Comma) {
                            break;
                        }
                    }
                }
                lx.expect(Tok::RBracket)?;
                ops.push(EventOp::DropGoal(base));
            } else {
                return Err(ParseError::syntax(
                    lx.span(),
                    "expected add, del, adopt or drop",
                ));
            }
            if !lx.eat(Tok::Comma) {
                break;
            }
        }
        lx.expect_end()?;
        Ok(EventRule {
            trigger,
            ops,
            exists_vars,
            span,
        })
    }

    fn parse_effect_line(
        &mut self,
        lx: &mut Lexer,
        span: Span,
        pending: &mut Option<ActionDef>,
    ) -> Result<(), ParseError> {
        if lx.eat_keyword("action") {
            self.flush_action(pending);
            let name = lx.expect_ident("action name")?;
            let mut params = Vec::new();
            if lx.eat(Tok::LParen) {
                if !lx.check(Tok::RParen) {
                    loop {
                        params.push(lx.expect_ident("parameter")?);
                        if !lx.eat(Tok::Comma) {
                            break;
                        }
                    }
                }
                lx.expect(Tok::RParen)?;
            }
            lx.expect_end()?;
            // record the action head arity alongside predicates
            self.record_arity(
                &Atom::new(
                    name.clone(),
                    params.iter().map(|p| Term::Var(p.clone())).collect(),
                ),
                span,
            )?;
            *pending = Some(ActionDef {
                name,
                params,
                pre: Vec::new(),
                outcomes: Vec::new(),
                span,
            });
            return Ok(());
        }
        let def = pending.as_mut().ok_or_else(|| {
            ParseError::syntax(span, "effect line outside an `action` block")
        })?;
        if lx.eat_keyword("pre") {
            lx.expect(Tok::Colon)?;
            if !lx.at_end() {
                def.pre = self.parse_body_static(lx)?;
            }
            lx.expect_end()?;
            return Ok(());
        }
        if lx.eat_keyword("outcome") {
            let label = lx.expect_ident("outcome label")?;
            lx.expect(Tok::Colon)?;
            let mut adds = Vec::new();
            let mut dels = Vec::new();
            while !lx.at_end() {
                if lx.eat_keyword("add") {
                    loop {
                        adds.push(self.parse_atom(lx)?);
                        if !lx.eat(Tok::Comma) {
                            break;
                        }
                    }
                } else if lx.eat_keyword("del") {
                    loop {
                        dels.push(self.parse_atom(lx)?);
                        if !lx.eat(Tok::Comma) {
                            break;
                        }
                    }
                } else {
                    return Err(ParseError::syntax(lx.span(), "expected add or del"));
                }
                if !lx.eat(Tok::Semicolon) {
                    break;
                }
            }
            lx.expect_end()?;
            def.outcomes.push(Outcome { label, adds, dels });
            return Ok(());
        }
        Err(ParseError::syntax(
            span,
            "expected `action`, `pre:` or `outcome`",
        ))
    }

    // Preconditions are comma-separated literals without the message forms.
    fn parse_body_static(&mut self, lx: &mut Lexer) -> Result<Vec<Literal>, ParseError> {
        let span = lx.span();
        let mut body = vec![self.parse_literal(lx)?];
        while lx.eat(Tok::Comma) {
            body.push(self.parse_literal(lx)?);
        }
        for lit in &body {
            if matches!(lit, Literal::Received { .. } | Literal::Achieved { .. }) {
                return Err(ParseError::syntax(
                    span,
                    "received/achieved literals are not allowed in preconditions",
                ));
            }
        }
        Ok(body)
    }

    fn parse_domain_line(&mut self, lx: &mut Lexer, span: Span) -> Result<(), ParseError> {
        let name = lx.expect_ident("domain name")?;
        lx.expect(Tok::Eq)?;
        lx.expect(Tok::LBrace)?;
        let mut consts = Vec::new();
        if !lx.check(Tok::RBrace) {
            loop {
                consts.push(lx.expect_ident("constant")?);
                if !lx.eat(Tok::Comma) {
                    break;
                }
            }
        }
        lx.expect(Tok::RBrace)?;
        lx.expect_end()?;
        if self.spec.domains.contains_key(&name) {
            return Err(ParseError::syntax(span, format!("duplicate domain `{name}`")));
        }
        let mut seen = BTreeSet::new();
        consts.retain(|c| seen.insert(c.clone()));
        self.spec.domains.insert(name, consts);
        Ok(())
    }

    fn parse_prob_line(&mut self, lx: &mut Lexer, span: Span) -> Result<(), ParseError> {
        let label = lx.expect_ident("outcome label")?;
        lx.expect(Tok::Eq)?;
        let value = lx.expect_number()?;
        lx.expect_end()?;
        if self.spec.prob.contains_key(&label) {
            return Err(ParseError::syntax(
                span,
                format!("duplicate probability entry `{label}`"),
            ));
        }
        self.spec.prob.insert(label, value);
        Ok(())
    }

    fn parse_safety_line(&mut self, lx: &mut Lexer, span: Span) -> Result<(), ParseError> {
        let agent = lx.expect_ident("agent id")?;
        lx.expect(Tok::Colon)?;
        let mut atoms = Vec::new();
        if !lx.at_end() {
            loop {
                atoms.push(lx.expect_ident("safety atom name")?);
                if !lx.eat(Tok::Comma) {
                    break;
                }
            }
        }
        lx.expect_end()?;
        if self.spec.safety.contains_key(&agent) {
            return Err(ParseError::syntax(
                span,
                format!("duplicate safety entry for `{agent}`"),
            ));
        }
        self.spec.safety.insert(agent, atoms);
        Ok(())
    }

    /// Second pass: classify every symbol as constant or variable.
    fn resolve(mut self) -> Result<Specification, ParseError> {
        let mut constants: BTreeSet<String> = BTreeSet::new();
        for agent in &self.spec.agents {
            constants.insert(agent.id.clone());
        }
        for consts in self.spec.domains.values() {
            constants.extend(consts.iter().cloned());
        }
        let resolve_term = |t: &mut Term| {
            if let Term::Var(name) = t {
                if is_constant_symbol(name, &constants) {
                    *t = Term::Const(name.clone());
                }
            }
        };
        let resolve_atom = |a: &mut Atom| a.args.iter_mut().for_each(resolve_term);
        let resolve_lit = |l: &mut Literal| match l {
            Literal::Belief { atom, .. } | Literal::Goal { atom, .. } => resolve_atom(atom),
            Literal::Received { sender, payload } => {
                resolve_term(sender);
                resolve_atom(payload);
            }
            Literal::Achieved { goal } => resolve_atom(goal),
        };

        for agent in &mut self.spec.agents {
            agent.beliefs = std::mem::take(&mut agent.beliefs)
                .into_iter()
                .map(|mut a| {
                    resolve_atom(&mut a);
                    a
                })
                .collect();
            for base in &mut agent.goals {
                *base = std::mem::take(base)
                    .into_iter()
                    .map(|mut a| {
                        resolve_atom(&mut a);
                        a
                    })
                    .collect();
            }
            agent.inbox = std::mem::take(&mut agent.inbox)
                .into_iter()
                .map(|mut m| {
                    resolve_atom(&mut m.payload);
                    m
                })
                .collect();
            agent.outbox = std::mem::take(&mut agent.outbox)
                .into_iter()
                .map(|mut m| {
                    resolve_atom(&mut m.payload);
                    m
                })
                .collect();
        }
        for rule in self
            .spec
            .knowledge
            .iter_mut()
            .chain(self.spec.constraints.iter_mut())
            .chain(self.spec.action_rules.iter_mut())
        {
            resolve_atom(&mut rule.head);
            rule.body.iter_mut().for_each(resolve_lit);
        }
        for rule in &mut self.spec.send_rules {
            rule.trigger.iter_mut().for_each(resolve_lit);
            resolve_term(&mut rule.recipient);
            resolve_atom(&mut rule.payload);
        }
        for rule in &mut self.spec.event_rules {
            rule.trigger.iter_mut().for_each(resolve_lit);
            for op in &mut rule.ops {
                match op {
                    EventOp::AddBelief(a) | EventOp::DelBelief(a) => resolve_atom(a),
                    EventOp::AdoptGoal(base) | EventOp::DropGoal(base) => {
                        base.iter_mut().for_each(resolve_atom)
                    }
                }
            }
        }
        for def in &mut self.spec.effects {
            // parameters stay variables; atoms resolve as usual
            def.pre.iter_mut().for_each(resolve_lit);
            for o in &mut def.outcomes {
                o.adds.iter_mut().for_each(resolve_atom);
                o.dels.iter_mut().for_each(resolve_atom);
            }
        }
        Ok(self.spec)
    }
}

fn is_constant_symbol(name: &str, declared: &BTreeSet<String>) -> bool {
    if declared.contains(name) {
        return true;
    }
    match name.chars().next() {
        Some(c) if c.is_ascii_digit() => true,
        Some(c) if c.is_ascii_lowercase() => true,
        _ => false,
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn section_header(trimmed: &str) -> Option<Section> {
    let name = trimmed.strip_suffix(':')?;
    SECTION_NAMES
        .iter()
        .find(|(n, _)| *n == name.trim())
        .map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(BigRational),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semicolon,
    Dot,
    Eq,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_) => "number".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semicolon => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end_span: Span,
}

impl Lexer {
    fn new(line: &str, line_no: usize, start_col: usize) -> Self {
        let mut toks = Vec::new();
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let span = Span {
                line: line_no,
                col: start_col + i,
            };
            match c {
                ' ' | '\t' => {
                    i += 1;
                }
                '(' => {
                    toks.push((Tok::LParen, span));
                    i += 1;
                }
                ')' => {
                    toks.push((Tok::RParen, span));
                    i += 1;
                }
                '{' => {
                    toks.push((Tok::LBrace, span));
                    i += 1;
                }
                '}' => {
                    toks.push((Tok::RBrace, span));
                    i += 1;
                }
                '[' => {
                    toks.push((Tok::LBracket, span));
                    i += 1;
                }
                ']' => {
                    toks.push((Tok::RBracket, span));
                    i += 1;
                }
                ',' => {
                    toks.push((Tok::Comma, span));
                    i += 1;
                }
                ':' => {
                    toks.push((Tok::Colon, span));
                    i += 1;
                }
                ';' => {
                    toks.push((Tok::Semicolon, span));
                    i += 1;
                }
                '.' => {
                    toks.push((Tok::Dot, span));
                    i += 1;
                }
                '=' => {
                    toks.push((Tok::Eq, span));
                    i += 1;
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                    // a number with a fractional part or slash is a probability
                    if i < bytes.len()
                        && (bytes[i] as char == '.' || bytes[i] as char == '/')
                        && i + 1 < bytes.len()
                        && (bytes[i + 1] as char).is_ascii_digit()
                    {
                        let sep = bytes[i] as char;
                        i += 1;
                        let frac_start = i;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                        let whole = &line[start..frac_start - 1];
                        let frac = &line[frac_start..i];
                        let value = if sep == '.' {
                            decimal_to_rational(whole, frac)
                        } else {
                            BigRational::new(
                                whole.parse::<BigInt>().expect("digits"),
                                frac.parse::<BigInt>().expect("digits"),
                            )
                        };
                        toks.push((Tok::Number(value), span));
                    } else {
                        toks.push((Tok::Ident(line[start..i].to_string()), span));
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] as char == '_')
                    {
                        i += 1;
                    }
                    toks.push((Tok::Ident(line[start..i].to_string()), span));
                }
                other => {
                    // surface as an ident token so the parser reports it
                    toks.push((Tok::Ident(other.to_string()), span));
                    i += 1;
                }
            }
        }
        let end_span = Span {
            line: line_no,
            col: start_col + line.len(),
        };
        Lexer {
            toks,
            pos: 0,
            end_span,
        }
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .map(|(_, s)| *s)
            .unwrap_or(self.end_span)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t.clone())
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn check(&self, tok: Tok) -> bool {
        self.peek() == Some(&tok)
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.check(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn check_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.check_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(tok.clone()) {
            Ok(())
        } else {
            Err(ParseError::syntax(
                self.span(),
                format!(
                    "expected {}, found {}",
                    tok.describe(),
                    self.peek().map(|t| t.describe()).unwrap_or("end of line".into())
                ),
            ))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(ParseError::syntax(
                self.span(),
                format!(
                    "expected `{kw}`, found {}",
                    self.peek().map(|t| t.describe()).unwrap_or("end of line".into())
                ),
            ))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => Err(ParseError::syntax(
                self.span(),
                format!(
                    "expected {what}, found {}",
                    other.map(|t| t.describe()).unwrap_or("end of line".into())
                ),
            )),
        }
    }

    /// A term token: identifiers become unresolved `Var`s for the second pass.
    fn expect_term(&mut self) -> Result<Term, ParseError> {
        let s = self.expect_ident("a term")?;
        Ok(Term::Var(s))
    }

    fn expect_number(&mut self) -> Result<BigRational, ParseError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            Some(Tok::Ident(s)) if s.chars().all(|c| c.is_ascii_digit()) => {
                let n = BigRational::from_integer(s.parse::<BigInt>().expect("digits"));
                self.bump();
                Ok(n)
            }
            other => Err(ParseError::syntax(
                self.span(),
                format!(
                    "expected a number, found {}",
                    other.map(|t| t.describe()).unwrap_or("end of line".into())
                ),
            )),
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(ParseError::syntax(
                self.span(),
                format!("unexpected {} at end of line", t.describe()),
            )),
        }
    }
}

fn decimal_to_rational(whole: &str, frac: &str) -> BigRational {
    let denom = BigInt::from(10u32).pow(frac.len() as u32);
    let whole: BigInt = whole.parse().expect("digits");
    let frac: BigInt = if frac.is_empty() {
        BigInt::zero()
    } else {
        frac.parse().expect("digits")
    };
    BigRational::new(whole * &denom + frac, denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_agent_block() {
        let src = r#"
agents:
  agent A1
    beliefs: at(6), battery(1), docked(6), assigned(6)
    goals: [transport(3,2)], [transport(3,2)], [transport(4,2)]
  agent R
    beliefs: idle(2), idle(3), reserved(A1,6)
    goals:
"#;
        let spec = parse_spec(src).expect("parse ok");
        assert_eq!(spec.agents.len(), 2);
        let a1 = &spec.agents[0];
        assert_eq!(a1.id, "A1");
        assert_eq!(a1.beliefs.len(), 4);
        assert_eq!(a1.goals.len(), 3);
        let r = &spec.agents[1];
        assert!(r.goals.is_empty());
        // A1 resolves to a constant because it is a declared agent id
        let reserved = r
            .beliefs
            .iter()
            .find(|a| a.pred == "reserved")
            .expect("reserved belief");
        assert_eq!(reserved.args[0], Term::Const("A1".into()));
    }

    #[test]
    fn parses_safety_rule_shapes() {
        let src = r#"
agents:
  agent A1
    beliefs: battery(1)
    goals:
knowledge:
  battery(1) implies safe1
  exists P. at(P) and not at(9) implies safe2
domains:
  p = {2, 3, 9}
"#;
        let spec = parse_spec(src).expect("parse ok");
        assert_eq!(spec.knowledge.len(), 2);
        let r0 = &spec.knowledge[0];
        assert_eq!(r0.head, Atom::propositional("safe1"));
        assert_eq!(r0.body.len(), 1);
        let r1 = &spec.knowledge[1];
        assert!(r1.exists_vars.contains("P"));
        assert_eq!(
            r1.body[0],
            Literal::Belief {
                atom: Atom::new("at", vec![Term::Var("P".into())]),
                negated: false
            }
        );
        assert_eq!(
            r1.body[1],
            Literal::Belief {
                atom: Atom::new("at", vec![Term::Const("9".into())]),
                negated: true
            }
        );
    }

    #[test]
    fn empty_input_gives_empty_spec() {
        let spec = parse_spec("").expect("parse ok");
        assert!(spec.agents.is_empty());
        assert!(spec.knowledge.is_empty());
        assert!(spec.prob.is_empty());
    }

    #[test]
    fn rejects_duplicate_agents() {
        let src = "agents:\n  agent A1\n  agent A1\n";
        match parse_spec(src) {
            Err(ParseError::DuplicateAgent { id, .. }) => assert_eq!(id, "A1"),
            other => panic!("expected duplicate agent error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_arity_conflicts() {
        let src = "knowledge:\n  at(1) implies ok\n  at(1,2) implies ok\n";
        match parse_spec(src) {
            Err(ParseError::ArityConflict { pred, .. }) => assert_eq!(pred, "at"),
            other => panic!("expected arity conflict, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let src = "knowledge:\n  battery(1) implies\n";
        match parse_spec(src) {
            Err(ParseError::Syntax { span, .. }) => assert_eq!(span.line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parses_effects_and_prob() {
        let src = r#"
effects:
  action move(X, Y)
    pre: at(X), not crash
    outcome move_ok: add at(Y); del at(X)
    outcome move_base_err: add crash
prob:
  move_ok = 0.9
  move_base_err = 0.1
"#;
        let spec = parse_spec(src).expect("parse ok");
        assert_eq!(spec.effects.len(), 1);
        let def = &spec.effects[0];
        assert_eq!(def.name, "move");
        assert_eq!(def.params, vec!["X", "Y"]);
        assert_eq!(def.pre.len(), 2);
        assert_eq!(def.outcomes.len(), 2);
        assert_eq!(def.outcomes[0].label, "move_ok");
        assert_eq!(
            spec.prob["move_ok"],
            BigRational::new(9.into(), 10.into())
        );
    }

    #[test]
    fn parses_events_and_send() {
        let src = r#"
agents:
  agent A1
    beliefs:
    goals:
  agent R
    beliefs:
    goals:
send:
  announce(L) implies send(R, arrive(L))
events:
  received(Ag, arrive(L)) and idle(L) implies del idle(L), add reserved(Ag, L)
  achieved(transport(F, T)) implies del delivered(F, T)
domains:
  l = {2, 3}
  ag = {A1}
  f = {3}
  t = {2}
"#;
        let spec = parse_spec(src).expect("parse ok");
        assert_eq!(spec.send_rules.len(), 1);
        assert_eq!(spec.event_rules.len(), 2);
        assert!(spec.event_rules[0].received_literal().is_some());
        assert!(spec.event_rules[1].achieved_literal().is_some());
        assert_eq!(spec.event_rules[0].ops.len(), 2);
    }
}
