use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::arith::{parse_rational, Polynomial, Rational, RationalFunction};
use crate::model::{
    Automaton, Clock, ClockExpr, ClockId, ClockKind, CmpOp, GuardAtom, Policy, State, StateId,
    Transition, UpdateRhs,
};
use crate::regions::{Formula, PolyAtom};

use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, ModelDocument, Span};

#[derive(Clone, Debug)]
enum Expr {
    Num(Rational),
    Name(String, Span),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>, Span),
    Div(Box<Expr>, Box<Expr>, Span),
    Pow(Box<Expr>, u32, Span),
}

/// `e0 op1 e1 op2 e2 ...`
#[derive(Clone, Debug)]
struct Chain {
    exprs: Vec<Expr>,
    ops: Vec<(CmpOp, Span)>,
}

#[derive(Clone, Debug)]
enum FormulaAst {
    True,
    False,
    Chain(Chain),
    And(Vec<FormulaAst>),
    Or(Vec<FormulaAst>),
    Not(Box<FormulaAst>),
}

type Name = (String, Span);

struct LevelDecl {
    level: usize,
    span: Span,
    main: Option<Name>,
    aux: Vec<Name>,
}

struct StateDecl {
    name: Name,
    level: (usize, Span),
    active: Option<Name>,
    initial: bool,
    accepting: bool,
    policy: Policy,
}

struct TransDecl {
    span: Span,
    source: Name,
    target: Name,
    label: Option<String>,
    guard: Vec<Chain>,
    updates: Vec<(Name, Expr)>,
}

#[derive(Default)]
struct Ast {
    params: Vec<Name>,
    levels: Option<(usize, Span)>,
    level_decls: Vec<LevelDecl>,
    states: Vec<StateDecl>,
    trans: Vec<TransDecl>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::new(
            self.span(),
            format!("expected {what}, found {}", self.peek().describe()),
        ))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().span)
        } else {
            self.error(&t.describe())
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => self.error(what),
        }
    }

    fn natural(&mut self, what: &str) -> PResult<(usize, Span)> {
        if let Tok::Number(s) = self.peek().clone() {
            if let Ok(v) = s.parse::<usize>() {
                let span = self.bump().span;
                return Ok((v, span));
            }
        }
        self.error(what)
    }

    // expressions

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let span = self.span();
            if self.eat(&Tok::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?), span);
            } else if self.eat(&Tok::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?), span);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.atom()?;
        let span = self.span();
        if self.eat(&Tok::Caret) {
            let (e, _) = self.natural("an integer exponent")?;
            let e = u32::try_from(e).map_err(|_| Diagnostic::new(span, "exponent too large"))?;
            return Ok(Expr::Pow(Box::new(base), e, span));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let span = self.bump().span;
                parse_rational(&s)
                    .map(Expr::Num)
                    .ok_or_else(|| Diagnostic::new(span, format!("malformed number {s}")))
            }
            Tok::Ident(s) => {
                let span = self.bump().span;
                Ok(Expr::Name(s, span))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.error("an expression"),
        }
    }

    fn cmp_op(&mut self) -> Option<(CmpOp, Span)> {
        let op = match self.peek() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Eq => CmpOp::Eq,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            _ => return None,
        };
        Some((op, self.bump().span))
    }

    fn chain(&mut self) -> PResult<Chain> {
        let mut exprs = vec![self.expr()?];
        let mut ops = Vec::new();
        while let Some(op) = self.cmp_op() {
            ops.push(op);
            exprs.push(self.expr()?);
        }
        if ops.is_empty() {
            return self.error("a comparison operator");
        }
        Ok(Chain { exprs, ops })
    }

    // scope formulas

    fn formula(&mut self) -> PResult<FormulaAst> {
        let mut parts = vec![self.conjunction()?];
        while self.eat_kw("or") {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            FormulaAst::Or(parts)
        })
    }

    fn conjunction(&mut self) -> PResult<FormulaAst> {
        let mut parts = vec![self.literal()?];
        while self.eat_kw("and") {
            parts.push(self.literal()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            FormulaAst::And(parts)
        })
    }

    fn literal(&mut self) -> PResult<FormulaAst> {
        if self.eat_kw("not") {
            return Ok(FormulaAst::Not(Box::new(self.literal()?)));
        }
        if self.eat_kw("true") {
            return Ok(FormulaAst::True);
        }
        if self.eat_kw("false") {
            return Ok(FormulaAst::False);
        }
        if *self.peek() == Tok::LParen {
            // either a parenthesised formula or an arithmetic operand
            let save = self.pos;
            if let Ok(c) = self.chain() {
                return Ok(FormulaAst::Chain(c));
            }
            self.pos = save;
            self.bump();
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        Ok(FormulaAst::Chain(self.chain()?))
    }

    // model

    fn model(&mut self) -> PResult<Ast> {
        self.expect_kw("pita")?;
        if matches!(self.peek(), Tok::Ident(_)) {
            self.bump();
        }
        self.expect(Tok::LBrace)?;
        let mut ast = Ast::default();
        while *self.peek() != Tok::RBrace {
            let Tok::Ident(kw) = self.peek().clone() else {
                return self.error("a declaration");
            };
            match kw.as_str() {
                "params" => {
                    self.bump();
                    while matches!(self.peek(), Tok::Ident(_)) {
                        let p = self.ident("a parameter name")?;
                        ast.params.push(p);
                        self.eat(&Tok::Comma);
                    }
                    self.expect(Tok::Semi)?;
                }
                "levels" => {
                    self.bump();
                    ast.levels = Some(self.natural("the number of levels")?);
                    self.expect(Tok::Semi)?;
                }
                "level" => ast.level_decls.push(self.level_decl()?),
                "state" => ast.states.push(self.state_decl()?),
                "trans" => ast.trans.push(self.trans_decl()?),
                _ => return self.error("`params`, `levels`, `level`, `state` or `trans`"),
            }
        }
        self.expect(Tok::RBrace)?;
        if *self.peek() != Tok::Eof {
            return self.error("end of input");
        }
        Ok(ast)
    }

    fn level_decl(&mut self) -> PResult<LevelDecl> {
        let span = self.expect_kw("level")?;
        let (level, _) = self.natural("a level number")?;
        self.expect(Tok::LBrace)?;
        let mut decl = LevelDecl {
            level,
            span,
            main: None,
            aux: Vec::new(),
        };
        while *self.peek() != Tok::RBrace {
            if self.eat_kw("main") {
                let name = self.ident("a clock name")?;
                if decl.main.is_some() {
                    return Err(Diagnostic::new(
                        name.1,
                        format!("level {level} already has a main clock"),
                    ));
                }
                decl.main = Some(name);
            } else if self.eat_kw("aux") {
                while matches!(self.peek(), Tok::Ident(_)) {
                    decl.aux.push(self.ident("a clock name")?);
                    self.eat(&Tok::Comma);
                }
            } else {
                return self.error("`main` or `aux`");
            }
            self.expect(Tok::Semi)?;
        }
        self.expect(Tok::RBrace)?;
        Ok(decl)
    }

    fn state_decl(&mut self) -> PResult<StateDecl> {
        self.expect_kw("state")?;
        let name = self.ident("a state name")?;
        self.expect_kw("level")?;
        let level = self.natural("a level number")?;
        let mut decl = StateDecl {
            name,
            level,
            active: None,
            initial: false,
            accepting: false,
            policy: Policy::Lazy,
        };
        loop {
            if self.eat_kw("init") || self.eat_kw("initial") {
                decl.initial = true;
            } else if self.eat_kw("final") || self.eat_kw("accepting") {
                decl.accepting = true;
            } else if self.eat_kw("lazy") {
                decl.policy = Policy::Lazy;
            } else if self.eat_kw("urgent") {
                decl.policy = Policy::Urgent;
            } else if self.eat_kw("delayed") {
                decl.policy = Policy::Delayed;
            } else if self.eat_kw("active") {
                decl.active = Some(self.ident("a clock name")?);
            } else {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        Ok(decl)
    }

    fn trans_decl(&mut self) -> PResult<TransDecl> {
        let span = self.expect_kw("trans")?;
        let source = self.ident("a state name")?;
        self.expect(Tok::Arrow)?;
        let target = self.ident("a state name")?;
        let mut decl = TransDecl {
            span,
            source,
            target,
            label: None,
            guard: Vec::new(),
            updates: Vec::new(),
        };
        if self.eat_kw("on") {
            let (l, _) = self.ident("a label")?;
            if l != "eps" {
                decl.label = Some(l);
            }
        }
        if self.eat_kw("when") && !self.eat_kw("true") {
            decl.guard.push(self.chain()?);
            while self.eat_kw("and") {
                decl.guard.push(self.chain()?);
            }
        }
        if self.eat_kw("do") {
            loop {
                let z = self.ident("a clock name")?;
                self.expect(Tok::Assign)?;
                decl.updates.push((z, self.expr()?));
                if !self.eat(&Tok::Comma) && !self.eat_kw("and") {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(decl)
    }
}

/// Linear combination of clocks with polynomial coefficients.
#[derive(Clone, Debug, Default)]
struct Lin {
    clocks: BTreeMap<ClockId, Polynomial>,
    constant: Polynomial,
}

impl Lin {
    fn constant(p: Polynomial) -> Self {
        Lin {
            clocks: BTreeMap::new(),
            constant: p,
        }
    }

    fn combine(mut self, other: Lin, sign: &Rational) -> Lin {
        for (z, c) in other.clocks {
            let e = self.clocks.entry(z).or_insert_with(Polynomial::zero);
            *e = &*e + &c.scale(sign);
        }
        self.clocks.retain(|_, c| !c.is_zero());
        self.constant = &self.constant + &other.constant.scale(sign);
        self
    }

    fn scale(self, p: &Polynomial) -> Lin {
        let mut clocks: BTreeMap<ClockId, Polynomial> =
            self.clocks.into_iter().map(|(z, c)| (z, &c * p)).collect();
        clocks.retain(|_, c| !c.is_zero());
        Lin {
            clocks,
            constant: &self.constant * p,
        }
    }

    fn to_expr(&self) -> ClockExpr {
        ClockExpr::from_parts(
            self.clocks
                .iter()
                .map(|(z, c)| (*z, RationalFunction::from_poly(c.clone()))),
            RationalFunction::from_poly(self.constant.clone()),
        )
    }
}

#[derive(Clone, Copy)]
enum Sym {
    Param(usize),
    Clock(ClockId),
}

fn eval(e: &Expr, env: &HashMap<String, Sym>) -> PResult<Lin> {
    Ok(match e {
        Expr::Num(q) => Lin::constant(Polynomial::constant(q.clone())),
        Expr::Name(n, span) => match env.get(n) {
            Some(Sym::Param(i)) => Lin::constant(Polynomial::var(*i)),
            Some(Sym::Clock(z)) => Lin {
                clocks: BTreeMap::from([(*z, Polynomial::one())]),
                constant: Polynomial::zero(),
            },
            None => return Err(Diagnostic::new(*span, format!("unknown name `{n}`"))),
        },
        Expr::Neg(a) => Lin::default().combine(eval(a, env)?, &-Rational::one()),
        Expr::Add(a, b) => eval(a, env)?.combine(eval(b, env)?, &Rational::one()),
        Expr::Sub(a, b) => eval(a, env)?.combine(eval(b, env)?, &-Rational::one()),
        Expr::Mul(a, b, span) => {
            let (x, y) = (eval(a, env)?, eval(b, env)?);
            if x.clocks.is_empty() {
                y.scale(&x.constant)
            } else if y.clocks.is_empty() {
                x.scale(&y.constant)
            } else {
                return Err(Diagnostic::new(
                    *span,
                    "product of two clock expressions is not linear",
                ));
            }
        }
        Expr::Div(a, b, span) => {
            let (x, y) = (eval(a, env)?, eval(b, env)?);
            match y.constant.constant_value() {
                Some(q) if y.clocks.is_empty() && !q.is_zero() => {
                    x.scale(&Polynomial::constant(q.recip()))
                }
                _ => {
                    return Err(Diagnostic::new(
                        *span,
                        "division is only allowed by a nonzero number",
                    ))
                }
            }
        }
        Expr::Pow(a, k, span) => {
            let x = eval(a, env)?;
            if !x.clocks.is_empty() {
                return Err(Diagnostic::new(*span, "exponent on non-parameter"));
            }
            Lin::constant(x.constant.pow(*k))
        }
    })
}

fn comparisons(c: &Chain, env: &HashMap<String, Sym>) -> PResult<Vec<(Lin, CmpOp, Span)>> {
    let vals: Vec<Lin> = c
        .exprs
        .iter()
        .map(|e| eval(e, env))
        .collect::<PResult<_>>()?;
    Ok(c.ops
        .iter()
        .enumerate()
        .map(|(i, (op, span))| {
            (
                vals[i]
                    .clone()
                    .combine(vals[i + 1].clone(), &-Rational::one()),
                *op,
                *span,
            )
        })
        .collect())
}

fn guard_atom(lin: Lin, op: CmpOp, clocks: &[Clock]) -> GuardAtom {
    if lin.constant.is_zero() && lin.clocks.len() == 2 {
        let mut it = lin.clocks.iter();
        let (&z1, c1) = it.next().unwrap();
        let (&z2, c2) = it.next().unwrap();
        let one = Polynomial::one();
        let minus = -&one;
        if clocks[z1.0].level == clocks[z2.0].level {
            if *c1 == one && *c2 == minus {
                return GuardAtom::Diff {
                    left: z1,
                    right: z2,
                    op,
                };
            }
            if *c1 == minus && *c2 == one {
                return GuardAtom::Diff {
                    left: z2,
                    right: z1,
                    op,
                };
            }
        }
    }
    GuardAtom::Linear {
        expr: lin.to_expr(),
        op,
    }
}

fn build(ast: Ast) -> Result<ModelDocument, Vec<Diagnostic>> {
    let mut errs = Vec::new();
    let mut env: HashMap<String, Sym> = HashMap::new();
    let declare =
        |env: &mut HashMap<String, Sym>, errs: &mut Vec<Diagnostic>, (n, span): &Name, s: Sym| {
            if env.insert(n.clone(), s).is_some() {
                errs.push(Diagnostic::new(*span, format!("`{n}` is declared twice")));
            }
        };
    let params: Vec<String> = ast.params.iter().map(|(n, _)| n.clone()).collect();
    for (i, p) in ast.params.iter().enumerate() {
        declare(&mut env, &mut errs, p, Sym::Param(i));
    }
    let max_level = ast
        .level_decls
        .iter()
        .map(|d| d.level)
        .chain(ast.states.iter().map(|s| s.level.0))
        .max()
        .unwrap_or(1);
    let levels = ast.levels.map(|(n, _)| n).unwrap_or(max_level);
    let mut decls: Vec<&LevelDecl> = ast.level_decls.iter().collect();
    decls.sort_by_key(|d| d.level);
    for w in decls.windows(2) {
        if w[0].level == w[1].level {
            errs.push(Diagnostic::new(
                w[1].span,
                format!("level {} is declared twice", w[1].level),
            ));
        }
    }
    for d in &decls {
        if d.level == 0 || d.level > levels {
            errs.push(Diagnostic::new(
                d.span,
                format!("level {} out of range 1..{levels}", d.level),
            ));
        }
    }
    let mut clocks = Vec::new();
    for l in 1..=levels {
        let decl = decls.iter().find(|d| d.level == l);
        let name = match decl.and_then(|d| d.main.clone()) {
            Some(n) => n,
            None => (format!("x{l}"), decl.map(|d| d.span).unwrap_or_default()),
        };
        declare(
            &mut env,
            &mut errs,
            &name,
            Sym::Clock(ClockId(clocks.len())),
        );
        clocks.push(Clock {
            name: name.0,
            level: l,
            kind: ClockKind::Main,
        });
    }
    for d in &decls {
        for n in &d.aux {
            declare(&mut env, &mut errs, n, Sym::Clock(ClockId(clocks.len())));
            clocks.push(Clock {
                name: n.0.clone(),
                level: d.level,
                kind: ClockKind::Aux,
            });
        }
    }

    let mut state_ids: HashMap<String, StateId> = HashMap::new();
    let mut states = Vec::new();
    let mut state_spans = Vec::new();
    for s in &ast.states {
        if state_ids
            .insert(s.name.0.clone(), StateId(states.len()))
            .is_some()
        {
            errs.push(Diagnostic::new(
                s.name.1,
                format!("state `{}` is declared twice", s.name.0),
            ));
        }
        let (level, lspan) = s.level;
        if level == 0 || level > levels {
            errs.push(Diagnostic::new(
                lspan,
                format!("level {level} out of range 1..{levels}"),
            ));
        }
        let active = match &s.active {
            Some((n, span)) => match env.get(n) {
                Some(Sym::Clock(z)) => *z,
                _ => {
                    errs.push(Diagnostic::new(*span, format!("unknown clock `{n}`")));
                    ClockId(0)
                }
            },
            None => ClockId(level.clamp(1, levels.max(1)) - 1),
        };
        states.push(State {
            name: s.name.0.clone(),
            level,
            active,
            initial: s.initial,
            accepting: s.accepting,
            policy: s.policy,
        });
        state_spans.push(s.name.1);
    }
    if !states.is_empty() && !states.iter().any(|s| s.initial) {
        states[0].initial = true;
    }

    let mut transitions = Vec::new();
    let mut trans_spans = Vec::new();
    for t in &ast.trans {
        let lookup = |(n, span): &Name, errs: &mut Vec<Diagnostic>| match state_ids.get(n) {
            Some(q) => *q,
            None => {
                errs.push(Diagnostic::new(*span, format!("unknown state `{n}`")));
                StateId(0)
            }
        };
        let source = lookup(&t.source, &mut errs);
        let target = lookup(&t.target, &mut errs);
        let mut guard = Vec::new();
        for c in &t.guard {
            match comparisons(c, &env) {
                Ok(cs) => guard.extend(
                    cs.into_iter()
                        .map(|(lin, op, _)| guard_atom(lin, op, &clocks)),
                ),
                Err(d) => errs.push(d),
            }
        }
        let mut update = BTreeMap::new();
        for ((z, span), rhs) in &t.updates {
            let Some(Sym::Clock(zid)) = env.get(z).copied() else {
                errs.push(Diagnostic::new(*span, format!("`{z}` is not a clock")));
                continue;
            };
            let lin = match eval(rhs, &env) {
                Ok(l) => l,
                Err(d) => {
                    errs.push(d);
                    continue;
                }
            };
            let copy = match (lin.clocks.len(), lin.constant.is_zero()) {
                (1, true) => {
                    let (&src, c) = lin.clocks.iter().next().unwrap();
                    (*c == Polynomial::one() && clocks[src.0].level == clocks[zid.0].level)
                        .then_some(src)
                }
                _ => None,
            };
            let value = match copy {
                Some(src) => UpdateRhs::Copy(src),
                None => UpdateRhs::Linear(lin.to_expr()),
            };
            if update.insert(zid, value).is_some() {
                errs.push(Diagnostic::new(
                    *span,
                    format!("clock `{z}` is assigned twice"),
                ));
            }
        }
        transitions.push(Transition {
            source,
            target,
            label: t.label.clone(),
            guard,
            update,
        });
        trans_spans.push(t.span);
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    let mut automaton = Automaton {
        params,
        levels,
        clocks,
        states,
        transitions,
    };
    automaton.rescale_guards();
    Ok(ModelDocument {
        automaton,
        state_spans,
        trans_spans,
    })
}

pub fn parse_model(src: &str) -> Result<ModelDocument, Vec<Diagnostic>> {
    let mut p = Parser::new(src).map_err(|d| vec![d])?;
    let ast = p.model().map_err(|d| vec![d])?;
    build(ast)
}

fn lower(f: &FormulaAst, env: &HashMap<String, Sym>) -> PResult<Formula> {
    Ok(match f {
        FormulaAst::True => Formula::True,
        FormulaAst::False => Formula::False,
        FormulaAst::Chain(c) => {
            let mut atoms = Vec::new();
            for (lin, op, span) in comparisons(c, env)? {
                if !lin.clocks.is_empty() {
                    return Err(Diagnostic::new(span, "scopes may only mention parameters"));
                }
                atoms.push(Formula::Atom(PolyAtom::new(lin.constant, op)));
            }
            if atoms.len() == 1 {
                atoms.pop().unwrap()
            } else {
                Formula::And(atoms)
            }
        }
        FormulaAst::And(fs) => {
            Formula::And(fs.iter().map(|g| lower(g, env)).collect::<PResult<_>>()?)
        }
        FormulaAst::Or(fs) => {
            Formula::Or(fs.iter().map(|g| lower(g, env)).collect::<PResult<_>>()?)
        }
        FormulaAst::Not(g) => Formula::Not(Box::new(lower(g, env)?)),
    })
}

/// Parses a parameter scope. Text starting with the keyword `smt` is kept
/// verbatim as an SMT-LIB assertion body.
pub fn parse_scope(src: &str, params: &[String]) -> Result<Formula, Diagnostic> {
    let trimmed = src.trim_start();
    if let Some(rest) = trimmed.strip_prefix("smt") {
        if rest.starts_with(|c: char| c.is_whitespace()) {
            return Ok(Formula::Smt(rest.trim().to_string()));
        }
    }
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    p.eat(&Tok::Semi);
    if *p.peek() != Tok::Eof {
        return p.error("end of scope");
    }
    let env = params
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), Sym::Param(i)))
        .collect();
    lower(&f, &env)
}

/// Parses a parameter valuation `p1 = 5, p2 = -1` (or one per line).
pub fn parse_valuation(src: &str, params: &[String]) -> Result<Vec<Rational>, Diagnostic> {
    let mut p = Parser::new(src)?;
    let mut vals: Vec<Option<Rational>> = vec![None; params.len()];
    let env: HashMap<String, Sym> = HashMap::new();
    while *p.peek() != Tok::Eof {
        let (name, span) = p.ident("a parameter name")?;
        let Some(i) = params.iter().position(|q| *q == name) else {
            return Err(Diagnostic::new(span, format!("unknown parameter `{name}`")));
        };
        if !p.eat(&Tok::Eq) && !p.eat(&Tok::Assign) {
            return p.error("`=`");
        }
        let e = p.expr()?;
        let v = eval(&e, &env)?
            .constant
            .constant_value()
            .ok_or_else(|| Diagnostic::new(span, "value must be a number"))?;
        vals[i] = Some(v);
        if !p.eat(&Tok::Comma) {
            p.eat(&Tok::Semi);
        }
    }
    vals.into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| {
                Diagnostic::new(Span::default(), format!("no value for `{}`", params[i]))
            })
        })
        .collect()
}
