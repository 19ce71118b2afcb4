//! Expression DSL: parser, jet evaluation and the finite-difference cross-oracle.
//!
//! Grammar (whitespace insignificant, numbers decimal with optional exponent):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ['-'] power
//! power  := atom ['^' factor]
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! so `^` binds tighter than unary minus, which binds tighter than `*`/`/`,
//! which bind tighter than `+`/`-`; `^` is right-associative, the rest
//! left-associative. Exponents must fold to a constant; integer exponents are
//! evaluated by repeated multiplication, real exponents require a positive
//! base at evaluation time.
//!
//! Trees are immutable after parsing. Evaluation is pure, so one `Expr` may be
//! evaluated from many threads concurrently.

use std::fmt;

use thiserror::Error;

use crate::jet::{Jet, JetError};

/// Chart point.
pub type Point = [f64; 3];

/// Byte span of a node in the source text (zero for programmatically built nodes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const SYNTHETIC: Span = Span { start: 0, end: 0 };
}

/// Unary functions of the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Atan,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
        }
    }
}

/// Expression tree node kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    /// Coordinate, by index into the owning chart's coordinate list.
    Var(usize),
    /// Named parameter, by index into the parameter table.
    Param(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant exponent (folded at parse time).
    Pow(Box<Expr>, f64),
    Func(Func, Box<Expr>),
}

/// An immutable expression over a fixed set of coordinates and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    // Programmatic constructors, used when structures are rebuilt (e.g. under
    // a conformal rescaling). Synthetic spans.
    pub fn num(v: f64) -> Expr {
        Expr::new(ExprKind::Num(v), Span::SYNTHETIC)
    }

    pub fn var(i: usize) -> Expr {
        Expr::new(ExprKind::Var(i), Span::SYNTHETIC)
    }

    pub fn param(i: usize) -> Expr {
        Expr::new(ExprKind::Param(i), Span::SYNTHETIC)
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::new(ExprKind::Neg(Box::new(a)), Span::SYNTHETIC)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Add(Box::new(a), Box::new(b)), Span::SYNTHETIC)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Sub(Box::new(a), Box::new(b)), Span::SYNTHETIC)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Mul(Box::new(a), Box::new(b)), Span::SYNTHETIC)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Div(Box::new(a), Box::new(b)), Span::SYNTHETIC)
    }

    pub fn pow(a: Expr, e: f64) -> Expr {
        Expr::new(ExprKind::Pow(Box::new(a), e), Span::SYNTHETIC)
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        Expr::new(ExprKind::Func(f, Box::new(a)), Span::SYNTHETIC)
    }
}

/// Parse errors, with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: &'static str },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at offset {offset} is not a function")]
    NotAFunction { name: String, offset: usize },
    #[error("exponent at offset {offset} is not a constant")]
    NonConstantExponent { offset: usize },
    #[error("malformed number at offset {offset}")]
    BadNumber { offset: usize },
}

/// Evaluation errors, carrying the span of the offending node.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain violation in `{func}` at offset {}..{}: {source}", span.start, span.end)]
    Domain {
        func: &'static str,
        span: Span,
        source: JetError,
    },
    #[error("parameter index {0} out of range of the supplied parameter table")]
    UnboundParameter(usize),
    #[error("jet arithmetic failed at offset {}..{}: {source}", span.start, span.end)]
    Jet { span: Span, source: JetError },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: &'a [String],
    params: &'a [String],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let start = lhs.span.start;
            if self.eat(b'+') {
                let rhs = self.term()?;
                let span = Span { start, end: rhs.span.end };
                lhs = Expr::new(ExprKind::Add(Box::new(lhs), Box::new(rhs)), span);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                let span = Span { start, end: rhs.span.end };
                lhs = Expr::new(ExprKind::Sub(Box::new(lhs), Box::new(rhs)), span);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let start = lhs.span.start;
            if self.eat(b'*') {
                let rhs = self.factor()?;
                let span = Span { start, end: rhs.span.end };
                lhs = Expr::new(ExprKind::Mul(Box::new(lhs), Box::new(rhs)), span);
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                let span = Span { start, end: rhs.span.end };
                lhs = Expr::new(ExprKind::Div(Box::new(lhs), Box::new(rhs)), span);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.eat(b'-') {
            let inner = self.power()?;
            let span = Span { start, end: inner.span.end };
            Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let exp_offset = self.pos;
            let exp = self.factor()?;
            let folded = fold_constant(&exp)
                .ok_or(ParseError::NonConstantExponent { offset: exp_offset })?;
            let span = Span { start: base.span.start, end: exp.span.end };
            Ok(Expr::new(ExprKind::Pow(Box::new(base), folded), span))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos).copied() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(ParseError::Syntax { offset: self.pos, expected: "`)`" });
                }
                Ok(Expr::new(inner.kind, Span { start, end: self.pos }))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.ident();
                let end = self.pos;
                if self.eat(b'(') {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        if self.coords.iter().any(|c| c == &name)
                            || self.params.iter().any(|p| p == &name)
                        {
                            ParseError::NotAFunction { name: name.clone(), offset: start }
                        } else {
                            ParseError::UnknownIdentifier { name: name.clone(), offset: start }
                        }
                    })?;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(ParseError::Syntax { offset: self.pos, expected: "`)`" });
                    }
                    Ok(Expr::new(
                        ExprKind::Func(func, Box::new(arg)),
                        Span { start, end: self.pos },
                    ))
                } else if let Some(i) = self.coords.iter().position(|c| c == &name) {
                    Ok(Expr::new(ExprKind::Var(i), Span { start, end }))
                } else if let Some(i) = self.params.iter().position(|p| p == &name) {
                    Ok(Expr::new(ExprKind::Param(i), Span { start, end }))
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset: start })
                }
            }
            _ => Err(ParseError::Syntax { offset: self.pos, expected: "number, identifier or `(`" }),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if !self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                // `2e3x` would lex as a malformed exponent; back off so `2e`
                // is never silently accepted.
                self.pos = mark;
                return Err(ParseError::BadNumber { offset: start });
            }
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| ParseError::BadNumber { offset: start })?;
        Ok(Expr::new(ExprKind::Num(v), Span { start, end: self.pos }))
    }
}

fn fold_constant(e: &Expr) -> Option<f64> {
    Some(match &e.kind {
        ExprKind::Num(v) => *v,
        ExprKind::Neg(a) => -fold_constant(a)?,
        ExprKind::Add(a, b) => fold_constant(a)? + fold_constant(b)?,
        ExprKind::Sub(a, b) => fold_constant(a)? - fold_constant(b)?,
        ExprKind::Mul(a, b) => fold_constant(a)? * fold_constant(b)?,
        ExprKind::Div(a, b) => fold_constant(a)? / fold_constant(b)?,
        ExprKind::Pow(a, p) => fold_constant(a)?.powf(*p),
        _ => return None,
    })
}

/// Parse `source` against the declared coordinate and parameter names.
pub fn parse_expr(source: &str, coords: &[String], params: &[String]) -> Result<Expr, ParseError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0, coords, params };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::Syntax { offset: p.pos, expected: "end of input" });
    }
    Ok(e)
}

fn is_integer(v: f64) -> Option<i64> {
    let r = v.round();
    if (v - r).abs() < 1e-12 && r.abs() < 1e15 {
        Some(r as i64)
    } else {
        None
    }
}

impl Expr {
    /// Evaluate as an order-`order` jet at `p` with all parameters bound.
    ///
    /// The returned jet's coefficients are the exact partial derivatives of
    /// the expression at `p` up to total order `order`, in Taylor form.
    pub fn eval_jet(&self, p: Point, params: &[f64], order: usize) -> Result<Jet, EvalError> {
        let wrap = |span: Span, func: &'static str, e: JetError| match e {
            JetError::Domain { .. } | JetError::DivisionByZero => {
                EvalError::Domain { func, span, source: e }
            }
            other => EvalError::Jet { span, source: other },
        };
        Ok(match &self.kind {
            ExprKind::Num(v) => Jet::constant(*v, order),
            ExprKind::Var(i) => Jet::variable(p[*i], *i, order),
            ExprKind::Param(i) => Jet::constant(
                *params.get(*i).ok_or(EvalError::UnboundParameter(*i))?,
                order,
            ),
            ExprKind::Neg(a) => -&a.eval_jet(p, params, order)?,
            ExprKind::Add(a, b) => &a.eval_jet(p, params, order)? + &b.eval_jet(p, params, order)?,
            ExprKind::Sub(a, b) => &a.eval_jet(p, params, order)? - &b.eval_jet(p, params, order)?,
            ExprKind::Mul(a, b) => &a.eval_jet(p, params, order)? * &b.eval_jet(p, params, order)?,
            ExprKind::Div(a, b) => a
                .eval_jet(p, params, order)?
                .div_jet(&b.eval_jet(p, params, order)?)
                .map_err(|e| wrap(self.span, "/", e))?,
            ExprKind::Pow(a, ex) => {
                let base = a.eval_jet(p, params, order)?;
                match is_integer(*ex) {
                    Some(n) => base.powi(n).map_err(|e| wrap(self.span, "^", e))?,
                    None => base.powf(*ex).map_err(|e| wrap(self.span, "^", e))?,
                }
            }
            ExprKind::Func(f, a) => {
                let arg = a.eval_jet(p, params, order)?;
                let name = f.name();
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Tan => arg.tan().map_err(|e| wrap(self.span, name, e))?,
                    Func::Exp => arg.exp(),
                    Func::Log => arg.ln().map_err(|e| wrap(self.span, name, e))?,
                    Func::Sqrt => arg.sqrt().map_err(|e| wrap(self.span, name, e))?,
                    Func::Sinh => arg.sinh(),
                    Func::Cosh => arg.cosh(),
                    Func::Tanh => arg.tanh().map_err(|e| wrap(self.span, name, e))?,
                    Func::Atan => arg.atan(),
                }
            }
        })
    }

    /// Plain f64 evaluation. This is a separate code path from the jets and
    /// serves as the base of the finite-difference cross-oracle.
    pub fn eval_value(&self, p: Point, params: &[f64]) -> Result<f64, EvalError> {
        let dom = |func: &'static str, value: f64| EvalError::Domain {
            func,
            span: self.span,
            source: JetError::Domain { func, value },
        };
        Ok(match &self.kind {
            ExprKind::Num(v) => *v,
            ExprKind::Var(i) => p[*i],
            ExprKind::Param(i) => *params.get(*i).ok_or(EvalError::UnboundParameter(*i))?,
            ExprKind::Neg(a) => -a.eval_value(p, params)?,
            ExprKind::Add(a, b) => a.eval_value(p, params)? + b.eval_value(p, params)?,
            ExprKind::Sub(a, b) => a.eval_value(p, params)? - b.eval_value(p, params)?,
            ExprKind::Mul(a, b) => a.eval_value(p, params)? * b.eval_value(p, params)?,
            ExprKind::Div(a, b) => {
                let d = b.eval_value(p, params)?;
                if d == 0.0 {
                    return Err(dom("/", d));
                }
                a.eval_value(p, params)? / d
            }
            ExprKind::Pow(a, ex) => {
                let v = a.eval_value(p, params)?;
                match is_integer(*ex) {
                    Some(n) => v.powi(n as i32),
                    None => {
                        if v <= 0.0 {
                            return Err(dom("^", v));
                        }
                        v.powf(*ex)
                    }
                }
            }
            ExprKind::Func(f, a) => {
                let v = a.eval_value(p, params)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(dom("log", v));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(dom("sqrt", v));
                        }
                        v.sqrt()
                    }
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Tanh => v.tanh(),
                    Func::Atan => v.atan(),
                }
            }
        })
    }
}

/// Finite-difference step of the cross-oracle (first-order stencils).
pub const FD_STEP: f64 = 1e-5;
/// Step for the second-order stencils. The `1/h²` division amplifies f64
/// rounding to ~1e-5 at step 1e-5, so second order needs a wider step; 2e-3
/// keeps the rounding floor near 3e-10 while truncation stays below 1e-5.
pub const FD_STEP2: f64 = 2e-3;

/// Compare jet derivatives of orders `<= k` (`k <= 2`) against central
/// differences; step [`FD_STEP`] for first order, [`FD_STEP2`] with 5-point
/// stencils for pure second derivatives and 4-point cross stencils for mixed
/// ones.
///
/// Returns the max over multi-indices of `|jet - fd| / (1 + |jet|)`. The base
/// point must sit away from the domain boundary by the stencil reach.
pub fn fd_check(e: &Expr, p: Point, params: &[f64], k: usize) -> Result<f64, EvalError> {
    assert!(k <= 2, "the finite-difference oracle validates orders <= 2");
    let h = FD_STEP;
    let jet = e.eval_jet(p, params, k)?;
    let f = |q: Point| e.eval_value(q, params);
    let shift = |mut q: Point, v: usize, s: f64| {
        q[v] += s;
        q
    };
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs());

    let mut worst = rel(jet.value(), f(p)?);
    if k >= 1 {
        for v in 0..3 {
            let d = (f(shift(p, v, h))? - f(shift(p, v, -h))?) / (2.0 * h);
            let mut idx = [0usize; 3];
            idx[v] = 1;
            worst = worst.max(rel(jet.partial(idx[0], idx[1], idx[2]), d));
        }
    }
    if k >= 2 {
        let h = FD_STEP2;
        for v in 0..3 {
            let d = (-f(shift(p, v, 2.0 * h))? + 16.0 * f(shift(p, v, h))? - 30.0 * f(p)?
                + 16.0 * f(shift(p, v, -h))?
                - f(shift(p, v, -2.0 * h))?)
                / (12.0 * h * h);
            let mut idx = [0usize; 3];
            idx[v] = 2;
            worst = worst.max(rel(jet.partial(idx[0], idx[1], idx[2]), d));
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let pp = f(shift(shift(p, a, h), b, h))?;
                let pm = f(shift(shift(p, a, h), b, -h))?;
                let mp = f(shift(shift(p, a, -h), b, h))?;
                let mm = f(shift(shift(p, a, -h), b, -h))?;
                let d = (pp - pm - mp + mm) / (4.0 * h * h);
                let mut idx = [0usize; 3];
                idx[a] = 1;
                idx[b] = 1;
                worst = worst.max(rel(jet.partial(idx[0], idx[1], idx[2]), d));
            }
        }
    }
    Ok(worst)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Displayed with full parenthesisation; used in diagnostics only.
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::Var(i) => write!(f, "${i}"),
            ExprKind::Param(i) => write!(f, "#{i}"),
            ExprKind::Neg(a) => write!(f, "(-{a})"),
            ExprKind::Add(a, b) => write!(f, "({a}+{b})"),
            ExprKind::Sub(a, b) => write!(f, "({a}-{b})"),
            ExprKind::Mul(a, b) => write!(f, "({a}*{b})"),
            ExprKind::Div(a, b) => write!(f, "({a}/{b})"),
            ExprKind::Pow(a, e) => write!(f, "({a}^{e})"),
            ExprKind::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
