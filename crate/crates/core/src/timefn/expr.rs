//! Coefficient expressions in the single variable `t`.
//!
//! Grammar accepted by [`parse_expr`]:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := base ("^" factor)?
//! base   := number | "t" | ident "(" expr ")" | "(" expr ")" | "-" factor
//! ident  := sin | cos | tan | cot | tanh | coth | exp | ln | sqrt | abs
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` is `-(t^2)`, and `^` is
//! right associative.

use std::fmt;
use std::sync::Arc;

use crate::error::{LtvError, Result};

/// Threshold on |cos| (tan) or |sin| (cot) below which the value is a pole.
const TRIG_POLE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Tanh,
    Coth,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Cot,
        Func::Tanh,
        Func::Coth,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Real evaluation; `None` at poles and outside the real domain.
    pub fn apply(self, x: f64) -> Option<f64> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => {
                if x.cos().abs() <= TRIG_POLE_EPS {
                    return None;
                }
                x.tan()
            }
            Func::Cot => {
                if x.sin().abs() <= TRIG_POLE_EPS {
                    return None;
                }
                1.0 / x.tan()
            }
            Func::Tanh => x.tanh(),
            Func::Coth => 1.0 / x.tanh(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        };
        y.is_finite().then_some(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Expression tree over the variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var,
    Neg(Box<ExprAst>),
    Call(Func, Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
}

use ExprAst::*;

#[allow(clippy::should_implement_trait, clippy::redundant_guards)]
impl ExprAst {
    pub fn constant(c: f64) -> Self {
        Const(c)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    // Smart constructors fold constants and drop identities so symbolic
    // derivatives stay small.

    pub fn neg(a: ExprAst) -> ExprAst {
        match a {
            Const(c) => Const(-c),
            Neg(inner) => *inner,
            other => Neg(Box::new(other)),
        }
    }

    pub fn add(a: ExprAst, b: ExprAst) -> ExprAst {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Binary(BinOp::Add, Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: ExprAst, b: ExprAst) -> ExprAst {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Const(x - y),
            (Some(x), _) if x == 0.0 => ExprAst::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Binary(BinOp::Sub, Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: ExprAst, b: ExprAst) -> ExprAst {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Const(x * y),
            (Some(x), _) if x == 0.0 => Const(0.0),
            (_, Some(y)) if y == 0.0 => Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => ExprAst::neg(b),
            (_, Some(y)) if y == -1.0 => ExprAst::neg(a),
            _ => Binary(BinOp::Mul, Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: ExprAst, b: ExprAst) -> ExprAst {
        match (a.as_const(), b.as_const()) {
            (Some(x), _) if x == 0.0 => Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Binary(BinOp::Div, Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: ExprAst, b: ExprAst) -> ExprAst {
        match b.as_const() {
            Some(y) if y == 0.0 => Const(1.0),
            Some(y) if y == 1.0 => a,
            _ => Binary(BinOp::Pow, Box::new(a), Box::new(b)),
        }
    }

    pub fn call(f: Func, a: ExprAst) -> ExprAst {
        Call(f, Box::new(a))
    }

    /// Evaluate at `t`. Poles and values outside the real domain of a
    /// function are reported as [`LtvError::NonFinite`].
    pub fn eval(&self, t: f64) -> Result<f64> {
        let non_finite = |what: &str| LtvError::NonFinite { t, what: what.to_string() };
        match self {
            Const(c) => Ok(*c),
            Var => Ok(t),
            Neg(a) => Ok(-a.eval(t)?),
            Call(f, a) => {
                let x = a.eval(t)?;
                f.apply(x).ok_or_else(|| non_finite(&format!("{}({x})", f.name())))
            }
            Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                let r = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                };
                if r.is_finite() {
                    Ok(r)
                } else {
                    Err(non_finite(&format!("{x} {} {y}", op.symbol())))
                }
            }
        }
    }

    /// Symbolic derivative with respect to `t`.
    pub fn derivative(&self) -> ExprAst {
        match self {
            Const(_) => Const(0.0),
            Var => Const(1.0),
            Neg(a) => ExprAst::neg(a.derivative()),
            Binary(BinOp::Add, a, b) => ExprAst::add(a.derivative(), b.derivative()),
            Binary(BinOp::Sub, a, b) => ExprAst::sub(a.derivative(), b.derivative()),
            Binary(BinOp::Mul, a, b) => ExprAst::add(
                ExprAst::mul(a.derivative(), (**b).clone()),
                ExprAst::mul((**a).clone(), b.derivative()),
            ),
            Binary(BinOp::Div, a, b) => {
                // (a'b - ab') / b^2
                let num = ExprAst::sub(
                    ExprAst::mul(a.derivative(), (**b).clone()),
                    ExprAst::mul((**a).clone(), b.derivative()),
                );
                ExprAst::div(num, ExprAst::pow((**b).clone(), Const(2.0)))
            }
            Binary(BinOp::Pow, a, b) => {
                if let Some(c) = b.as_const() {
                    // c a^(c-1) a'
                    ExprAst::mul(
                        ExprAst::mul(Const(c), ExprAst::pow((**a).clone(), Const(c - 1.0))),
                        a.derivative(),
                    )
                } else {
                    // a^b (b' ln a + b a'/a)
                    let inner = ExprAst::add(
                        ExprAst::mul(b.derivative(), ExprAst::call(Func::Ln, (**a).clone())),
                        ExprAst::div(ExprAst::mul((**b).clone(), a.derivative()), (**a).clone()),
                    );
                    ExprAst::mul(self.clone(), inner)
                }
            }
            Call(f, a) => {
                let u = (**a).clone();
                let du = a.derivative();
                let outer = match f {
                    Func::Sin => ExprAst::call(Func::Cos, u),
                    Func::Cos => ExprAst::neg(ExprAst::call(Func::Sin, u)),
                    Func::Tan => ExprAst::add(
                        Const(1.0),
                        ExprAst::pow(ExprAst::call(Func::Tan, u), Const(2.0)),
                    ),
                    Func::Cot => ExprAst::neg(ExprAst::add(
                        Const(1.0),
                        ExprAst::pow(ExprAst::call(Func::Cot, u), Const(2.0)),
                    )),
                    Func::Tanh => ExprAst::sub(
                        Const(1.0),
                        ExprAst::pow(ExprAst::call(Func::Tanh, u), Const(2.0)),
                    ),
                    Func::Coth => ExprAst::sub(
                        Const(1.0),
                        ExprAst::pow(ExprAst::call(Func::Coth, u), Const(2.0)),
                    ),
                    Func::Exp => ExprAst::call(Func::Exp, u),
                    Func::Ln => ExprAst::div(Const(1.0), u),
                    Func::Sqrt => {
                        ExprAst::div(Const(1.0), ExprAst::mul(Const(2.0), ExprAst::call(Func::Sqrt, u)))
                    }
                    Func::Abs => ExprAst::div(u.clone(), ExprAst::call(Func::Abs, u)),
                };
                ExprAst::mul(outer, du)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Const(_) | Var => 1,
            Neg(a) | Call(_, a) => 1 + a.size(),
            Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        match self {
            Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    // A negative literal prints as unary minus; wrap when the
                    // context binds tighter than it.
                    let text = format!("-{:?}", c.abs());
                    if parent >= 3 {
                        write!(f, "({text})")
                    } else {
                        f.write_str(&text)
                    }
                } else {
                    write!(f, "{c:?}")
                }
            }
            Var => f.write_str("t"),
            Neg(a) => {
                if parent >= 3 {
                    f.write_str("(-")?;
                    a.fmt_prec(f, 3)?;
                    f.write_str(")")
                } else {
                    f.write_str("-")?;
                    a.fmt_prec(f, 3)
                }
            }
            Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_prec(f, 0)?;
                f.write_str(")")
            }
            Binary(op, a, b) => {
                let p = op.precedence();
                let wrap = p < parent || (*op == BinOp::Pow && parent == p);
                if wrap {
                    f.write_str("(")?;
                }
                if *op == BinOp::Pow {
                    // Right associative: the base needs parentheses at equal precedence.
                    a.fmt_prec(f, p + 1)?;
                    f.write_str("^")?;
                    b.fmt_prec(f, p - 1)?;
                } else {
                    a.fmt_prec(f, p)?;
                    write!(f, " {} ", op.symbol())?;
                    // Left associative: the right operand needs parentheses at equal precedence.
                    b.fmt_prec(f, p + 1)?;
                }
                if wrap {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parse an ASCII expression in `t`.
pub fn parse_expr(src: &str) -> Result<ExprAst> {
    if src.trim().is_empty() {
        return Err(LtvError::Syntax { offset: 0, message: "empty expression".into() });
    }
    if let Some(pos) = src.bytes().position(|b| !b.is_ascii()) {
        return Err(LtvError::Syntax { offset: pos, message: "non-ASCII input".into() });
    }
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

/// Shared, parsed expression.
pub fn parse_shared(src: &str) -> Result<Arc<ExprAst>> {
    parse_expr(src).map(Arc::new)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: String) -> LtvError {
        LtvError::Syntax { offset: self.pos, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.err(format!("expected `{}`, found `{}`", c as char, x as char))),
            None => Err(self.err(format!("expected `{}`, found end of input", c as char))),
        }
    }

    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<ExprAst> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?;
            return Ok(Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<ExprAst> {
        match self.peek() {
            None => Err(self.err("unexpected end of input".into())),
            Some(b'-') => {
                self.pos += 1;
                Ok(Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<ExprAst> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.err("malformed number".into()));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.err("malformed exponent".into()));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Const)
            .map_err(|e| LtvError::Syntax { offset: start, message: e.to_string() })
    }

    fn ident(&mut self) -> Result<ExprAst> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if name == "t" {
            return Ok(Var);
        }
        let Some(func) = Func::from_name(name) else {
            return Err(LtvError::UnknownIdentifier { name: name.to_string(), offset: start });
        };
        self.expect(b'(')?;
        if self.peek() == Some(b')') {
            return Err(LtvError::Arity { name: name.to_string(), offset: start });
        }
        let arg = self.expr()?;
        match self.peek() {
            Some(b')') => {
                self.pos += 1;
                Ok(Call(func, Box::new(arg)))
            }
            Some(b',') => Err(LtvError::Arity { name: name.to_string(), offset: start }),
            _ => Err(self.err(format!("expected `)` to close `{name}(`"))),
        }
    }
}
