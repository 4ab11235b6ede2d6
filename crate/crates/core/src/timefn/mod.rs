//! Scalar functions of time: parsed expressions, native closures and sampled
//! grids, with exact or finite-difference derivatives and adaptive quadrature.

pub mod expr;
pub mod grid;
pub mod quad;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

pub use expr::{parse_expr, ExprAst, Func};
pub use grid::{Grid, Interp};

use crate::error::{LtvError, Result};
use crate::C64;

/// Number of probe points used to validate a declared period.
pub const PERIOD_PROBES: usize = 64;
pub const PERIOD_TOL: f64 = 1e-7;

/// Relative slack applied to domain endpoints.
const DOMAIN_SLACK: f64 = 1e-12;

pub type NativeFn = dyn Fn(f64) -> Result<C64> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codomain {
    Real,
    Complex,
}

impl Codomain {
    fn join(self, other: Codomain) -> Codomain {
        if self == Codomain::Real && other == Codomain::Real {
            Codomain::Real
        } else {
            Codomain::Complex
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Unary {
    Neg,
    Func(Func),
    Powi(i32),
    Conj,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op2 {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone)]
enum Node {
    Const(C64),
    Expr(Arc<ExprAst>),
    Grid(Arc<Grid>),
    GridDeriv(Arc<Grid>),
    Native(Arc<NativeFn>),
    Unary(Unary, TimeFn),
    Binary(Op2, TimeFn, TimeFn),
    Antideriv(Arc<Antideriv>),
    FiniteDiff(TimeFn),
}

struct Antideriv {
    integrand: TimeFn,
    nodes: Vec<f64>,
    cumulative: Vec<C64>,
    tol: f64,
}

struct Inner {
    node: Node,
    domain: Option<(f64, f64)>,
    period: Option<f64>,
    codomain: Codomain,
    analytic: Option<TimeFn>,
    dcache: OnceLock<TimeFn>,
}

/// Immutable, cheaply clonable scalar function of time.
#[derive(Clone)]
pub struct TimeFn {
    inner: Arc<Inner>,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn intersect(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> Option<(f64, f64)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some((a0, a1)), Some((b0, b1))) => Some((a0.max(b0), a1.min(b1))),
    }
}

/// Default finite-difference step.
pub fn default_step(t: f64) -> f64 {
    1e-5_f64.max(1e-5 * t.abs())
}

impl TimeFn {
    fn from_node(node: Node, domain: Option<(f64, f64)>, codomain: Codomain) -> TimeFn {
        TimeFn {
            inner: Arc::new(Inner {
                node,
                domain,
                period: None,
                codomain,
                analytic: None,
                dcache: OnceLock::new(),
            }),
        }
    }

    fn rebuild(&self, f: impl FnOnce(&mut Inner)) -> TimeFn {
        let mut inner = Inner {
            node: self.inner.node.clone(),
            domain: self.inner.domain,
            period: self.inner.period,
            codomain: self.inner.codomain,
            analytic: self.inner.analytic.clone(),
            dcache: OnceLock::new(),
        };
        f(&mut inner);
        TimeFn { inner: Arc::new(inner) }
    }

    pub fn constant(v: f64) -> TimeFn {
        TimeFn::from_node(Node::Const(c(v)), None, Codomain::Real)
    }

    pub fn constant_c(v: C64) -> TimeFn {
        let cd = if v.im == 0.0 { Codomain::Real } else { Codomain::Complex };
        TimeFn::from_node(Node::Const(v), None, cd)
    }

    pub fn zero() -> TimeFn {
        TimeFn::constant(0.0)
    }

    pub fn one() -> TimeFn {
        TimeFn::constant(1.0)
    }

    /// The identity function `t`.
    pub fn t() -> TimeFn {
        TimeFn::from_expr(ExprAst::Var)
    }

    pub fn from_expr(ast: ExprAst) -> TimeFn {
        match ast {
            ExprAst::Const(v) => TimeFn::constant(v),
            other => TimeFn::from_node(Node::Expr(Arc::new(other)), None, Codomain::Real),
        }
    }

    pub fn parse(src: &str) -> Result<TimeFn> {
        parse_expr(src).map(TimeFn::from_expr)
    }

    /// Wrap a closure. No derivative is known unless attached with
    /// [`TimeFn::with_derivative`].
    pub fn native(codomain: Codomain, f: impl Fn(f64) -> Result<C64> + Send + Sync + 'static) -> TimeFn {
        TimeFn::from_node(Node::Native(Arc::new(f)), None, codomain)
    }

    /// Real closure convenience wrapper.
    pub fn native_real(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TimeFn {
        TimeFn::native(Codomain::Real, move |t| Ok(c(f(t))))
    }

    pub fn grid(times: Vec<f64>, values: Vec<C64>, interp: Interp) -> Result<TimeFn> {
        let g = Grid::new(times, values, interp)?;
        let cd = if g.is_real() { Codomain::Real } else { Codomain::Complex };
        let span = g.span();
        Ok(TimeFn::from_node(Node::Grid(Arc::new(g)), Some(span), cd))
    }

    /// Sample `f` at `times` and interpolate.
    pub fn sampled(f: &TimeFn, times: Vec<f64>, interp: Interp) -> Result<TimeFn> {
        let values = times.iter().map(|&t| f.eval(t)).collect::<Result<Vec<_>>>()?;
        TimeFn::grid(times, values, interp)
    }

    /// Restrict evaluation to `[lo, hi]`.
    pub fn with_domain(&self, lo: f64, hi: f64) -> TimeFn {
        self.rebuild(|i| {
            i.domain = intersect(i.domain, Some((lo, hi)));
            if let Some(d) = &i.analytic {
                i.analytic = Some(d.with_domain(lo, hi));
            }
        })
    }

    /// Remove any domain restriction.
    pub fn unrestricted(&self) -> TimeFn {
        self.rebuild(|i| i.domain = None)
    }

    /// Attach an exact derivative.
    pub fn with_derivative(&self, d: TimeFn) -> TimeFn {
        self.rebuild(|i| i.analytic = Some(d))
    }

    /// Declare a period, checked on a probe grid. The tolerance admits a
    /// period typed to about ten significant digits.
    pub fn with_period(&self, period: f64) -> Result<TimeFn> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(LtvError::Invalid(format!("period must be positive, got {period}")));
        }
        let (lo, hi) = match self.domain() {
            Some((lo, hi)) => (lo, hi - period),
            None => (0.0, period),
        };
        if hi >= lo {
            for k in 0..PERIOD_PROBES {
                let t = lo + (hi - lo) * k as f64 / (PERIOD_PROBES - 1) as f64;
                let (Ok(a), Ok(b)) = (self.eval(t), self.eval(t + period)) else {
                    continue;
                };
                let dev = (b - a).norm();
                if dev > PERIOD_TOL * (1.0 + a.norm()) {
                    return Err(LtvError::NotPeriodic {
                        what: self.to_string(),
                        period,
                        t,
                        deviation: dev,
                    });
                }
            }
        } else {
            log::debug!("domain shorter than declared period {period}; periodicity unchecked");
        }
        Ok(self.rebuild(|i| i.period = Some(period)))
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        self.inner.domain
    }

    pub fn period(&self) -> Option<f64> {
        self.inner.period
    }

    pub fn codomain(&self) -> Codomain {
        self.inner.codomain
    }

    pub fn is_real(&self) -> bool {
        self.inner.codomain == Codomain::Real
    }

    pub fn as_const(&self) -> Option<C64> {
        match &self.inner.node {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_expr(&self) -> Option<ExprAst> {
        match &self.inner.node {
            Node::Const(v) if v.im == 0.0 => Some(ExprAst::Const(v.re)),
            Node::Expr(e) => Some((**e).clone()),
            _ => None,
        }
    }

    /// True when a derivative is available without finite differences.
    pub fn has_exact_derivative(&self) -> bool {
        if self.inner.analytic.is_some() {
            return true;
        }
        match &self.inner.node {
            Node::Const(_) | Node::Expr(_) | Node::Grid(_) | Node::Antideriv(_) => true,
            Node::Native(_) | Node::GridDeriv(_) | Node::FiniteDiff(_) => false,
            Node::Unary(_, a) => a.has_exact_derivative(),
            Node::Binary(_, a, b) => a.has_exact_derivative() && b.has_exact_derivative(),
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if t.is_nan() {
            return Err(LtvError::NonFinite { t, what: "time argument".into() });
        }
        if let Some((lo, hi)) = self.inner.domain {
            let slack = DOMAIN_SLACK * (1.0 + lo.abs().max(hi.abs()));
            if t < lo - slack || t > hi + slack {
                return Err(LtvError::Domain { t, lo, hi });
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<C64> {
        self.check_domain(t)?;
        let v = self.eval_node(t)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(LtvError::NonFinite { t, what: self.to_string() });
        }
        Ok(v)
    }

    /// Real part of [`TimeFn::eval`].
    pub fn eval_re(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|v| v.re)
    }

    fn eval_node(&self, t: f64) -> Result<C64> {
        match &self.inner.node {
            Node::Const(v) => Ok(*v),
            Node::Expr(e) => e.eval(t).map(c),
            Node::Grid(g) => g.eval(t),
            Node::GridDeriv(g) => g.deriv(t),
            Node::Native(f) => f(t),
            Node::Unary(op, a) => {
                let x = a.eval(t)?;
                match op {
                    Unary::Neg => Ok(-x),
                    Unary::Conj => Ok(x.conj()),
                    Unary::Powi(n) => Ok(x.powi(*n)),
                    Unary::Func(f) => {
                        if a.is_real() {
                            f.apply(x.re).map(c).ok_or_else(|| LtvError::NonFinite {
                                t,
                                what: format!("{}({})", f.name(), x.re),
                            })
                        } else {
                            apply_complex(*f, x, t)
                        }
                    }
                }
            }
            Node::Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                Ok(match op {
                    Op2::Add => x + y,
                    Op2::Sub => x - y,
                    Op2::Mul => x * y,
                    Op2::Div => {
                        if y == c(0.0) {
                            return Err(LtvError::NonFinite { t, what: "division by zero".into() });
                        }
                        x / y
                    }
                })
            }
            Node::Antideriv(ad) => ad.eval(t),
            Node::FiniteDiff(f) => f.fd_derivative(t, default_step(t)),
        }
    }

    /// Fourth-order finite difference with step `h`: central in the interior,
    /// one-sided within `2h` of a domain endpoint.
    pub fn fd_derivative(&self, t: f64, h: f64) -> Result<C64> {
        self.check_domain(t)?;
        let mut h = h;
        if let Some((lo, hi)) = self.inner.domain {
            h = h.min((hi - lo) / 8.0);
            if t - 2.0 * h < lo {
                return self.one_sided(t, h);
            }
            if t + 2.0 * h > hi {
                return self.one_sided(t, -h);
            }
        }
        let f = |s: f64| self.eval(t + s * h);
        let d = (f(-2.0)? - f(2.0)? + (f(1.0)? - f(-1.0)?) * 8.0) / (12.0 * h);
        Ok(d)
    }

    fn one_sided(&self, t: f64, h: f64) -> Result<C64> {
        let f = |k: f64| self.eval(t + k * h);
        let d = (f(0.0)? * -25.0 + f(1.0)? * 48.0 - f(2.0)? * 36.0 + f(3.0)? * 16.0 - f(4.0)? * 3.0)
            / (12.0 * h);
        Ok(d)
    }

    /// Derivative at `t`: exact when available, otherwise finite differences
    /// with step `h` (default [`default_step`]).
    pub fn derivative(&self, t: f64, h: Option<f64>) -> Result<C64> {
        let d = self.derivative_fn();
        if let (Node::FiniteDiff(f), Some(h)) = (&d.inner.node, h) {
            return f.fd_derivative(t, h);
        }
        d.eval(t)
    }

    /// The derivative as a function, built by the chain rule where possible.
    pub fn derivative_fn(&self) -> TimeFn {
        if let Some(d) = &self.inner.analytic {
            return d.clone();
        }
        self.inner.dcache.get_or_init(|| self.build_derivative()).clone()
    }

    fn build_derivative(&self) -> TimeFn {
        let dom = self.inner.domain;
        let fd = || TimeFn::from_node(Node::FiniteDiff(self.clone()), dom, self.codomain());
        let d = match &self.inner.node {
            Node::Const(_) => TimeFn::zero(),
            Node::Expr(e) => TimeFn::from_expr(e.derivative()),
            Node::Grid(g) => TimeFn::from_node(Node::GridDeriv(g.clone()), dom, self.codomain()),
            Node::GridDeriv(_) | Node::Native(_) | Node::FiniteDiff(_) => fd(),
            Node::Antideriv(ad) => ad.integrand.clone(),
            Node::Unary(op, a) => {
                let da = a.derivative_fn();
                match op {
                    Unary::Neg => -&da,
                    Unary::Conj => da.conj(),
                    Unary::Powi(n) => &(&a.powi(n - 1) * (*n as f64)) * &da,
                    Unary::Func(f) => &func_derivative(*f, a) * &da,
                }
            }
            Node::Binary(op, a, b) => {
                let (da, db) = (a.derivative_fn(), b.derivative_fn());
                match op {
                    Op2::Add => &da + &db,
                    Op2::Sub => &da - &db,
                    Op2::Mul => &(&da * b) + &(a * &db),
                    Op2::Div => &(&(&da * b) - &(a * &db)) / &b.powi(2),
                }
            }
        };
        match dom {
            Some((lo, hi)) => d.with_domain(lo, hi),
            None => d,
        }
    }

    /// Adaptive quadrature over `[t0, t1]`; returns value and error estimate.
    pub fn integrate(&self, t0: f64, t1: f64, tol: f64) -> Result<(C64, f64)> {
        let r = quad::integrate(|t| self.eval(t), t0, t1, tol)?;
        Ok((r.value, r.error))
    }

    /// Cumulative integral anchored at `grid[0]`, evaluated between nodes by
    /// quadrature from the nearest node.
    pub fn antiderivative_on_grid(&self, grid: &[f64]) -> Result<TimeFn> {
        if grid.len() < 4 {
            return Err(LtvError::Invalid("antiderivative grid needs at least 4 points".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LtvError::Invalid("antiderivative grid must be strictly increasing".into()));
        }
        let (g0, g1) = (grid[0], grid[grid.len() - 1]);
        self.check_domain(g0)?;
        self.check_domain(g1)?;
        let integrand = self.with_domain(g0, g1);
        if let Some(v) = self.as_const() {
            let lin = &(&TimeFn::t() - g0) * &TimeFn::constant_c(v);
            return Ok(lin.with_domain(g0, g1).with_derivative(integrand));
        }
        let tol = 1e-12;
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = c(0.0);
        cumulative.push(acc);
        for w in grid.windows(2) {
            acc += quad::integrate(|t| integrand.eval(t), w[0], w[1], tol)?.value;
            cumulative.push(acc);
        }
        let ad = Antideriv { integrand: integrand.clone(), nodes: grid.to_vec(), cumulative, tol };
        Ok(TimeFn::from_node(Node::Antideriv(Arc::new(ad)), Some((g0, g1)), self.codomain()))
    }

    /// Uniform antiderivative grid of `n` points over the domain.
    pub fn antiderivative(&self, n: usize) -> Result<TimeFn> {
        let (lo, hi) = self
            .domain()
            .ok_or_else(|| LtvError::Invalid("antiderivative needs a bounded domain".into()))?;
        self.antiderivative_on_grid(&linspace(lo, hi, n.max(4)))
    }

    pub fn apply(&self, f: Func) -> TimeFn {
        if let Some(e) = self.as_expr() {
            return TimeFn::from_expr(ExprAst::call(f, e)).restrict(self.domain());
        }
        TimeFn::from_node(Node::Unary(Unary::Func(f), self.clone()), self.domain(), self.codomain())
    }

    pub fn powi(&self, n: i32) -> TimeFn {
        if n == 1 {
            return self.clone();
        }
        if let Some(e) = self.as_expr() {
            return TimeFn::from_expr(ExprAst::pow(e, ExprAst::Const(n as f64))).restrict(self.domain());
        }
        if let Some(v) = self.as_const() {
            return TimeFn::constant_c(v.powi(n));
        }
        TimeFn::from_node(Node::Unary(Unary::Powi(n), self.clone()), self.domain(), self.codomain())
    }

    pub fn conj(&self) -> TimeFn {
        if self.is_real() {
            return self.clone();
        }
        TimeFn::from_node(Node::Unary(Unary::Conj, self.clone()), self.domain(), self.codomain())
    }

    pub fn re(&self) -> TimeFn {
        if self.is_real() {
            return self.clone();
        }
        let f = self.clone();
        let d = self.derivative_fn();
        TimeFn::native(Codomain::Real, move |t| Ok(c(f.eval(t)?.re)))
            .restrict(self.domain())
            .with_derivative(TimeFn::native(Codomain::Real, move |t| Ok(c(d.eval(t)?.re))))
    }

    fn restrict(self, dom: Option<(f64, f64)>) -> TimeFn {
        match dom {
            Some((lo, hi)) => self.with_domain(lo, hi),
            None => self,
        }
    }

    fn binary(op: Op2, a: &TimeFn, b: &TimeFn) -> TimeFn {
        let dom = intersect(a.domain(), b.domain());
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let v = match op {
                Op2::Add => x + y,
                Op2::Sub => x - y,
                Op2::Mul => x * y,
                Op2::Div => x / y,
            };
            return TimeFn::constant_c(v).restrict(dom);
        }
        if let (Some(x), Some(y)) = (a.as_expr(), b.as_expr()) {
            let e = match op {
                Op2::Add => ExprAst::add(x, y),
                Op2::Sub => ExprAst::sub(x, y),
                Op2::Mul => ExprAst::mul(x, y),
                Op2::Div => ExprAst::div(x, y),
            };
            return TimeFn::from_expr(e).restrict(dom);
        }
        let is = |f: &TimeFn, v: f64| f.as_const() == Some(c(v));
        match op {
            Op2::Add if is(a, 0.0) => return b.clone().restrict(dom),
            Op2::Add | Op2::Sub if is(b, 0.0) => return a.clone().restrict(dom),
            Op2::Mul if is(a, 0.0) || is(b, 0.0) => return TimeFn::zero().restrict(dom),
            Op2::Mul if is(a, 1.0) => return b.clone().restrict(dom),
            Op2::Mul | Op2::Div if is(b, 1.0) => return a.clone().restrict(dom),
            _ => {}
        }
        let cd = a.codomain().join(b.codomain());
        TimeFn::from_node(Node::Binary(op, a.clone(), b.clone()), dom, cd)
    }
}

fn apply_complex(f: Func, z: C64, t: f64) -> Result<C64> {
    let pole = |what: &str| LtvError::NonFinite { t, what: format!("{what}({z})") };
    let v = match f {
        Func::Sin => z.sin(),
        Func::Cos => z.cos(),
        Func::Tan => {
            if z.cos().norm() <= 1e-14 {
                return Err(pole("tan"));
            }
            z.tan()
        }
        Func::Cot => {
            if z.sin().norm() <= 1e-14 {
                return Err(pole("cot"));
            }
            z.cos() / z.sin()
        }
        Func::Tanh => z.tanh(),
        Func::Coth => z.cosh() / z.sinh(),
        Func::Exp => z.exp(),
        Func::Ln => z.ln(),
        Func::Sqrt => z.sqrt(),
        Func::Abs => c(z.norm()),
    };
    Ok(v)
}

fn func_derivative(f: Func, a: &TimeFn) -> TimeFn {
    let one = TimeFn::one();
    match f {
        Func::Sin => a.apply(Func::Cos),
        Func::Cos => -&a.apply(Func::Sin),
        Func::Tan => &one + &a.apply(Func::Tan).powi(2),
        Func::Cot => -&(&one + &a.apply(Func::Cot).powi(2)),
        Func::Tanh => &one - &a.apply(Func::Tanh).powi(2),
        Func::Coth => &one - &a.apply(Func::Coth).powi(2),
        Func::Exp => a.apply(Func::Exp),
        Func::Ln => &one / a,
        Func::Sqrt => &one / &(&a.apply(Func::Sqrt) * 2.0),
        Func::Abs => a / &a.apply(Func::Abs),
    }
}

impl Antideriv {
    fn eval(&self, t: f64) -> Result<C64> {
        let k = self.nodes.partition_point(|&x| x <= t);
        let k = if k == 0 {
            0
        } else if k == self.nodes.len() || t - self.nodes[k - 1] <= self.nodes[k] - t {
            k - 1
        } else {
            k
        };
        let tail = quad::integrate(|s| self.integrand.eval(s), self.nodes[k], t, self.tol)?.value;
        Ok(self.cumulative[k] + tail)
    }
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

macro_rules! impl_binop {
    ($tr:ident, $m:ident, $op:expr) => {
        impl $tr<&TimeFn> for &TimeFn {
            type Output = TimeFn;
            fn $m(self, rhs: &TimeFn) -> TimeFn {
                TimeFn::binary($op, self, rhs)
            }
        }
        impl $tr<TimeFn> for TimeFn {
            type Output = TimeFn;
            fn $m(self, rhs: TimeFn) -> TimeFn {
                TimeFn::binary($op, &self, &rhs)
            }
        }
        impl $tr<f64> for &TimeFn {
            type Output = TimeFn;
            fn $m(self, rhs: f64) -> TimeFn {
                TimeFn::binary($op, self, &TimeFn::constant(rhs))
            }
        }
        impl $tr<C64> for &TimeFn {
            type Output = TimeFn;
            fn $m(self, rhs: C64) -> TimeFn {
                TimeFn::binary($op, self, &TimeFn::constant_c(rhs))
            }
        }
    };
}

impl_binop!(Add, add, Op2::Add);
impl_binop!(Sub, sub, Op2::Sub);
impl_binop!(Mul, mul, Op2::Mul);
impl_binop!(Div, div, Op2::Div);

impl Neg for &TimeFn {
    type Output = TimeFn;
    fn neg(self) -> TimeFn {
        if let Some(v) = self.as_const() {
            return TimeFn::constant_c(-v).restrict(self.domain());
        }
        if let Some(e) = self.as_expr() {
            return TimeFn::from_expr(ExprAst::neg(e)).restrict(self.domain());
        }
        TimeFn::from_node(Node::Unary(Unary::Neg, self.clone()), self.domain(), self.codomain())
    }
}

impl Neg for TimeFn {
    type Output = TimeFn;
    fn neg(self) -> TimeFn {
        -&self
    }
}

impl fmt::Display for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner.node {
            Node::Const(v) if v.im == 0.0 => write!(f, "{:?}", v.re),
            Node::Const(v) => write!(f, "({} + {}j)", v.re, v.im),
            Node::Expr(e) => write!(f, "{e}"),
            Node::Grid(g) => write!(f, "grid[{} samples]", g.times().len()),
            Node::GridDeriv(g) => write!(f, "d/dt grid[{} samples]", g.times().len()),
            Node::Native(_) => f.write_str("native"),
            Node::Unary(Unary::Neg, a) => write!(f, "-({a})"),
            Node::Unary(Unary::Conj, a) => write!(f, "conj({a})"),
            Node::Unary(Unary::Powi(n), a) => write!(f, "({a})^{n}"),
            Node::Unary(Unary::Func(func), a) => write!(f, "{}({a})", func.name()),
            Node::Binary(op, a, b) => {
                let s = match op {
                    Op2::Add => "+",
                    Op2::Sub => "-",
                    Op2::Mul => "*",
                    Op2::Div => "/",
                };
                write!(f, "({a}) {s} ({b})")
            }
            Node::Antideriv(ad) => write!(f, "integral of {}", ad.integrand),
            Node::FiniteDiff(a) => write!(f, "d/dt {a}"),
        }
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeFn({self}")?;
        if let Some((lo, hi)) = self.domain() {
            write!(f, " on [{lo}, {hi}]")?;
        }
        if let Some(p) = self.period() {
            write!(f, ", period {p}")?;
        }
        f.write_str(")")
    }
}
