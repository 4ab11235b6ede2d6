//! Second-order state-space systems `x' = A(t) x + u(t)` and their gauge
//! transformations.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{LtvError, Result};
use crate::timefn::{linspace, Codomain, TimeFn};
use crate::C64;

/// Minimum admissible |a12| on the probe grid.
pub const EPS_A12: f64 = 1e-9;

/// Default number of probe points for invariant checks.
pub const PROBE_POINTS: usize = 256;

/// 2×2 matrix of time functions.
#[derive(Clone, Debug)]
pub struct FnMatrix(pub [[TimeFn; 2]; 2]);

impl FnMatrix {
    pub fn new(a11: TimeFn, a12: TimeFn, a21: TimeFn, a22: TimeFn) -> Self {
        FnMatrix([[a11, a12], [a21, a22]])
    }

    pub fn parse(src: [[&str; 2]; 2]) -> Result<Self> {
        Ok(FnMatrix::new(
            TimeFn::parse(src[0][0])?,
            TimeFn::parse(src[0][1])?,
            TimeFn::parse(src[1][0])?,
            TimeFn::parse(src[1][1])?,
        ))
    }

    pub fn identity() -> Self {
        FnMatrix::new(TimeFn::one(), TimeFn::zero(), TimeFn::zero(), TimeFn::one())
    }

    pub fn constant(m: Matrix2<C64>) -> Self {
        FnMatrix::new(
            TimeFn::constant_c(m[(0, 0)]),
            TimeFn::constant_c(m[(0, 1)]),
            TimeFn::constant_c(m[(1, 0)]),
            TimeFn::constant_c(m[(1, 1)]),
        )
    }

    pub fn diag(a: TimeFn, b: TimeFn) -> Self {
        FnMatrix::new(a, TimeFn::zero(), TimeFn::zero(), b)
    }

    pub fn get(&self, i: usize, j: usize) -> &TimeFn {
        &self.0[i][j]
    }

    pub fn eval(&self, t: f64) -> Result<Matrix2<C64>> {
        let m = &self.0;
        Ok(Matrix2::new(m[0][0].eval(t)?, m[0][1].eval(t)?, m[1][0].eval(t)?, m[1][1].eval(t)?))
    }

    pub fn map(&self, f: impl Fn(&TimeFn) -> TimeFn) -> FnMatrix {
        let m = &self.0;
        FnMatrix::new(f(&m[0][0]), f(&m[0][1]), f(&m[1][0]), f(&m[1][1]))
    }

    pub fn with_domain(&self, lo: f64, hi: f64) -> FnMatrix {
        self.map(|f| f.with_domain(lo, hi))
    }

    pub fn derivative(&self) -> FnMatrix {
        self.map(TimeFn::derivative_fn)
    }

    pub fn mul(&self, o: &FnMatrix) -> FnMatrix {
        let (a, b) = (&self.0, &o.0);
        let e = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        FnMatrix::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn add(&self, o: &FnMatrix) -> FnMatrix {
        let (a, b) = (&self.0, &o.0);
        FnMatrix::new(&a[0][0] + &b[0][0], &a[0][1] + &b[0][1], &a[1][0] + &b[1][0], &a[1][1] + &b[1][1])
    }

    pub fn det(&self) -> TimeFn {
        let m = &self.0;
        &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0])
    }

    pub fn inverse(&self) -> FnMatrix {
        let m = &self.0;
        let det = self.det();
        FnMatrix::new(&m[1][1] / &det, -&(&m[0][1] / &det), -&(&m[1][0] / &det), &m[0][0] / &det)
    }

    pub fn mul_vec(&self, v: &[TimeFn; 2]) -> [TimeFn; 2] {
        let m = &self.0;
        [&(&m[0][0] * &v[0]) + &(&m[0][1] * &v[1]), &(&m[1][0] * &v[0]) + &(&m[1][1] * &v[1])]
    }

    fn all_expr(&self) -> bool {
        self.0.iter().flatten().all(|f| f.as_expr().is_some())
    }
}

/// Pointwise gauge action `M A M^-1 + M' M^-1`.
pub fn gauge_action(a: &Matrix2<C64>, m: &Matrix2<C64>, mdot: &Matrix2<C64>, t: f64) -> Result<Matrix2<C64>> {
    let inv = m.try_inverse().ok_or(LtvError::SingularGauge { t })?;
    Ok(m * a * inv + mdot * inv)
}

#[derive(Clone)]
enum Repr {
    Entries,
    Gauge { parent: Arc<Ltv2System>, m: FnMatrix, mdot: FnMatrix },
}

/// The system `x' = A(t) x + u(t)` on a closed interval.
#[derive(Clone)]
pub struct Ltv2System {
    a: FnMatrix,
    raw: FnMatrix,
    u: [TimeFn; 2],
    domain: (f64, f64),
    period: Option<f64>,
    repr: Repr,
}

impl fmt::Debug for Ltv2System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.a.0;
        write!(
            f,
            "Ltv2System([[{}, {}], [{}, {}]] on [{}, {}]",
            m[0][0], m[0][1], m[1][0], m[1][1], self.domain.0, self.domain.1
        )?;
        if let Some(p) = self.period {
            write!(f, ", period {p}")?;
        }
        f.write_str(")")
    }
}

impl Ltv2System {
    /// Build and validate: entries finite and |a12| >= [`EPS_A12`] on the probe grid.
    pub fn new(a: FnMatrix, u: [TimeFn; 2], domain: (f64, f64), period: Option<f64>) -> Result<Self> {
        let sys = Ltv2System::unchecked(a, u, domain, period)?;
        for t in sys.probe_grid() {
            let m = sys.state_matrix(t)?;
            let a12 = m[(0, 1)].norm();
            if a12 < EPS_A12 {
                return Err(LtvError::SmallA12 { t, value: a12, eps: EPS_A12 });
            }
            sys.input_at(t)?;
        }
        Ok(sys)
    }

    /// Build without the |a12| check (used for transformed systems).
    pub(crate) fn unchecked(a: FnMatrix, u: [TimeFn; 2], domain: (f64, f64), period: Option<f64>) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(LtvError::Invalid(format!("domain [{lo}, {hi}] must satisfy t0 < t1")));
        }
        let raw = a.clone();
        let mut a = a.with_domain(lo, hi);
        let mut u = [u[0].with_domain(lo, hi), u[1].with_domain(lo, hi)];
        if let Some(p) = period {
            let names = ["a11", "a12", "a21", "a22", "u1", "u2"];
            for (f, name) in a.0.iter_mut().flatten().chain(u.iter_mut()).zip(names) {
                *f = f.with_period(p).map_err(|e| e.named(name))?;
            }
        }
        Ok(Ltv2System { a, raw, u, domain, period, repr: Repr::Entries })
    }

    pub fn homogeneous(a: FnMatrix, domain: (f64, f64), period: Option<f64>) -> Result<Self> {
        Ltv2System::new(a, [TimeFn::zero(), TimeFn::zero()], domain, period)
    }

    /// Companion form of `y'' + r1 y' + r0 y = u`; state 1 is `y`.
    pub fn from_companion(r0: &TimeFn, r1: &TimeFn, u: &TimeFn, domain: (f64, f64)) -> Result<Self> {
        let a = FnMatrix::new(TimeFn::zero(), TimeFn::one(), -r0, -r1);
        Ltv2System::new(a, [TimeFn::zero(), u.clone()], domain, None)
    }

    pub fn entries(&self) -> &FnMatrix {
        &self.a
    }

    pub fn input(&self) -> &[TimeFn; 2] {
        &self.u
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.domain;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        t >= lo - slack && t <= hi + slack
    }

    pub fn is_homogeneous(&self) -> bool {
        match &self.repr {
            Repr::Entries => self.u.iter().all(|f| f.as_const() == Some(C64::new(0.0, 0.0))),
            Repr::Gauge { parent, .. } => parent.is_homogeneous(),
        }
    }

    pub fn probe_grid(&self) -> Vec<f64> {
        linspace(self.domain.0, self.domain.1, PROBE_POINTS)
    }

    pub fn state_matrix(&self, t: f64) -> Result<Matrix2<C64>> {
        match &self.repr {
            Repr::Entries => self.a.eval(t),
            Repr::Gauge { parent, m, mdot } => {
                if !self.contains(t) {
                    return Err(LtvError::Domain { t, lo: self.domain.0, hi: self.domain.1 });
                }
                gauge_action(&parent.state_matrix(t)?, &m.eval(t)?, &mdot.eval(t)?, t)
            }
        }
    }

    /// Entries evaluated without the domain restriction; used to diagnose
    /// reference times outside the working interval.
    pub fn raw_state_matrix(&self, t: f64) -> Result<Matrix2<C64>> {
        match &self.repr {
            Repr::Entries => self.raw.eval(t),
            Repr::Gauge { .. } => self.state_matrix(t),
        }
    }

    pub fn input_at(&self, t: f64) -> Result<Vector2<C64>> {
        match &self.repr {
            Repr::Entries => Ok(Vector2::new(self.u[0].eval(t)?, self.u[1].eval(t)?)),
            Repr::Gauge { parent, m, .. } => Ok(m.eval(t)? * parent.input_at(t)?),
        }
    }

    pub fn trace(&self) -> TimeFn {
        &self.a.0[0][0] + &self.a.0[1][1]
    }

    /// Roots of `mu^2 - tr A mu + det A` at `t`, larger real part first.
    pub fn frozen_eigenvalues(&self, t: f64) -> Result<(C64, C64)> {
        let a = self.state_matrix(t)?;
        let tr = a[(0, 0)] + a[(1, 1)];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let disc = (tr * tr * 0.25 - det).sqrt();
        let (m1, m2) = (tr * 0.5 + disc, tr * 0.5 - disc);
        if m1.re > m2.re || (m1.re == m2.re && m1.im >= m2.im) {
            Ok((m1, m2))
        } else {
            Ok((m2, m1))
        }
    }

    /// Reduce to modulation form.
    pub fn modulation_form(&self) -> Result<ModulationForm> {
        let [[a11, a12], [a21, a22]] = &self.a.0;
        for t in self.probe_grid() {
            let v = a12.eval(t)?.norm();
            if v < EPS_A12 {
                return Err(LtvError::SmallA12 { t, value: v, eps: EPS_A12 });
            }
        }
        let sigma0 = &(a11 + a22) * 0.5;
        let alpha = &(a11 - a22) / &(a12 * 2.0);
        let alpha_dot = alpha.derivative_fn();
        let omega02 = &(a21 + &(a12 * &alpha.powi(2))) + &alpha_dot;
        let eta = &sigma0 / a12;
        Ok(ModulationForm {
            sigma0,
            omega01: a12.clone(),
            omega02,
            alpha,
            eta,
            domain: self.domain,
            period: self.period,
        })
    }

    /// Gauge transformation `A -> M A M^-1 + M' M^-1`, input `u -> M u`.
    pub fn apply_gauge(&self, gauge: &GaugeMatrix) -> Result<Ltv2System> {
        let (lo, hi) = self.domain;
        let m = gauge.m.with_domain(lo, hi);
        for t in self.probe_grid() {
            let det = m.eval(t)?.determinant();
            if !(det.norm() > 1e-14) {
                return Err(LtvError::SingularGauge { t });
            }
        }
        let mdot = m.derivative();
        if matches!(self.repr, Repr::Entries) && self.a.all_expr() && m.all_expr() && self.u.iter().all(|f| f.as_expr().is_some()) {
            let inv = m.inverse();
            let a = m.mul(&self.a).mul(&inv).add(&mdot.mul(&inv));
            let u = m.mul_vec(&self.u);
            let mut out = Ltv2System::unchecked(a, u, self.domain, None)?;
            out.period = self.period;
            return Ok(out);
        }
        let parent = Arc::new(self.clone());
        let entry = |i: usize, j: usize| {
            let (p, m, md) = (parent.clone(), m.clone(), mdot.clone());
            let cd = if self.a.0.iter().flatten().chain(m.0.iter().flatten()).all(TimeFn::is_real) {
                Codomain::Real
            } else {
                Codomain::Complex
            };
            TimeFn::native(cd, move |t| {
                Ok(gauge_action(&p.state_matrix(t)?, &m.eval(t)?, &md.eval(t)?, t)?[(i, j)])
            })
            .with_domain(lo, hi)
        };
        let input = |i: usize| {
            let (p, m) = (parent.clone(), m.clone());
            TimeFn::native(Codomain::Complex, move |t| Ok((m.eval(t)? * p.input_at(t)?)[i])).with_domain(lo, hi)
        };
        let a = FnMatrix::new(entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1));
        Ok(Ltv2System {
            raw: a.clone(),
            a,
            u: [input(0), input(1)],
            domain: self.domain,
            period: self.period,
            repr: Repr::Gauge { parent, m, mdot },
        })
    }
}

/// Reduced parameters of the modulation form.
#[derive(Clone, Debug)]
pub struct ModulationForm {
    pub sigma0: TimeFn,
    pub omega01: TimeFn,
    pub omega02: TimeFn,
    pub alpha: TimeFn,
    pub eta: TimeFn,
    pub domain: (f64, f64),
    pub period: Option<f64>,
}

impl ModulationForm {
    /// `A0 = [[sigma0, omega01], [omega02, sigma0]]`.
    pub fn a0(&self) -> FnMatrix {
        FnMatrix::new(self.sigma0.clone(), self.omega01.clone(), self.omega02.clone(), self.sigma0.clone())
    }

    pub fn probe_grid(&self) -> Vec<f64> {
        linspace(self.domain.0, self.domain.1, PROBE_POINTS)
    }

    /// `(sigma0, omega01, omega02)` when all three are constant within `tol`
    /// (relative) on the probe grid.
    pub fn constant_values(&self, tol: f64) -> Result<Option<[C64; 3]>> {
        let fs = [&self.sigma0, &self.omega01, &self.omega02];
        let t0 = self.domain.0;
        let base = [fs[0].eval(t0)?, fs[1].eval(t0)?, fs[2].eval(t0)?];
        for t in self.probe_grid() {
            for (f, b) in fs.iter().zip(base.iter()) {
                if (f.eval(t)? - b).norm() > tol * (1.0 + b.norm()) {
                    return Ok(None);
                }
            }
        }
        Ok(Some(base))
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.domain;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        t >= lo - slack && t <= hi + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeKind {
    M0,
    P,
    D,
    Mfd,
    MD,
    General,
}

/// Nonsingular time-dependent change of state coordinates.
#[derive(Clone, Debug)]
pub struct GaugeMatrix {
    pub m: FnMatrix,
    pub kind: GaugeKind,
}

impl GaugeMatrix {
    pub fn new(m: FnMatrix, kind: GaugeKind) -> Self {
        GaugeMatrix { m, kind }
    }

    pub fn identity() -> Self {
        GaugeMatrix::new(FnMatrix::identity(), GaugeKind::General)
    }

    /// `M0 = [[1, 0], [alpha, 1]]`.
    pub fn m0(mf: &ModulationForm) -> Self {
        GaugeMatrix::new(
            FnMatrix::new(TimeFn::one(), TimeFn::zero(), mf.alpha.clone(), TimeFn::one()),
            GaugeKind::M0,
        )
    }

    /// `D = [[1, 1], [1, -1]]`.
    pub fn d() -> Self {
        GaugeMatrix::new(
            FnMatrix::new(TimeFn::one(), TimeFn::one(), TimeFn::one(), TimeFn::constant(-1.0)),
            GaugeKind::D,
        )
    }

    /// Product `self * other` (apply `other` first).
    pub fn compose(&self, other: &GaugeMatrix) -> GaugeMatrix {
        GaugeMatrix::new(self.m.mul(&other.m), GaugeKind::General)
    }
}
