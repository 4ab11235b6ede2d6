//! Solutions of the Riccati characteristic equation `v' = -omega01 v^2 + omega02`.

pub mod core_factor;
pub mod projective;

use std::fmt;
use std::sync::Arc;

use crate::error::{LtvError, Result};
use crate::system::ModulationForm;
use crate::timefn::{default_step, linspace, Codomain, TimeFn};
use crate::C64;

pub use core_factor::{ClosedFormCore, CoreFactor, CoreSample, POLE_EPS};
pub use projective::ProjectiveTrajectory;

/// Tolerance of the LTI detection on the probe grid.
pub const LTI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntrinsicKind {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Tanh,
    Coth,
    Tan,
    Cot,
    PrimitivePlus,
    PrimitiveMinus,
    /// Numerically integrated trajectory with no closed form.
    Integrated,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Tanh => "tanh",
            FamilyKind::Coth => "coth",
            FamilyKind::Tan => "tan",
            FamilyKind::Cot => "cot",
            FamilyKind::PrimitivePlus => "primitive_plus",
            FamilyKind::PrimitiveMinus => "primitive_minus",
            FamilyKind::Integrated => "integrated",
        }
    }

    pub fn is_compatible(self, intrinsic: IntrinsicKind) -> bool {
        match self {
            FamilyKind::Tanh | FamilyKind::Coth => intrinsic == IntrinsicKind::Real,
            FamilyKind::Tan | FamilyKind::Cot => intrinsic == IntrinsicKind::Imaginary,
            FamilyKind::PrimitivePlus | FamilyKind::PrimitiveMinus => true,
            FamilyKind::Integrated => false,
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for IntrinsicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntrinsicKind::Real => "real",
            IntrinsicKind::Imaginary => "imaginary",
        })
    }
}

/// Primitive pair `v = v_R ± v_I`.
#[derive(Clone, Debug)]
pub struct RcePrimitive {
    pub v_r: TimeFn,
    /// Intrinsic component; equals `j v_Im` when imaginary.
    pub v_i: TimeFn,
    pub v_im: Option<TimeFn>,
    pub intrinsic: IntrinsicKind,
    /// `∫ omega01 v_I` (real case) or `∫ omega01 v_Im` (imaginary case),
    /// anchored at the domain start.
    pub phi: TimeFn,
    /// `v_I ≡ 0`: the pair collapses to a single solution.
    pub degenerate: bool,
    pub mf: ModulationForm,
}

impl RcePrimitive {
    /// `v_I` for a real intrinsic component, `v_Im` for an imaginary one.
    pub fn amplitude(&self) -> &TimeFn {
        self.v_im.as_ref().unwrap_or(&self.v_i)
    }

    /// `sigma_f = sigma0 + omega01 v_R`.
    pub fn sigma_f(&self) -> TimeFn {
        &self.mf.sigma0 + &(&self.mf.omega01 * &self.v_r)
    }

    /// `omega01 v_I` (or `omega01 v_Im`).
    pub fn omega_f(&self) -> TimeFn {
        &self.mf.omega01 * self.amplitude()
    }
}

/// One RCE solution together with a pole-free core representation.
#[derive(Clone)]
pub struct RceFamilyMember {
    pub primitive: Option<Arc<RcePrimitive>>,
    /// Slack constant: `-∞` for the plus primitive, `+∞` for the minus
    /// primitive, `None` when integrated.
    pub k: Option<f64>,
    pub kind: FamilyKind,
    pub v: TimeFn,
    /// `z = v + eta`.
    pub z: TimeFn,
    core: Arc<dyn CoreFactor>,
    mf: ModulationForm,
}

impl fmt::Debug for RceFamilyMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RceFamilyMember({}, K = {:?}, {:?})", self.kind, self.k, self.core)
    }
}

impl RceFamilyMember {
    fn from_core(
        mf: &ModulationForm,
        core: Arc<dyn CoreFactor>,
        kind: FamilyKind,
        k: Option<f64>,
        primitive: Option<Arc<RcePrimitive>>,
    ) -> RceFamilyMember {
        let (lo, hi) = mf.domain;
        let cd = if core.is_real() { Codomain::Real } else { Codomain::Complex };
        let c2 = core.clone();
        let v = TimeFn::native(cd, move |t| ratio_at(&*c2, t)).with_domain(lo, hi);
        let (w1, w2, c3) = (mf.omega01.clone(), mf.omega02.clone(), core.clone());
        let vdot = TimeFn::native(Codomain::Complex, move |t| {
            let v = ratio_at(&*c3, t)?;
            Ok(w2.eval(t)? - w1.eval(t)? * v * v)
        })
        .with_domain(lo, hi);
        let v = v.with_derivative(if cd == Codomain::Real { vdot.re() } else { vdot });
        let z = &v + &mf.eta;
        RceFamilyMember { primitive, k, kind, v, z, core, mf: mf.clone() }
    }

    pub fn core(&self) -> &Arc<dyn CoreFactor> {
        &self.core
    }

    pub fn sample(&self, t: f64) -> Result<CoreSample> {
        self.core.sample(t)
    }

    /// Times inside the domain where `v` has a pole.
    pub fn poles(&self) -> &[f64] {
        self.core.poles()
    }

    pub fn is_real(&self) -> bool {
        self.core.is_real()
    }

    /// `∫ omega01 v` up to an additive constant, finite across poles except
    /// at the pole itself.
    pub fn log_growth(&self, t: f64) -> Result<C64> {
        Ok(self.core.sample(t)?.log_growth(self.core.is_real()))
    }

    pub fn modulation_form(&self) -> &ModulationForm {
        &self.mf
    }
}

fn ratio_at(core: &dyn CoreFactor, t: f64) -> Result<C64> {
    let s = core.sample(t)?;
    s.ratio().ok_or_else(|| {
        let pole = core
            .poles()
            .iter()
            .copied()
            .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
            .unwrap_or(t);
        LtvError::Pole { t, pole }
    })
}

/// Symmetrizing gauge `P = [[1, 0], [-q, p]]` with `q = p'/(2 omega01)`.
#[derive(Clone, Debug)]
pub struct SymmetrizingGauge {
    pub p: TimeFn,
    pub q: TimeFn,
}

/// Shift `raw` to vanish at the first probe point where it is finite.
fn anchored(raw: TimeFn, probe: &[f64]) -> Result<TimeFn> {
    let mut anchor = None;
    for &t in probe {
        if let Ok(v) = raw.eval(t) {
            anchor = Some((v, t));
            break;
        }
    }
    let (v, t) = anchor.ok_or_else(|| LtvError::Invalid("antiderivative has no finite probe point".into()))?;
    log::trace!("antiderivative anchored at t = {t}");
    Ok(&raw - v)
}

/// Constant primitive of an LTI modulation form.
pub fn lti_primitive(mf: &ModulationForm) -> Result<RcePrimitive> {
    let [_, w1, w2] = mf.constant_values(LTI_TOL)?.ok_or_else(|| {
        let t = mf.domain.1;
        let dev = [&mf.sigma0, &mf.omega01, &mf.omega02]
            .iter()
            .map(|f| (f.eval(t).unwrap_or_default() - f.eval(mf.domain.0).unwrap_or_default()).norm())
            .fold(0.0, f64::max);
        LtvError::NotConstant { deviation: dev }
    })?;
    if w1.norm() == 0.0 {
        return Err(LtvError::Invalid("omega01 vanishes".into()));
    }
    let (lo, hi) = mf.domain;
    let ratio = w2 / w1;
    let t_shift = &TimeFn::t() - lo;
    let (v_i, v_im, intrinsic, amp) = if ratio.im.abs() > 1e-300 {
        let a = ratio.sqrt();
        (TimeFn::constant_c(a), None, IntrinsicKind::Real, a)
    } else if ratio.re >= 0.0 {
        let a = C64::new(ratio.re.sqrt(), 0.0);
        (TimeFn::constant_c(a), None, IntrinsicKind::Real, a)
    } else {
        let a = (-ratio.re).sqrt();
        (
            TimeFn::constant_c(C64::new(0.0, a)),
            Some(TimeFn::constant(a)),
            IntrinsicKind::Imaginary,
            C64::new(a, 0.0),
        )
    };
    let phi = (&t_shift * (w1 * amp)).with_domain(lo, hi);
    Ok(RcePrimitive {
        v_r: TimeFn::zero(),
        v_i,
        v_im,
        intrinsic,
        phi,
        degenerate: amp.norm() == 0.0,
        mf: mf.clone(),
    })
}

/// Integrate the RCE from `v(t0) = v0` over `span` (default: the whole domain).
pub fn integrate_rce(mf: &ModulationForm, v0: C64, t0: f64, span: Option<(f64, f64)>) -> Result<RceFamilyMember> {
    let span = span.unwrap_or(mf.domain);
    let traj = ProjectiveTrajectory::integrate(mf, v0, C64::new(1.0, 0.0), t0, span)?;
    Ok(RceFamilyMember::from_core(mf, Arc::new(traj), FamilyKind::Integrated, None, None))
}

/// The two periodic RCE solutions of a `period`-periodic modulation form,
/// found as fixed points of the period map.
pub fn periodic_primitive(mf: &ModulationForm, period: f64) -> Result<(RceFamilyMember, RceFamilyMember)> {
    let (lo, hi) = mf.domain;
    if !(period > 0.0) || lo + period > hi * (1.0 + 1e-12) + 1e-12 {
        return Err(LtvError::Invalid(format!(
            "period {period} must be positive and fit in the domain [{lo}, {hi}]"
        )));
    }
    for (name, f) in [("omega01", &mf.omega01), ("omega02", &mf.omega02)] {
        f.with_period(period).map_err(|e| e.named(name))?;
    }
    let pi = period_map(mf, period)?;
    let tr = pi[0][0] + pi[1][1];
    let det = pi[0][0] * pi[1][1] - pi[0][1] * pi[1][0];
    let scale = pi.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let half = tr * 0.5;
    let off = [pi[0][0] - half, pi[0][1], pi[1][0], pi[1][1] - half]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let seeds: [(C64, C64, C64); 2] = if off <= 1e-8 * scale {
        // Every point is fixed; take the frozen fixed points at lo.
        let w = (mf.omega02.eval(lo)? / mf.omega01.eval(lo)?).sqrt();
        if w.norm() < 1e-12 {
            return Err(LtvError::Parabolic { multiplier: format!("{half}"), fixed_point: "every v".into() });
        }
        log::debug!("period map is scalar; using frozen fixed points ±{w}");
        [(w, C64::new(1.0, 0.0), half), (-w, C64::new(1.0, 0.0), half)]
    } else {
        let disc = (half * half - det).sqrt();
        let mus = [half + disc, half - disc];
        if (mus[0] - mus[1]).norm() <= 1e-8 * mus[0].norm().max(mus[1].norm()) {
            let [n, d] = eigvec(&pi, mus[0]);
            return Err(LtvError::Parabolic {
                multiplier: format!("{}", mus[0]),
                fixed_point: if d.norm() > 0.0 { format!("{}", n / d) } else { "infinity".into() },
            });
        }
        let e0 = eigvec(&pi, mus[0]);
        let e1 = eigvec(&pi, mus[1]);
        [(e0[0], e0[1], mus[0]), (e1[0], e1[1], mus[1])]
    };
    let mut pair = seeds;
    pair.sort_by(|a, b| order_fixed_points(a.0, a.1, b.0, b.1));
    let big = if pair[0].2.norm() >= pair[1].2.norm() { 0 } else { 1 };
    let mut out = Vec::with_capacity(2);
    for (i, &(n, d, _)) in pair.iter().enumerate() {
        let (n, d) = realify(n, d);
        let traj = ProjectiveTrajectory::periodic(mf, n, d, period, i == big)?;
        out.push(RceFamilyMember::from_core(mf, Arc::new(traj), FamilyKind::Integrated, None, None));
    }
    let v2 = out.pop().unwrap();
    let v1 = out.pop().unwrap();
    Ok((v1, v2))
}

/// Strip round-off imaginary parts from a fixed point that is real up to a
/// common complex factor.
fn realify(n: C64, d: C64) -> (C64, C64) {
    let big = if n.norm() >= d.norm() { n } else { d };
    let phase = big / big.norm();
    let (n, d) = (n / phase, d / phase);
    let tiny = |z: C64| z.im.abs() <= 1e-12 * (n.norm() + d.norm());
    if tiny(n) && tiny(d) {
        (C64::new(n.re, 0.0), C64::new(d.re, 0.0))
    } else {
        (n, d)
    }
}

/// Finite fixed points first, then by descending real part, then by
/// descending imaginary part.
fn order_fixed_points(n1: C64, d1: C64, n2: C64, d2: C64) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let finite = |n: C64, d: C64| d.norm() > 1e-6 * n.norm();
    match (finite(n1, d1), finite(n2, d2)) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => Ordering::Equal,
        (true, true) => {
            let (a, b) = (n1 / d1, n2 / d2);
            b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
        }
    }
}

fn eigvec(pi: &[[C64; 2]; 2], mu: C64) -> [C64; 2] {
    let x = [pi[0][1], mu - pi[0][0]];
    let y = [mu - pi[1][1], pi[1][0]];
    let nx = x[0].norm() + x[1].norm();
    let ny = y[0].norm() + y[1].norm();
    if nx >= ny {
        x
    } else {
        y
    }
}

/// Period map of the projective flow acting on `(n, d)` columns.
pub fn period_map(mf: &ModulationForm, period: f64) -> Result<[[C64; 2]; 2]> {
    let lo = mf.domain.0;
    let (w1, w2) = (mf.omega01.clone(), mf.omega02.clone());
    let f = move |t: f64, y: &[C64; 4]| -> Result<[C64; 4]> {
        let (a, b) = (w1.eval(t)?, w2.eval(t)?);
        Ok([b * y[1], a * y[0], b * y[3], a * y[2]])
    };
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let y = crate::ode::integrate(&f, lo, [one, zero, zero, one], lo + period, &Default::default(), |_, y| {
        let s = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 1e100 {
            Ok(y.map(|z| z / s))
        } else {
            Ok(*y)
        }
    })?;
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

/// Closed-form member of the family built on `prim`.
pub fn family_member(prim: &Arc<RcePrimitive>, k: f64, kind: FamilyKind) -> Result<RceFamilyMember> {
    if !kind.is_compatible(prim.intrinsic) {
        return Err(LtvError::IncompatibleKind { kind: kind.to_string(), intrinsic: prim.intrinsic.to_string() });
    }
    let mf = &prim.mf;
    if prim.degenerate {
        return Err(LtvError::Degenerate { t: mf.domain.0 });
    }
    let k = match kind {
        // Limits of tanh(phi - K) -> ±1.
        FamilyKind::PrimitivePlus => f64::NEG_INFINITY,
        FamilyKind::PrimitiveMinus => f64::INFINITY,
        _ => k,
    };
    let core = ClosedFormCore::new(
        kind,
        prim.intrinsic,
        prim.v_r.clone(),
        prim.amplitude().clone(),
        prim.phi.clone(),
        if k.is_finite() { k } else { 0.0 },
        mf.domain,
    )?;
    Ok(RceFamilyMember::from_core(mf, Arc::new(core), kind, Some(k), Some(prim.clone())))
}

/// The primitive pair and symmetrizing gauge of a complementary pair.
pub fn decompose(v1: &RceFamilyMember, v2: &RceFamilyMember) -> Result<(Arc<RcePrimitive>, SymmetrizingGauge)> {
    if let (Some(p1), Some(p2)) = (&v1.primitive, &v2.primitive) {
        if Arc::ptr_eq(p1, p2) && v1.kind == FamilyKind::PrimitivePlus && v2.kind == FamilyKind::PrimitiveMinus {
            let p = &TimeFn::one() / &p1.v_i;
            let q = &p1.v_r / &p1.v_i;
            return Ok((p1.clone(), SymmetrizingGauge { p, q }));
        }
    }
    let mf = v1.mf.clone();
    let (lo, hi) = mf.domain;
    let probe = linspace(lo, hi, crate::system::PROBE_POINTS);
    let (c1, c2) = (v1.core.clone(), v2.core.clone());
    let mut separated = false;
    for &t in &probe {
        let (a, b) = (c1.sample(t)?, c2.sample(t)?);
        if wronskian(&a, &b).norm() > 1e-9 * a.norm() * b.norm() {
            separated = true;
            break;
        }
    }
    if !separated {
        return Err(LtvError::Degenerate { t: lo });
    }
    let real = c1.is_real() && c2.is_real();
    let cd = if real { Codomain::Real } else { Codomain::Complex };
    let pair = {
        let (c1, c2) = (c1.clone(), c2.clone());
        move |t: f64| -> Result<(CoreSample, CoreSample)> { Ok((c1.sample(t)?, c2.sample(t)?)) }
    };
    let pair = Arc::new(pair);
    let native = |f: Arc<dyn Fn(f64) -> Result<C64> + Send + Sync>, cd: Codomain| {
        TimeFn::native(cd, move |t| f(t)).with_domain(lo, hi)
    };

    let pr = pair.clone();
    let half_sum = move |t: f64| {
        let (a, b) = pr(t)?;
        let den = a.d * b.d * 2.0;
        if den.norm() < POLE_EPS * POLE_EPS * a.norm() * b.norm() {
            return Err(LtvError::Pole { t, pole: t });
        }
        Ok(((a.n * b.d + b.n * a.d) / den, (a.n * b.d - b.n * a.d) / den))
    };
    let hs = Arc::new(half_sum);
    let h1 = hs.clone();
    let v_r_raw = native(Arc::new(move |t| Ok(h1(t)?.0)), cd);
    let h2 = hs.clone();
    let v_i_raw = native(Arc::new(move |t| Ok(h2(t)?.1)), cd);
    let (d1, d2) = (v1.v.derivative_fn(), v2.v.derivative_fn());
    let v_r = v_r_raw.with_derivative(&(&d1 + &d2) * 0.5);
    let v_i = v_i_raw.with_derivative(&(&d1 - &d2) * 0.5);

    let mut worst_re = 0.0f64;
    let mut worst_im = 0.0f64;
    for &t in &probe {
        if let Ok(x) = v_i.eval(t) {
            worst_re = worst_re.max(x.re.abs());
            worst_im = worst_im.max(x.im.abs());
        }
    }
    let intrinsic = if worst_im > worst_re { IntrinsicKind::Imaginary } else { IntrinsicKind::Real };

    let pg = pair.clone();
    let phi_raw = native(
        Arc::new(move |t| {
            let (a, b) = pg(t)?;
            let diff = a.log_growth(real) - b.log_growth(real);
            Ok(match intrinsic {
                IntrinsicKind::Real => diff * 0.5,
                IntrinsicKind::Imaginary => C64::new((diff / C64::new(0.0, 2.0)).re, 0.0),
            })
        }),
        if intrinsic == IntrinsicKind::Imaginary { Codomain::Real } else { cd },
    );
    let v_im = (intrinsic == IntrinsicKind::Imaginary).then(|| {
        let vi = v_i.clone();
        let dvi = v_i.derivative_fn();
        TimeFn::native(Codomain::Real, move |t| Ok(C64::new(vi.eval(t)?.im, 0.0)))
            .with_domain(lo, hi)
            .with_derivative(
                TimeFn::native(Codomain::Real, move |t| Ok(C64::new(dvi.eval(t)?.im, 0.0))).with_domain(lo, hi),
            )
    });
    let amp = v_im.clone().unwrap_or_else(|| v_i.clone());
    let phi = anchored(phi_raw.with_derivative(&mf.omega01 * &amp), &probe)?;

    let pp = pair.clone();
    let p_raw = native(
        Arc::new(move |t| {
            let (a, b) = pp(t)?;
            Ok(a.d * b.d * 2.0 / nonzero(wronskian(&a, &b), t)?)
        }),
        cd,
    );
    let pq = pair.clone();
    let q_raw = native(
        Arc::new(move |t| {
            let (a, b) = pq(t)?;
            Ok((a.n * b.d + b.n * a.d) / nonzero(wronskian(&a, &b), t)?)
        }),
        cd,
    );
    let (pd, w1, w2) = (pair.clone(), mf.omega01.clone(), mf.omega02.clone());
    let q_dot = native(
        Arc::new(move |t| {
            let (a, b) = pd(t)?;
            let num = (w2.eval(t)? * a.d * b.d + w1.eval(t)? * a.n * b.n) * 2.0;
            Ok(num / nonzero(wronskian(&a, &b), t)?)
        }),
        cd,
    );
    let q = q_raw.with_derivative(q_dot);
    let p = p_raw.with_derivative(&(&mf.omega01 * &q) * 2.0);

    let prim = RcePrimitive {
        v_r,
        v_i,
        v_im,
        intrinsic,
        phi,
        degenerate: false,
        mf: mf.clone(),
    };
    Ok((Arc::new(prim), SymmetrizingGauge { p, q }))
}

fn wronskian(a: &CoreSample, b: &CoreSample) -> C64 {
    a.n * b.d - b.n * a.d
}

fn nonzero(w: C64, t: f64) -> Result<C64> {
    if w.norm() == 0.0 {
        Err(LtvError::Degenerate { t })
    } else {
        Ok(w)
    }
}

/// `|v' + omega01 v^2 - omega02|` with `v'` from finite differences.
pub fn rce_residual(mf: &ModulationForm, v: &TimeFn, t: f64) -> Result<f64> {
    let x = v.eval(t)?;
    let dv = v.fd_derivative(t, default_step(t))?;
    Ok((dv + mf.omega01.eval(t)? * x * x - mf.omega02.eval(t)?).norm())
}

#[cfg(test)]
mod tests;
