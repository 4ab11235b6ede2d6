//! Fundamental and state-transition matrices, forced responses and scalar
//! solutions with boundary matching.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{Matrix2, Vector2};

use crate::error::{LtvError, Result};
use crate::rce::{CoreSample, IntrinsicKind, RcePrimitive, POLE_EPS};
use crate::spectral::{DynamicSpectrum, EigenvectorMatrix};
use crate::system::{Ltv2System, ModulationForm};
use crate::timefn::{default_step, quad, TimeFn};
use crate::C64;

/// Condition number above which a reference time is rejected.
pub const MAX_REFERENCE_COND: f64 = 1e12;

/// Imaginary residue below which a state-transition matrix is returned real.
pub const REAL_COLLAPSE_TOL: f64 = 1e-8;

/// `∫ sigma0` anchored at the domain start.
pub fn sigma_antiderivative(mf: &ModulationForm) -> Result<TimeFn> {
    mf.sigma0.antiderivative(257)
}

/// Distinguish a reference time where the coefficients blow up from one that
/// merely lies outside the working interval.
fn check_reference(mf: &ModulationForm, t_ref: f64) -> Result<()> {
    if mf.contains(t_ref) {
        return Ok(());
    }
    for f in [&mf.sigma0, &mf.omega01, &mf.omega02, &mf.alpha] {
        if let Err(LtvError::NonFinite { .. }) = f.unrestricted().eval(t_ref) {
            return Err(LtvError::SingularReference {
                t_ref,
                reason: "the state matrix is singular there".into(),
            });
        }
    }
    Err(LtvError::Domain { t: t_ref, lo: mf.domain.0, hi: mf.domain.1 })
}

/// `V(t) diag(e^{Phi_1}, e^{Phi_2})` with `Phi_i(t_ref) = 0`, evaluated
/// through the pole-free cores of the two RCE solutions.
#[derive(Clone, Debug)]
pub struct FundamentalMatrix {
    pub v: EigenvectorMatrix,
    pub spectrum: DynamicSpectrum,
    pub t_ref: f64,
    mf: ModulationForm,
    phi0: TimeFn,
    phi0_ref: C64,
    refs: [CoreSample; 2],
    scale: [C64; 2],
}

pub fn fundamental_matrix(v: &EigenvectorMatrix, spectrum: &DynamicSpectrum, t_ref: f64) -> Result<FundamentalMatrix> {
    let mf = spectrum.v1.modulation_form().clone();
    check_reference(&mf, t_ref)?;
    let phi0 = sigma_antiderivative(&mf)?;
    let alpha = mf.alpha.eval(t_ref)?;
    let mut refs = [spectrum.v1.sample(t_ref)?, spectrum.v2.sample(t_ref)?];
    let mut scale = [C64::new(1.0, 0.0); 2];
    for (s, c) in refs.iter_mut().zip(scale.iter_mut()) {
        // First row of V is one; at a pole of v fall back to the second row.
        *c = if s.d.norm() >= POLE_EPS * s.norm() { s.d } else { s.n - alpha * s.d };
    }
    Ok(FundamentalMatrix {
        v: v.clone(),
        spectrum: spectrum.clone(),
        t_ref,
        phi0_ref: phi0.eval(t_ref)?,
        mf,
        phi0,
        refs,
        scale,
    })
}

impl FundamentalMatrix {
    pub fn modulation_form(&self) -> &ModulationForm {
        &self.mf
    }

    pub fn domain(&self) -> (f64, f64) {
        self.mf.domain
    }

    /// `Phi_i(t) = ∫_{t_ref}^t lambda_i`, accumulated through the core so it
    /// stays finite across poles of `lambda_i` (real cores use `ln|d|`).
    pub fn exponent(&self, i: usize, t: f64) -> Result<C64> {
        let m = self.spectrum.members()[i];
        let s = m.sample(t)?;
        let real = m.is_real();
        Ok(self.phi0.eval(t)? - self.phi0_ref + s.log_growth(real) - self.refs[i].log_growth(real))
    }

    pub fn eval(&self, t: f64) -> Result<Matrix2<C64>> {
        let p0 = self.phi0.eval(t)? - self.phi0_ref;
        let alpha = self.mf.alpha.eval(t)?;
        let mut out = Matrix2::zeros();
        for (i, m) in self.spectrum.members().into_iter().enumerate() {
            let s = m.sample(t)?;
            let g = (p0 + s.log_scale - self.refs[i].log_scale).exp() / self.scale[i];
            out[(0, i)] = g * s.d;
            out[(1, i)] = g * (s.n - alpha * s.d);
        }
        Ok(out)
    }

    /// `max|F' - A F| / max|F|` with `F'` from finite differences.
    pub fn column_residual(&self, sys: &Ltv2System, t: f64) -> Result<f64> {
        let f = self.eval(t)?;
        let df = matrix_derivative(|s| self.eval(s), t, self.domain())?;
        let r = df - sys.state_matrix(t)? * f;
        let norm = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(r.iter().map(|z| z.norm()).fold(0.0, f64::max) / norm)
    }
}

/// Fourth-order finite difference of a matrix function, one-sided near the
/// ends of `[lo, hi]`.
pub fn matrix_derivative(
    f: impl Fn(f64) -> Result<Matrix2<C64>>,
    t: f64,
    (lo, hi): (f64, f64),
) -> Result<Matrix2<C64>> {
    let h = default_step(t).min((hi - lo) / 8.0);
    if t - 2.0 * h < lo || t + 2.0 * h > hi {
        let h = if t - 2.0 * h < lo { h } else { -h };
        let g = |k: f64| f(t + k * h);
        return Ok((g(0.0)? * C64::new(-25.0, 0.0) + g(1.0)? * C64::new(48.0, 0.0) - g(2.0)? * C64::new(36.0, 0.0)
            + g(3.0)? * C64::new(16.0, 0.0)
            - g(4.0)? * C64::new(3.0, 0.0))
            / C64::new(12.0 * h, 0.0));
    }
    let g = |k: f64| f(t + k * h);
    Ok((g(-2.0)? - g(2.0)? + (g(1.0)? - g(-1.0)?) * C64::new(8.0, 0.0)) / C64::new(12.0 * h, 0.0))
}

/// `phi(t, t_ref) = F(t) F(t_ref)^-1`.
#[derive(Debug)]
pub struct StateTransition {
    pub fundamental: FundamentalMatrix,
    pub t_ref: f64,
    /// `F(t_ref)^-1`.
    pub normalizer: Matrix2<C64>,
    warned: AtomicBool,
}

impl Clone for StateTransition {
    fn clone(&self) -> Self {
        StateTransition {
            fundamental: self.fundamental.clone(),
            t_ref: self.t_ref,
            normalizer: self.normalizer,
            warned: AtomicBool::new(self.warned.load(Ordering::Relaxed)),
        }
    }
}

/// 2-norm condition number of a 2x2 matrix.
pub fn condition_number(m: &Matrix2<C64>) -> f64 {
    let sv = m.svd(false, false).singular_values;
    let (a, b) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

pub fn state_transition(fund: &FundamentalMatrix, t_ref: f64) -> Result<StateTransition> {
    check_reference(&fund.mf, t_ref)?;
    let f = fund.eval(t_ref)?;
    let cond = condition_number(&f);
    if !(cond <= MAX_REFERENCE_COND) {
        return Err(LtvError::SingularReference {
            t_ref,
            reason: format!("fundamental matrix has condition number {cond:e}"),
        });
    }
    let normalizer = f.try_inverse().ok_or_else(|| LtvError::SingularReference {
        t_ref,
        reason: "fundamental matrix is not invertible".into(),
    })?;
    Ok(StateTransition { fundamental: fund.clone(), t_ref, normalizer, warned: AtomicBool::new(false) })
}

impl StateTransition {
    /// `phi(t, t_ref)` without the real collapse.
    pub fn eval_complex(&self, t: f64) -> Result<Matrix2<C64>> {
        Ok(self.fundamental.eval(t)? * self.normalizer)
    }

    /// `phi(t, t_ref)`; imaginary parts are dropped when they are round-off.
    pub fn eval(&self, t: f64) -> Result<Matrix2<C64>> {
        let mut m = self.eval_complex(t)?;
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let im = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if im <= REAL_COLLAPSE_TOL * scale {
            m.iter_mut().for_each(|z| z.im = 0.0);
        } else if !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!("state transition matrix keeps an imaginary part of {im:e} at t = {t}");
        }
        Ok(m)
    }

    /// `phi(t2, t1) = phi(t2, t_ref) phi(t1, t_ref)^-1`.
    pub fn between(&self, t2: f64, t1: f64) -> Result<Matrix2<C64>> {
        let a = self.eval_complex(t2)?;
        let b = self.eval_complex(t1)?;
        let inv = b.try_inverse().ok_or(LtvError::SingularReference { t_ref: t1, reason: "not invertible".into() })?;
        Ok(a * inv)
    }
}

/// `x(t) = phi(t) x0 + phi(t) ∫_{t_ref}^t phi^-1(s) u(s) ds`.
pub fn forced_response(sys: &Ltv2System, stm: &StateTransition, x0: Vector2<C64>, t: f64) -> Result<Vector2<C64>> {
    let phi = stm.eval_complex(t)?;
    let mut x = x0;
    if !sys.is_homogeneous() && t != stm.t_ref {
        let r = quad::integrate(
            |s| {
                let inv = stm
                    .eval_complex(s)?
                    .try_inverse()
                    .ok_or(LtvError::NonFinite { t: s, what: "inverse state transition".into() })?;
                Ok(inv * sys.input_at(s)?)
            },
            stm.t_ref,
            t,
            quad::DEFAULT_TOL,
        )?;
        x += r.value;
    }
    Ok(phi * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Cosh,
    Sinh,
    Cos,
    Sin,
    PureExponential,
}

impl ScalarKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalarKind::Cosh => "cosh",
            ScalarKind::Sinh => "sinh",
            ScalarKind::Cos => "cos",
            ScalarKind::Sin => "sin",
            ScalarKind::PureExponential => "pure_exponential",
        }
    }
}

/// `y(t) = A |a(t)|^{-1/2} e^{Phi_0(t)} g(Phi(t) - K)` where `a` is `v_I` or
/// `v_Im` and `g` one of cosh, sinh, cos, sin. The pure exponential uses
/// `g = e^{±Phi}`, the sign being that of `-K`.
#[derive(Clone, Debug)]
pub struct ScalarSolution {
    pub amplitude: f64,
    pub k: f64,
    pub kind: ScalarKind,
    pub phi0: TimeFn,
    pub phi: TimeFn,
    /// `v_I` or `v_Im`; the constant 1 for a degenerate pair.
    pub prefactor: TimeFn,
}

impl ScalarSolution {
    fn sign(&self) -> f64 {
        if self.k.is_infinite() {
            -self.k.signum()
        } else {
            0.0
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if self.amplitude == 0.0 {
            return Ok(0.0);
        }
        let x = self.phi.eval_re(t)?;
        let g = match self.kind {
            ScalarKind::Cosh => (x - self.k).cosh(),
            ScalarKind::Sinh => (x - self.k).sinh(),
            ScalarKind::Cos => (x - self.k).cos(),
            ScalarKind::Sin => (x - self.k).sin(),
            ScalarKind::PureExponential => (self.sign() * x).exp(),
        };
        let pre = self.prefactor.eval_re(t)?.abs().sqrt();
        Ok(self.amplitude / pre * self.phi0.eval_re(t)?.exp() * g)
    }

    /// Finite-difference derivative.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        let f = self.clone();
        let (lo, hi) = self.phi0.domain().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        let y = TimeFn::native_real(move |s| f.eval(s).unwrap_or(f64::NAN)).with_domain(lo, hi);
        Ok(y.fd_derivative(t, default_step(t))?.re)
    }
}

pub fn scalar_solution(
    mf: &ModulationForm,
    prim: &RcePrimitive,
    k: f64,
    amplitude: f64,
    kind: ScalarKind,
) -> Result<ScalarSolution> {
    let phi0 = sigma_antiderivative(mf)?;
    if prim.degenerate {
        return Ok(ScalarSolution {
            amplitude,
            k: f64::NEG_INFINITY,
            kind: ScalarKind::PureExponential,
            phi0,
            phi: TimeFn::zero(),
            prefactor: TimeFn::one(),
        });
    }
    let ok = match kind {
        ScalarKind::Cosh | ScalarKind::Sinh => prim.intrinsic == IntrinsicKind::Real,
        ScalarKind::Cos | ScalarKind::Sin => prim.intrinsic == IntrinsicKind::Imaginary,
        ScalarKind::PureExponential => k.is_infinite(),
    };
    if !ok {
        return Err(LtvError::IncompatibleKind { kind: kind.name().into(), intrinsic: prim.intrinsic.to_string() });
    }
    Ok(ScalarSolution {
        amplitude,
        k,
        kind,
        phi0,
        phi: prim.phi.clone(),
        prefactor: prim.amplitude().clone(),
    })
}

/// Choose `K`, the kind and `A` so that `y(t0) = y0` and `y'(t0) = ydot0`.
pub fn match_boundary(y0: f64, ydot0: f64, mf: &ModulationForm, prim: &RcePrimitive, t0: f64) -> Result<ScalarSolution> {
    let phi0 = sigma_antiderivative(mf)?;
    let p0 = phi0.eval_re(t0)?;
    if prim.degenerate {
        let mut s = scalar_solution(mf, prim, f64::NEG_INFINITY, 0.0, ScalarKind::PureExponential)?;
        s.amplitude = y0 * (-p0).exp();
        return Ok(s);
    }
    let imaginary = prim.intrinsic == IntrinsicKind::Imaginary;
    let (cosine, sine) = if imaginary { (ScalarKind::Cos, ScalarKind::Sin) } else { (ScalarKind::Cosh, ScalarKind::Sinh) };
    let amp = prim.amplitude().eval_re(t0)?;
    let w01 = mf.omega01.eval_re(t0)?;
    let phi = prim.phi.eval_re(t0)?;
    let root = amp.abs().sqrt();
    if y0 == 0.0 {
        let a = if ydot0 == 0.0 { 0.0 } else { ydot0 * root * (-p0).exp() / (w01 * amp) };
        return scalar_solution(mf, prim, phi, a, if ydot0 == 0.0 { cosine } else { sine });
    }
    let sigma_f = prim.sigma_f().eval_re(t0)?;
    let x = (ydot0 / y0 - sigma_f) / (w01 * amp);
    let (kind, k, g) = if imaginary {
        let k = phi + x.atan();
        (cosine, k, (phi - k).cos())
    } else if (x.abs() - 1.0).abs() <= 1e-12 {
        let k = if x > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
        (ScalarKind::PureExponential, k, (x.signum() * phi).exp())
    } else if x.abs() < 1.0 {
        let k = phi - x.atanh();
        (cosine, k, (phi - k).cosh())
    } else {
        let k = phi - (1.0 / x).atanh();
        (sine, k, (phi - k).sinh())
    };
    let a = y0 * root * (-p0).exp() / g;
    scalar_solution(mf, prim, k, a, kind)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::rce::{family_member, integrate_rce, lti_primitive, FamilyKind};
    use crate::spectral::{dynamic_eigenvalues, eigenvector_matrix};
    use crate::system::FnMatrix;

    fn sys(m: [[&str; 2]; 2], lo: f64, hi: f64) -> Ltv2System {
        Ltv2System::homogeneous(FnMatrix::parse(m).unwrap(), (lo, hi), None).unwrap()
    }

    fn lti_fund(s: &Ltv2System, kinds: [FamilyKind; 2]) -> FundamentalMatrix {
        let mf = s.modulation_form().unwrap();
        let prim = Arc::new(lti_primitive(&mf).unwrap());
        let a = family_member(&prim, 0.0, kinds[0]).unwrap();
        let b = family_member(&prim, 0.0, kinds[1]).unwrap();
        let sp = dynamic_eigenvalues(&mf, &a, &b);
        fundamental_matrix(&eigenvector_matrix(&mf, &a, &b), &sp, s.domain().0).unwrap()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    const PM: [FamilyKind; 2] = [FamilyKind::PrimitivePlus, FamilyKind::PrimitiveMinus];

    #[test]
    fn lti_fundamental_and_transition() {
        let s = sys([["3", "1"], ["2", "2"]], 0.0, 2.0);
        let f = lti_fund(&s, PM);
        let t = 0.7f64;
        let m = f.eval(t).unwrap();
        let expect = Matrix2::new(c((4.0 * t).exp()), c(t.exp()), c((4.0 * t).exp()), c(-2.0 * t.exp()));
        assert!((m - expect).norm() < 1e-12 * expect.norm());
        let phi = state_transition(&f, 0.0).unwrap();
        let e = 1f64.exp();
        let p = phi.eval(1.0).unwrap();
        assert!((p[(0, 0)].re - (e + 2.0 * e.powi(4)) / 3.0).abs() < 1e-10);
        assert!(f.column_residual(&s, 1.2).unwrap() < 1e-8);
    }

    #[test]
    fn complex_and_real_family_agree() {
        let s = sys([["1", "1"], ["-5", "-3"]], 0.0, 2.0);
        let a = state_transition(&lti_fund(&s, PM), 0.0).unwrap();
        let b = state_transition(&lti_fund(&s, [FamilyKind::Tan, FamilyKind::Cot]), 0.0).unwrap();
        for &t in &[0.0f64, 0.4, 1.3, 2.0] {
            let (x, y) = (a.eval(t).unwrap(), b.eval(t).unwrap());
            assert!((x - y).norm() < 1e-10);
            let (sn, cs, ex) = (t.sin(), t.cos(), (-t).exp());
            let expect = Matrix2::new(
                c(ex * (2.0 * sn + cs)),
                c(ex * sn),
                c(-5.0 * ex * sn),
                c(ex * (cs - 2.0 * sn)),
            );
            assert!((x - expect).norm() < 1e-10, "t={t}");
            assert!(x.iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn reference_outside_domain() {
        let s = sys([["1 + 1/t", "1"], ["-1/t^4", "1 - 1/t"]], 0.5, 3.0);
        let mf = s.modulation_form().unwrap();
        let j = C64::new(0.0, 1.0);
        let a = integrate_rce(&mf, c(2.0) + j * 4.0, 0.5, None).unwrap();
        let b = integrate_rce(&mf, c(2.0) - j * 4.0, 0.5, None).unwrap();
        let sp = dynamic_eigenvalues(&mf, &a, &b);
        let f = fundamental_matrix(&eigenvector_matrix(&mf, &a, &b), &sp, 0.5).unwrap();
        assert!(matches!(state_transition(&f, 0.0), Err(LtvError::SingularReference { .. })));
        assert!(matches!(state_transition(&f, 5.0), Err(LtvError::Domain { .. })));
        let phi = state_transition(&f, 1.0).unwrap();
        assert!((phi.eval(1.0).unwrap() - Matrix2::identity()).norm() < 1e-10);
    }

    #[test]
    fn forced_step_response() {
        let a = FnMatrix::parse([["3", "1"], ["2", "2"]]).unwrap();
        let s = Ltv2System::new(a, [TimeFn::zero(), TimeFn::one()], (0.0, 2.0), None).unwrap();
        let phi = state_transition(&lti_fund(&s, PM), 0.0).unwrap();
        let x = forced_response(&s, &phi, Vector2::zeros(), 1.0).unwrap();
        let e = 1f64.exp();
        let expect = e.powi(4) / 12.0 - e / 3.0 + 0.25;
        assert!((x[0].re - expect).abs() < 1e-9);
        let x = forced_response(&s, &phi, Vector2::new(c(1.0), c(0.0)), 0.0).unwrap();
        assert_eq!(x, Vector2::new(c(1.0), c(0.0)));
    }

    #[test]
    fn scalar_solutions_and_matching() {
        let s = sys([["3", "1"], ["2", "2"]], 0.0, 2.0);
        let mf = s.modulation_form().unwrap();
        let prim = lti_primitive(&mf).unwrap();
        let y = scalar_solution(&mf, &prim, 0.0, 1.5f64.sqrt(), ScalarKind::Cosh).unwrap();
        for &t in &[0.0f64, 0.5, 1.5] {
            let expect = ((4.0 * t).exp() + t.exp()) / 2.0;
            assert!((y.eval(t).unwrap() - expect).abs() < 1e-12 * expect);
        }
        let y = match_boundary(1.0, 4.0, &mf, &prim, 0.0).unwrap();
        assert_eq!(y.kind, ScalarKind::PureExponential);
        assert!(y.k.is_infinite());
        assert!((y.eval(1.0).unwrap() - 4f64.exp()).abs() < 1e-10 * 4f64.exp());
        let y = match_boundary(1.0, 2.5, &mf, &prim, 0.0).unwrap();
        assert_eq!(y.kind, ScalarKind::Cosh);
        assert!(y.k.abs() < 1e-15);
        let y = match_boundary(1.0, 7.0, &mf, &prim, 0.0).unwrap();
        assert_eq!(y.kind, ScalarKind::Sinh);
        assert!((y.derivative(0.0).unwrap() - 7.0).abs() < 1e-6);

        let osc = sys([["0", "1"], ["-1", "0"]], 0.0, 3.0);
        let mf = osc.modulation_form().unwrap();
        let prim = lti_primitive(&mf).unwrap();
        let y = match_boundary(1.0, 0.0, &mf, &prim, 0.0).unwrap();
        assert_eq!(y.kind, ScalarKind::Cos);
        assert!(y.k.abs() < 1e-15);
        assert!((y.eval(2.0).unwrap() - 2f64.cos()).abs() < 1e-12);
        let y = match_boundary(0.0, 2.0, &mf, &prim, 0.0).unwrap();
        assert!((y.eval(1.0).unwrap() - 2.0 * 1f64.sin()).abs() < 1e-12);
        assert_eq!(match_boundary(0.0, 0.0, &mf, &prim, 0.0).unwrap().eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn repeated_root_scalar_is_pure_exponential() {
        let s = sys([["1", "1"], ["-1", "3"]], 0.5, 3.0);
        let mf = s.modulation_form().unwrap();
        let prim = lti_primitive(&mf).unwrap();
        let y = match_boundary(2.0, 4.0, &mf, &prim, 0.5).unwrap();
        assert_eq!(y.kind, ScalarKind::PureExponential);
        assert!((y.eval(1.5).unwrap() - 2.0 * 2f64.exp()).abs() < 1e-10);
    }
}
