//! Pole-free representations of RCE solutions.
//!
//! Every solution `v` is carried as a projective pair `(n, d)` with `v = n/d`
//! and an accumulated log scale, so that `e^{log_scale} d` is the core mode
//! (the first state component with `sigma0` removed) and
//! `e^{log_scale} (n - alpha d)` the second.

use std::fmt;

use crate::error::Result;
use crate::timefn::TimeFn;
use crate::C64;

use super::{FamilyKind, IntrinsicKind};

/// Relative size of `d` below which `v = n/d` is treated as a pole.
pub const POLE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreSample {
    pub log_scale: C64,
    pub n: C64,
    pub d: C64,
}

impl CoreSample {
    pub fn norm(&self) -> f64 {
        (self.n.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    /// `n/d`, or `None` inside a pole interval.
    pub fn ratio(&self) -> Option<C64> {
        if self.d.norm() < POLE_EPS * self.norm() {
            None
        } else {
            Some(self.n / self.d)
        }
    }

    /// Logarithm of the core mode `e^{log_scale} d`. Real cores use
    /// `ln|d|`; complex cores keep `d` near 1 so the principal branch is
    /// continuous.
    pub fn log_growth(&self, real: bool) -> C64 {
        if real {
            self.log_scale + C64::new(self.d.norm().ln(), 0.0)
        } else {
            self.log_scale + self.d.ln()
        }
    }
}

pub trait CoreFactor: Send + Sync + fmt::Debug {
    fn sample(&self, t: f64) -> Result<CoreSample>;
    /// Real cores have real `(n, d)` and may cross `d = 0`.
    fn is_real(&self) -> bool;
    fn domain(&self) -> (f64, f64);
    /// Times where `d` changes sign, sorted.
    fn poles(&self) -> &[f64];
}

/// Locate sign changes of `Re d` on `grid`, refined by bisection.
pub fn locate_poles(core: &dyn Fn(f64) -> Result<CoreSample>, grid: &[f64]) -> Result<Vec<f64>> {
    let mut poles = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &t in grid {
        let s = core(t)?;
        let d = s.d.re / s.norm();
        if d == 0.0 {
            poles.push(t);
        } else if let Some((tp, dp)) = prev {
            if dp != 0.0 && dp.signum() != d.signum() {
                let (mut a, mut b, da) = (tp, t, dp);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let sm = core(m)?;
                    let dm = sm.d.re;
                    if dm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if dm.signum() == da.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                poles.push(0.5 * (a + b));
            }
        }
        prev = Some((t, d));
    }
    Ok(poles)
}

/// Family member written in closed form over a primitive pair
/// `v_R ± v_I`: hyperbolic, trigonometric or single-exponential cores.
pub struct ClosedFormCore {
    kind: FamilyKind,
    intrinsic: IntrinsicKind,
    v_r: TimeFn,
    amp: TimeFn,
    phi: TimeFn,
    k: f64,
    domain: (f64, f64),
    poles: Vec<f64>,
}

impl fmt::Debug for ClosedFormCore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedFormCore({:?}, K = {}, {} poles)", self.kind, self.k, self.poles.len())
    }
}

impl ClosedFormCore {
    /// `amp` is `v_I` for a real intrinsic component and `v_Im` for an
    /// imaginary one; `phi` is the matching anchored antiderivative.
    pub fn new(
        kind: FamilyKind,
        intrinsic: IntrinsicKind,
        v_r: TimeFn,
        amp: TimeFn,
        phi: TimeFn,
        k: f64,
        domain: (f64, f64),
    ) -> Result<Self> {
        let mut core = ClosedFormCore { kind, intrinsic, v_r, amp, phi, k, domain, poles: vec![] };
        if core.is_real() {
            let grid = crate::timefn::linspace(domain.0, domain.1, 2049);
            core.poles = locate_poles(&|t| core.sample(t), &grid)?;
        }
        Ok(core)
    }
}

impl CoreFactor for ClosedFormCore {
    fn sample(&self, t: f64) -> Result<CoreSample> {
        let vr = self.v_r.eval(t)?;
        let a = self.amp.eval(t)?;
        let phi = self.phi.eval(t)?;
        let ls0 = -0.5 * a.norm().ln();
        let j = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let (ls, n, d) = match self.kind {
            FamilyKind::PrimitivePlus | FamilyKind::PrimitiveMinus => {
                let s = if self.kind == FamilyKind::PrimitivePlus { 1.0 } else { -1.0 };
                if self.intrinsic == IntrinsicKind::Real {
                    (ls0 + phi * s, vr + a * s, one)
                } else {
                    (ls0 + j * phi.re * s, vr + j * a * s, one)
                }
            }
            FamilyKind::Tanh | FamilyKind::Coth => {
                // cosh and sinh scaled by e^{-|psi|}.
                let x = phi.re - self.k;
                let e = (-2.0 * x.abs()).exp();
                let ch = 0.5 * (1.0 + e);
                let sh = x.signum() * 0.5 * (1.0 - e);
                let ls = C64::new(ls0 + x.abs(), 0.0);
                if self.kind == FamilyKind::Tanh {
                    (ls, vr * ch + a * sh, C64::new(ch, 0.0))
                } else {
                    (ls, vr * sh + a * ch, C64::new(sh, 0.0))
                }
            }
            FamilyKind::Tan => {
                let (s, c) = (phi.re - self.k).sin_cos();
                (C64::new(ls0, 0.0), vr * c - a * s, C64::new(c, 0.0))
            }
            FamilyKind::Cot => {
                let (s, c) = (phi.re - self.k).sin_cos();
                (C64::new(ls0, 0.0), vr * s + a * c, C64::new(s, 0.0))
            }
            FamilyKind::Integrated => unreachable!("closed-form cores are never integrated"),
        };
        if self.is_real() {
            Ok(CoreSample { log_scale: C64::new(ls.re, 0.0), n: C64::new(n.re, 0.0), d: C64::new(d.re, 0.0) })
        } else {
            Ok(CoreSample { log_scale: ls, n, d })
        }
    }

    fn is_real(&self) -> bool {
        match self.kind {
            FamilyKind::Tanh | FamilyKind::Coth | FamilyKind::Tan | FamilyKind::Cot => true,
            _ => self.intrinsic == IntrinsicKind::Real && self.v_r.is_real() && self.amp.is_real(),
        }
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn poles(&self) -> &[f64] {
        &self.poles
    }
}
