//! Shared fixtures, closed forms and property checks for the integration
//! tests and the acceptance harness.
#![allow(dead_code)]

use ltvr_core::analysis::{analyze, Analysis, AnalysisOptions};
use ltvr_core::catalog::fixture;
use ltvr_core::rce::rce_residual;
use ltvr_core::spectral::{regular_points, symmetrize, verify_chain};
use ltvr_core::system::{FnMatrix, Ltv2System};
use ltvr_core::timefn::quad;
use ltvr_core::{Result, TimeFn, C64};
use nalgebra::Matrix2;
use rand::Rng;

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn max_abs(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn example(key: &str) -> (Ltv2System, AnalysisOptions) {
    let f = fixture(key).unwrap();
    (f.spec.system().unwrap(), f.spec.options())
}

pub fn run_example(key: &str) -> Analysis {
    let (s, o) = example(key);
    analyze(&s, &o).unwrap()
}

pub fn eq31_phi(t: f64) -> Matrix2<C64> {
    let (a, b) = (t.exp(), (4.0 * t).exp());
    Matrix2::new(c(a + 2.0 * b), c(b - a), c(2.0 * b - 2.0 * a), c(2.0 * a + b)) / c(3.0)
}

/// `exp(A s)` for the repeated-root system, `s = t - t_ref`.
pub fn eq33_phi(s: f64) -> Matrix2<C64> {
    let e = (2.0 * s).exp();
    Matrix2::new(c((1.0 - s) * e), c(s * e), c(-s * e), c((1.0 + s) * e))
}

pub fn eq35_phi(t: f64) -> Matrix2<C64> {
    let (sn, cs, ex) = (t.sin(), t.cos(), (-t).exp());
    Matrix2::new(c(ex * (2.0 * sn + cs)), c(ex * sn), c(-5.0 * ex * sn), c(ex * (cs - 2.0 * sn)))
}

/// A randomly drawn system: either constant or smoothly time-varying on
/// `[0, 2]`, with `a12` bounded away from zero.
#[derive(Debug, Clone)]
pub struct RandomSystem {
    pub entries: [[String; 2]; 2],
}

impl RandomSystem {
    pub fn draw(rng: &mut impl Rng) -> Self {
        let lti = rng.gen_bool(0.25);
        let p: [f64; 9] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        Self::from_params(lti, p)
    }

    /// Coefficients in `[-1, 1]`.
    pub fn from_params(lti: bool, p: [f64; 9]) -> Self {
        let entries = if lti {
            [
                [format!("{:.6}", 2.0 * p[0]), format!("{:.6}", 1.0 + 0.5 * p[1])],
                [format!("{:.6}", 2.0 * p[2]), format!("{:.6}", 2.0 * p[3])],
            ]
        } else {
            [
                [format!("{:.6} + {:.6}*sin({:.6}*t)", p[0], p[1], 1.0 + p[2]), format!("1 + {:.6}*cos(t)", 0.5 * p[3])],
                [format!("{:.6} + {:.6}*t", p[4], p[5]), format!("{:.6} + {:.6}/(t+1)", p[6], p[7])],
            ]
        };
        RandomSystem { entries }
    }

    /// A `2 pi`-periodic system on `[0, 4 pi]`.
    pub fn periodic(p: [f64; 9]) -> Self {
        RandomSystem {
            entries: [
                [format!("{:.6} + {:.6}*sin(t)", p[0], p[1]), format!("1 + {:.6}*cos(t)", 0.5 * p[2])],
                [format!("{:.6} + {:.6}*cos(t)", p[3], p[4]), format!("{:.6} + {:.6}*sin(t)^2", p[5], p[6])],
            ],
        }
    }

    pub fn system(&self) -> Ltv2System {
        self.system_on((0.0, 2.0), None)
    }

    pub fn system_on(&self, domain: (f64, f64), period: Option<f64>) -> Ltv2System {
        let e = &self.entries;
        let m = FnMatrix::parse([[e[0][0].as_str(), &e[0][1]], [&e[1][0], &e[1][1]]]).unwrap();
        Ltv2System::homogeneous(m, domain, period).unwrap()
    }

    pub fn analyze(&self) -> Result<Analysis> {
        analyze(&self.system(), &AnalysisOptions::default())
    }
}

/// Probe points away from the poles of either RCE solution.
pub fn probes(an: &Analysis, n: usize) -> Vec<f64> {
    let (lo, hi) = an.mf.domain;
    let margin = 0.02 * (hi - lo);
    regular_points(lo + margin, hi - margin, n, &an.spectrum.poles(), 0.02 * (hi - lo))
}

/// Relative residual of `v' + omega01 v^2 - omega02` for both solutions.
pub fn rce_residual_dev(an: &Analysis) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in probes(an, 25) {
        for m in [an.v1(), an.v2()] {
            let v = m.v.eval(t)?;
            let w2 = an.mf.omega02.eval(t)?;
            let w1 = an.mf.omega01.eval(t)?;
            let scale = 1.0 + (w1 * v * v).norm() + w2.norm();
            worst = worst.max(rce_residual(&an.mf, &m.v, t)? / scale);
        }
    }
    Ok(worst)
}

/// `v1 - 2/p` solves the RCE and equals `v2`.
pub fn closure_dev(an: &Analysis) -> Result<f64> {
    let g = an.gauge.as_ref().expect("symmetrizing gauge");
    let other = &an.v1().v - &(&TimeFn::constant(2.0) / &g.p);
    let mut worst = 0.0f64;
    for t in probes(an, 25) {
        let v = other.eval(t)?;
        let scale = 1.0 + v.norm() * v.norm() + an.mf.omega02.eval(t)?.norm();
        worst = worst.max(rce_residual(&an.mf, &other, t)? / scale);
        worst = worst.max((v - an.v2().v.eval(t)?).norm() / (1.0 + v.norm()));
    }
    Ok(worst)
}

/// `v_R = -v_I' / (2 omega01 v_I)` with `v_I'` from finite differences.
pub fn real_part_relation_dev(an: &Analysis) -> Result<f64> {
    let p = an.primitive.as_ref().expect("primitive");
    let mut worst = 0.0f64;
    for t in probes(an, 25) {
        let vi = p.v_i.eval(t)?;
        if vi.norm() < 1e-3 {
            continue;
        }
        let dvi = p.v_i.fd_derivative(t, 1e-4)?;
        let expect = -dvi / (an.mf.omega01.eval(t)? * vi * 2.0);
        let vr = p.v_r.eval(t)?;
        worst = worst.max((vr - expect).norm() / (1.0 + vr.norm()));
    }
    Ok(worst)
}

/// Worst deviation of the modulation, symmetric and diagonal stages.
pub fn chain_dev(an: &Analysis) -> Result<f64> {
    let g = an.gauge.as_ref().expect("symmetrizing gauge");
    let r = verify_chain(&an.sys, &an.mf, g, &an.spectrum)?;
    Ok(r.stages.iter().take(3).map(|s| s.max_deviation).fold(0.0, f64::max))
}

/// `|A_f[1][0] - A_f[0][1]|` of the symmetric form.
pub fn symmetry_dev(an: &Analysis) -> Result<f64> {
    let g = an.gauge.as_ref().expect("symmetrizing gauge");
    symmetrize(&an.mf, g)?;
    let mut worst = 0.0f64;
    let (p, q) = (&g.p, &g.q);
    for t in probes(an, 25) {
        let a = an.mf.a0().eval(t)?;
        let (pv, qv, pd, qd) = (p.eval(t)?, q.eval(t)?, p.derivative(t, None)?, q.derivative(t, None)?);
        let m = Matrix2::new(c(1.0), c(0.0), -qv, pv);
        let md = Matrix2::new(c(0.0), c(0.0), -qd, pd);
        let af = ltvr_core::system::gauge_action(&a, &m, &md, t)?;
        worst = worst.max((af[(1, 0)] - af[(0, 1)]).norm() / (1.0 + af[(0, 1)].norm()));
    }
    Ok(worst)
}

/// `det phi(t, t_ref) = exp(∫ tr A)`, relative.
pub fn liouville_dev(an: &Analysis) -> Result<f64> {
    let t_ref = an.fund.t_ref;
    let phi = an.stm(t_ref)?;
    let tr = an.sys.trace();
    let mut worst = 0.0f64;
    for t in probes(an, 15) {
        let det = phi.eval_complex(t)?.determinant();
        let integral = quad::integrate(|s| tr.eval(s), t_ref, t, 1e-12)?.value;
        let expect = integral.exp();
        worst = worst.max((det - expect).norm() / expect.norm());
    }
    Ok(worst)
}

/// `phi(t2, t0) = phi(t2, t1) phi(t1, t0)` with the transition matrices
/// referenced at different times.
pub fn composition_dev(an: &Analysis, t0: f64, t1: f64, t2: f64) -> Result<f64> {
    let a = an.stm(t0)?;
    let b = an.stm(t1)?;
    let lhs = a.eval_complex(t2)?;
    let rhs = b.eval_complex(t2)? * a.eval_complex(t1)?;
    Ok(max_abs(&(lhs - rhs)) / (1.0 + max_abs(&lhs)))
}
