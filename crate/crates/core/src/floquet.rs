//! Floquet analysis of periodic systems.

use std::fmt;

use nalgebra::Matrix2;

use crate::error::{LtvError, Result};
use crate::solution::FundamentalMatrix;
use crate::spectral::DynamicSpectrum;
use crate::system::ModulationForm;
use crate::timefn::{linspace, quad, Codomain, TimeFn};
use crate::C64;

/// Threshold on `max Re r_i` used by [`classify_stability`].
pub const STABILITY_TOL: f64 = 1e-8;

/// Relative mismatch of `lambda_i(t + T)` and `lambda_i(t)` above which the
/// spectrum is rejected as non-periodic.
pub const PERIODICITY_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    AsymptoticallyStable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "ASYMPTOTICALLY_STABLE",
            Stability::Unstable => "UNSTABLE",
            Stability::Marginal => "MARGINAL",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `phi(t, t_ref) = Q(t) e^{R (t - t_ref)} Q(t_ref)^-1` with `Q` periodic and
/// `Q(t_ref) = I`.
#[derive(Clone, Debug)]
pub struct FloquetData {
    pub period: f64,
    pub t_ref: f64,
    /// `phi(t_ref + T, t_ref)`.
    pub monodromy: Matrix2<C64>,
    pub exponents: [C64; 2],
    pub multipliers: [C64; 2],
    /// Zero-mean periodic parts of the column exponents.
    pub periodic_exponents: [TimeFn; 2],
    pub r: Matrix2<C64>,
    /// `F(t_ref)`.
    pub w: Matrix2<C64>,
    w_inv: Matrix2<C64>,
    fund: FundamentalMatrix,
}

impl FloquetData {
    /// `Q(t) = F(t) diag(e^{-r_i (t - t_ref)}) W^-1`.
    pub fn q(&self, t: f64) -> Result<Matrix2<C64>> {
        let f = self.fund.eval(t)?;
        let s = t - self.t_ref;
        let d = Matrix2::from_diagonal(&nalgebra::Vector2::new(
            (-self.exponents[0] * s).exp(),
            (-self.exponents[1] * s).exp(),
        ));
        Ok(f * d * self.w_inv)
    }

    /// `n` samples of `Q` over one period starting at `t_ref`.
    pub fn q_samples(&self, n: usize) -> Result<Vec<(f64, Matrix2<C64>)>> {
        linspace(self.t_ref, self.t_ref + self.period, n.max(2))
            .into_iter()
            .map(|t| Ok((t, self.q(t)?)))
            .collect()
    }

    /// `e^{R T}`.
    pub fn exp_rt(&self) -> Matrix2<C64> {
        let d = Matrix2::from_diagonal(&nalgebra::Vector2::new(self.multipliers[0], self.multipliers[1]));
        self.w * d * self.w_inv
    }

    pub fn fundamental(&self) -> &FundamentalMatrix {
        &self.fund
    }
}

fn periodicity_check(spectrum: &DynamicSpectrum, mf: &ModulationForm, period: f64) -> Result<()> {
    let (lo, hi) = mf.domain;
    let poles = spectrum.poles();
    let gap = 1e-3 * period;
    let near = |t: f64| poles.iter().any(|p| (p - t).abs() < gap);
    let top = (hi - period).max(lo);
    for t in linspace(lo, top, 64) {
        if near(t) || near(t + period) || t + period > hi {
            continue;
        }
        for (i, lam) in [&spectrum.lambda1, &spectrum.lambda2].into_iter().enumerate() {
            let (a, b) = match (lam.eval(t), lam.eval(t + period)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            let dev = (b - a).norm() / (1.0 + a.norm());
            if dev > PERIODICITY_TOL {
                return Err(LtvError::NotPeriodic {
                    what: format!("lambda{} (build the spectrum with periodic_primitive)", i + 1),
                    period,
                    t,
                    deviation: dev,
                });
            }
        }
    }
    Ok(())
}

/// Split `[a, b]` at the given interior points.
fn pieces(a: f64, b: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|&p| p > a && p < b).collect();
    pts.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut s = a;
    for p in pts {
        out.push((s, p));
        s = p;
    }
    out.push((s, b));
    out
}

/// Exponent `r_i`: the period average of `lambda_i` by quadrature when it is
/// pole-free on the period, otherwise the growth of the column over one
/// period read through the core.
fn exponent(fund: &FundamentalMatrix, i: usize, t0: f64, period: f64) -> Result<C64> {
    let member = fund.spectrum.members()[i];
    let t1 = t0 + period;
    let lam = if i == 0 { &fund.spectrum.lambda1 } else { &fund.spectrum.lambda2 };
    let crosses = member.poles().iter().any(|&p| p >= t0 - 1e-9 && p <= t1 + 1e-9);
    if !crosses {
        if let Ok(r) = quad::integrate(|t| lam.eval(t), t0, t1, quad::DEFAULT_TOL) {
            return Ok(r.value / period);
        }
    }
    let phi = fund.exponent(i, t1)? - fund.exponent(i, t0)?;
    if !member.is_real() {
        return Ok(phi / period);
    }
    // ln|.| drops the sign of the column; restore it from the dominant entry.
    let (a, b) = (member.sample(t0)?, member.sample(t1)?);
    let ratio = if a.d.norm() >= a.n.norm() { b.d / a.d } else { b.n / a.n };
    let flip = if ratio.re < 0.0 { std::f64::consts::PI } else { 0.0 };
    Ok(C64::new(phi.re, flip) / period)
}

pub fn floquet_decompose(
    fund: &FundamentalMatrix,
    mf: &ModulationForm,
    spectrum: &DynamicSpectrum,
    period: f64,
) -> Result<FloquetData> {
    let (lo, hi) = mf.domain;
    let t_ref = fund.t_ref;
    if !(period > 0.0) || t_ref + period > hi + 1e-12 * (1.0 + hi.abs()) || t_ref < lo {
        return Err(LtvError::Invalid(format!(
            "one period [{t_ref}, {}] must lie in the domain [{lo}, {hi}]",
            t_ref + period
        )));
    }
    periodicity_check(spectrum, mf, period)?;
    let t1 = (t_ref + period).min(hi);
    let w = fund.eval(t_ref)?;
    let w_inv = w.try_inverse().ok_or_else(|| LtvError::SingularReference {
        t_ref,
        reason: "fundamental matrix is not invertible".into(),
    })?;
    let monodromy = fund.eval(t1)? * w_inv;
    let exponents = [exponent(fund, 0, t_ref, period)?, exponent(fund, 1, t_ref, period)?];
    let multipliers = [(exponents[0] * period).exp(), (exponents[1] * period).exp()];
    let r = w * Matrix2::from_diagonal(&nalgebra::Vector2::new(exponents[0], exponents[1])) * w_inv;

    let mut periodic_exponents = Vec::with_capacity(2);
    for (i, member) in fund.spectrum.members().into_iter().enumerate() {
        let real = member.is_real();
        let rate = if real { C64::new(exponents[i].re, 0.0) } else { exponents[i] };
        let raw = {
            let f = fund.clone();
            move |t: f64| Ok(f.exponent(i, t)? - rate * (t - t_ref))
        };
        let mut mean = C64::new(0.0, 0.0);
        for (a, b) in pieces(t_ref, t1, member.poles()) {
            mean += quad::integrate(&raw, a, b, quad::DEFAULT_TOL)?.value;
        }
        mean /= period;
        let codomain = if real { Codomain::Real } else { Codomain::Complex };
        let p = TimeFn::native(codomain, move |t| Ok(raw(t)? - mean)).with_domain(lo, hi);
        periodic_exponents.push(p);
    }
    let p2 = periodic_exponents.pop().unwrap();
    let p1 = periodic_exponents.pop().unwrap();

    Ok(FloquetData {
        period,
        t_ref,
        monodromy,
        exponents,
        multipliers,
        periodic_exponents: [p1, p2],
        r,
        w,
        w_inv,
        fund: fund.clone(),
    })
}

pub fn classify_stability(fd: &FloquetData) -> Stability {
    classify_exponents(&fd.exponents)
}

pub fn classify_exponents(r: &[C64]) -> Stability {
    let top = r.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if top > STABILITY_TOL {
        Stability::Unstable
    } else if top < -STABILITY_TOL {
        Stability::AsymptoticallyStable
    } else {
        Stability::Marginal
    }
}
