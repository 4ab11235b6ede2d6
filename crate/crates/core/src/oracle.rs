//! Direct integration of `x' = A(t) x + u(t)`, used as ground truth for the
//! RCE route.

use nalgebra::{Matrix2, SMatrix, Vector2};

use crate::error::{LtvError, Result};
use crate::solution::{forced_response, StateTransition};
use crate::system::Ltv2System;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    Rk4Fixed { step: f64 },
    Rk45Adaptive { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub method: OracleMethod,
    pub max_steps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { method: OracleMethod::Rk45Adaptive { tol: 1e-10 }, max_steps: 2_000_000 }
    }
}

impl OracleConfig {
    pub fn rk4(step: f64) -> Self {
        OracleConfig { method: OracleMethod::Rk4Fixed { step }, ..Default::default() }
    }

    pub fn rk45(tol: f64) -> Self {
        OracleConfig { method: OracleMethod::Rk45Adaptive { tol }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            OracleMethod::Rk4Fixed { step } => step > 0.0 && step.is_finite(),
            OracleMethod::Rk45Adaptive { tol } => tol > 0.0 && tol.is_finite(),
        };
        if ok && self.max_steps > 0 {
            Ok(())
        } else {
            Err(LtvError::Invalid(format!("invalid oracle configuration {self:?}")))
        }
    }
}

type State<const C: usize> = SMatrix<C64, 2, C>;

fn max_abs<const C: usize>(y: &State<C>) -> f64 {
    y.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_finite<const C: usize>(y: &State<C>, t: f64) -> Result<()> {
    if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(LtvError::NonFinite { t, what: "oracle state".into() })
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Advance `y` from `t0` to `t1`.
fn advance<const C: usize>(
    f: &impl Fn(f64, &State<C>) -> Result<State<C>>,
    t0: f64,
    y: State<C>,
    t1: f64,
    cfg: &OracleConfig,
) -> Result<State<C>> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y);
    }
    match cfg.method {
        OracleMethod::Rk4Fixed { step } => {
            let n = (span.abs() / step).ceil().max(1.0) as usize;
            if n > cfg.max_steps {
                return Err(LtvError::Integration { t: t0, reason: format!("{n} steps exceed the budget") });
            }
            let h = span / n as f64;
            let mut y = y;
            for k in 0..n {
                let t = t0 + k as f64 * h;
                let k1 = f(t, &y)?;
                let k2 = f(t + h / 2.0, &(y + k1 * c(h / 2.0)))?;
                let k3 = f(t + h / 2.0, &(y + k2 * c(h / 2.0)))?;
                let k4 = f(t + h, &(y + k3 * c(h)))?;
                y += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
                check_finite(&y, t + h)?;
            }
            Ok(y)
        }
        OracleMethod::Rk45Adaptive { tol } => rkf45(f, t0, y, t1, tol, cfg.max_steps),
    }
}

/// Runge-Kutta-Fehlberg 4(5), propagating the fifth-order solution.
fn rkf45<const C: usize>(
    f: &impl Fn(f64, &State<C>) -> Result<State<C>>,
    t0: f64,
    y0: State<C>,
    t1: f64,
    tol: f64,
    max_steps: usize,
) -> Result<State<C>> {
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * (t1 - t0).abs().min(1e-3);
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > max_steps {
            return Err(LtvError::Integration { t, reason: "step budget exhausted".into() });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k1 = f(t, &y)?;
        let k2 = f(t + h / 4.0, &(y + k1 * c(h / 4.0)))?;
        let k3 = f(t + 3.0 * h / 8.0, &(y + (k1 * c(3.0 / 32.0) + k2 * c(9.0 / 32.0)) * c(h)))?;
        let k4 = f(
            t + 12.0 * h / 13.0,
            &(y + (k1 * c(1932.0 / 2197.0) - k2 * c(7200.0 / 2197.0) + k3 * c(7296.0 / 2197.0)) * c(h)),
        )?;
        let k5 = f(
            t + h,
            &(y + (k1 * c(439.0 / 216.0) - k2 * c(8.0) + k3 * c(3680.0 / 513.0) - k4 * c(845.0 / 4104.0)) * c(h)),
        )?;
        let k6 = f(
            t + h / 2.0,
            &(y + (k2 * c(2.0) - k1 * c(8.0 / 27.0) - k3 * c(3544.0 / 2565.0) + k4 * c(1859.0 / 4104.0)
                - k5 * c(11.0 / 40.0))
                * c(h)),
        )?;
        let y5 = y + (k1 * c(16.0 / 135.0) + k3 * c(6656.0 / 12825.0) + k4 * c(28561.0 / 56430.0)
            - k5 * c(9.0 / 50.0)
            + k6 * c(2.0 / 55.0))
            * c(h);
        let y4 = y + (k1 * c(25.0 / 216.0) + k3 * c(1408.0 / 2565.0) + k4 * c(2197.0 / 4104.0) - k5 * c(0.2)) * c(h);
        let err = max_abs(&(y5 - y4));
        let scale = tol * (1.0 + max_abs(&y).max(max_abs(&y5)));
        if err <= scale || h.abs() < 1e-14 * (1.0 + t.abs()) {
            t += h;
            y = y5;
            check_finite(&y, t)?;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.84 * (scale / err).powf(0.25)).clamp(0.1, 4.0) };
        h *= factor;
    }
    Ok(y)
}

/// `Phi(t, t_ref)` from `Phi' = A Phi`, `Phi(t_ref) = I`.
pub fn rk_transition(sys: &Ltv2System, t_ref: f64, t: f64, cfg: &OracleConfig) -> Result<Matrix2<C64>> {
    cfg.validate()?;
    for s in [t_ref, t] {
        if !sys.contains(s) {
            let (lo, hi) = sys.domain();
            return Err(LtvError::Domain { t: s, lo, hi });
        }
    }
    let f = |s: f64, y: &Matrix2<C64>| Ok(sys.state_matrix(s)? * y);
    advance(&f, t_ref, Matrix2::identity(), t, cfg)
}

/// `x(t)` from `x' = A x + u`, `x(t_ref) = x0`.
pub fn rk_trajectory(sys: &Ltv2System, t_ref: f64, x0: Vector2<C64>, t: f64, cfg: &OracleConfig) -> Result<Vector2<C64>> {
    Ok(march_forced(sys, t_ref, x0, &[t], cfg)?[0])
}

fn march<const C: usize>(
    f: &impl Fn(f64, &State<C>) -> Result<State<C>>,
    t_ref: f64,
    y0: State<C>,
    times: &[f64],
    cfg: &OracleConfig,
) -> Result<Vec<State<C>>> {
    cfg.validate()?;
    let mut out = vec![y0; times.len()];
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    // Forward from t_ref through the later points, backward through the earlier.
    let (before, after): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| times[i] < t_ref);
    let (mut t, mut y) = (t_ref, y0);
    for i in after {
        y = advance(f, t, y, times[i], cfg)?;
        t = times[i];
        out[i] = y;
    }
    let (mut t, mut y) = (t_ref, y0);
    for i in before.into_iter().rev() {
        y = advance(f, t, y, times[i], cfg)?;
        t = times[i];
        out[i] = y;
    }
    Ok(out)
}

fn march_transition(sys: &Ltv2System, t_ref: f64, times: &[f64], cfg: &OracleConfig) -> Result<Vec<Matrix2<C64>>> {
    let f = |s: f64, y: &Matrix2<C64>| Ok(sys.state_matrix(s)? * y);
    march(&f, t_ref, Matrix2::identity(), times, cfg)
}

fn march_forced(sys: &Ltv2System, t_ref: f64, x0: Vector2<C64>, times: &[f64], cfg: &OracleConfig) -> Result<Vec<Vector2<C64>>> {
    let f = |s: f64, y: &Vector2<C64>| Ok(sys.state_matrix(s)? * y + sys.input_at(s)?);
    march(&f, t_ref, x0, times, cfg)
}

/// Sampled oracle trajectories of `Phi(t, t_ref)` on a grid.
pub fn rk_transition_grid(sys: &Ltv2System, t_ref: f64, times: &[f64], cfg: &OracleConfig) -> Result<Vec<Matrix2<C64>>> {
    march_transition(sys, t_ref, times, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub max_error: f64,
    pub worst_t: f64,
    /// Worst error and its time for each entry, row-major.
    pub entries: Vec<(f64, f64)>,
    pub points: usize,
}

impl CompareReport {
    fn new(n: usize) -> Self {
        CompareReport { max_error: 0.0, worst_t: f64::NAN, entries: vec![(0.0, f64::NAN); n], points: 0 }
    }

    fn record(&mut self, t: f64, errors: impl Iterator<Item = f64>) {
        self.points += 1;
        for (slot, e) in self.entries.iter_mut().zip(errors) {
            if e > slot.0 || e.is_nan() {
                *slot = (e, t);
            }
            if e > self.max_error || e.is_nan() {
                self.max_error = e;
                self.worst_t = t;
            }
        }
    }
}

/// Entrywise `|phi_method - phi_oracle|` over `grid`.
pub fn compare_stm(stm: &StateTransition, sys: &Ltv2System, grid: &[f64], cfg: &OracleConfig) -> Result<CompareReport> {
    let oracle = march_transition(sys, stm.t_ref, grid, cfg)?;
    let mut report = CompareReport::new(4);
    for (&t, o) in grid.iter().zip(&oracle) {
        let m = stm.eval_complex(t)?;
        let d = m - o;
        report.record(t, (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|ij| d[ij].norm()));
    }
    Ok(report)
}

/// Forced response from the state-transition matrix against direct
/// integration of the non-autonomous system.
pub fn forced_compare(
    sys: &Ltv2System,
    stm: &StateTransition,
    x0: Vector2<C64>,
    grid: &[f64],
    cfg: &OracleConfig,
) -> Result<CompareReport> {
    let oracle = march_forced(sys, stm.t_ref, x0, grid, cfg)?;
    let mut report = CompareReport::new(2);
    for (&t, o) in grid.iter().zip(&oracle) {
        let x = forced_response(sys, stm, x0, t)?;
        report.record(t, (x - o).iter().map(|z| z.norm()).collect::<Vec<_>>().into_iter());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::system::FnMatrix;
    use crate::TimeFn;

    fn eq31() -> Ltv2System {
        Ltv2System::homogeneous(FnMatrix::parse([["3", "1"], ["2", "2"]]).unwrap(), (0.0, 2.0), None).unwrap()
    }

    fn eq31_phi(t: f64) -> Matrix2<C64> {
        let (a, b) = (t.exp(), (4.0 * t).exp());
        Matrix2::new(c(a + 2.0 * b), c(b - a), c(2.0 * b - 2.0 * a), c(2.0 * a + b)) / c(3.0)
    }

    #[test]
    fn lti_transition_both_methods() {
        let s = eq31();
        for cfg in [OracleConfig::rk45(1e-10), OracleConfig::rk4(1e-3)] {
            let m = rk_transition(&s, 0.0, 1.0, &cfg).unwrap();
            assert!((m - eq31_phi(1.0)).norm() < 1e-8 * eq31_phi(1.0).norm(), "{cfg:?}");
            assert_eq!(rk_transition(&s, 0.7, 0.7, &cfg).unwrap(), Matrix2::identity());
        }
        let back = rk_transition(&s, 1.0, 0.0, &OracleConfig::default()).unwrap();
        let err = (back * eq31_phi(1.0) - Matrix2::identity()).norm();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn rk4_is_fourth_order() {
        let s = eq31();
        let exact = eq31_phi(1.0);
        let e1 = (rk_transition(&s, 0.0, 1.0, &OracleConfig::rk4(0.02)).unwrap() - exact).norm();
        let e2 = (rk_transition(&s, 0.0, 1.0, &OracleConfig::rk4(0.01)).unwrap() - exact).norm();
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn periodic_example_monodromy() {
        let m = FnMatrix::parse([
            ["-1 + 1.5*sin(t)^2", "-1 - 1.5*sin(t)*cos(t)"],
            ["1 - 1.5*sin(t)*cos(t)", "-1 + 1.5*cos(t)^2"],
        ])
        .unwrap();
        let s = Ltv2System::homogeneous(m, (0.0, 4.0 * PI), None).unwrap();
        let p = rk_transition(&s, 0.0, 2.0 * PI, &OracleConfig::default()).unwrap();
        let expect = Matrix2::new(c((-2.0 * PI).exp()), c(0.0), c(0.0), c(PI.exp()));
        assert!((p - expect).norm() < 1e-6 * expect.norm(), "{p}");
    }

    #[test]
    fn composition_and_errors() {
        let s = eq31();
        let cfg = OracleConfig::default();
        let a = rk_transition(&s, 0.0, 0.6, &cfg).unwrap();
        let b = rk_transition(&s, 0.6, 1.4, &cfg).unwrap();
        let ab = rk_transition(&s, 0.0, 1.4, &cfg).unwrap();
        assert!((b * a - ab).norm() < 1e-8 * ab.norm());
        assert!(matches!(rk_transition(&s, 0.0, 3.0, &cfg), Err(LtvError::Domain { .. })));
        assert!(OracleConfig::rk4(0.0).validate().is_err());
        let tight = OracleConfig { max_steps: 3, ..OracleConfig::rk4(1e-3) };
        assert!(matches!(rk_transition(&s, 0.0, 1.0, &tight), Err(LtvError::Integration { .. })));
    }

    #[test]
    fn forced_step_matches_partial_fractions() {
        let a = FnMatrix::parse([["3", "1"], ["2", "2"]]).unwrap();
        let s = Ltv2System::new(a, [TimeFn::zero(), TimeFn::one()], (0.0, 2.0), None).unwrap();
        let x = rk_trajectory(&s, 0.0, Vector2::zeros(), 1.0, &OracleConfig::default()).unwrap();
        let e = 1f64.exp();
        assert!((x[0].re - (e.powi(4) / 12.0 - e / 3.0 + 0.25)).abs() < 1e-8);
    }
}
