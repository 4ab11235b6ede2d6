//! Numerical RCE solutions carried in projective coordinates.
//!
//! The pair `(n, d)` obeys `n' = omega02 d`, `d' = omega01 n`, so `v = n/d`
//! solves the RCE and passes through poles of `v` without blowing up.

use std::fmt;

use crate::error::{LtvError, Result};
use crate::ode::{self, Dp5Config, State};
use crate::system::ModulationForm;
use crate::timefn::TimeFn;
use crate::C64;

use super::core_factor::{locate_poles, CoreFactor, CoreSample};

/// Below this relative size of `d` a complex trajectory cannot be normalized.
const COMPLEX_D_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Node {
    t: f64,
    s: CoreSample,
}

#[derive(Debug, Clone, Copy)]
struct Extension {
    period: f64,
    log_mu: C64,
    sign: f64,
}

/// An integrated RCE trajectory, sampled at the accepted steps of an
/// adaptive Dormand–Prince run and densely evaluated by one further step
/// from the nearest node on the seed side.
pub struct ProjectiveTrajectory {
    omega01: TimeFn,
    omega02: TimeFn,
    real: bool,
    span: (f64, f64),
    domain: (f64, f64),
    seed_t: f64,
    nodes: Vec<Node>,
    ext: Option<Extension>,
    poles: Vec<f64>,
}

impl fmt::Debug for ProjectiveTrajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ProjectiveTrajectory({} nodes on [{}, {}], seed at {}, {})",
            self.nodes.len(),
            self.span.0,
            self.span.1,
            self.seed_t,
            if self.real { "real" } else { "complex" }
        )?;
        if let Some(e) = &self.ext {
            write!(f, ", period {}", e.period)?;
        }
        Ok(())
    }
}

fn normalize(real: bool, t: f64, ls: C64, y: &State<2>) -> Result<CoreSample> {
    let (n, d) = (y[0], y[1]);
    let norm = (n.norm_sqr() + d.norm_sqr()).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(LtvError::Integration { t, reason: "projective state collapsed".into() });
    }
    if real {
        Ok(CoreSample {
            log_scale: ls + norm.ln(),
            n: C64::new(n.re / norm, 0.0),
            d: C64::new(d.re / norm, 0.0),
        })
    } else {
        if d.norm() < COMPLEX_D_FLOOR * norm {
            return Err(LtvError::Integration { t, reason: "complex RCE trajectory reached a real pole".into() });
        }
        Ok(CoreSample { log_scale: ls + d.ln(), n: n / d, d: C64::new(1.0, 0.0) })
    }
}

impl ProjectiveTrajectory {
    fn rhs(&self) -> impl Fn(f64, &State<2>) -> Result<State<2>> + '_ {
        move |t, y| Ok([self.omega02.eval(t)? * y[1], self.omega01.eval(t)? * y[0]])
    }

    /// Integrate from `(n0, d0)` at `t0` across `span`. The trajectory is real
    /// when the seed and the coefficients are.
    pub fn integrate(mf: &ModulationForm, n0: C64, d0: C64, t0: f64, span: (f64, f64)) -> Result<Self> {
        let (lo, hi) = span;
        if !(lo < hi) {
            return Err(LtvError::Invalid(format!("integration span [{lo}, {hi}] is empty")));
        }
        if t0 < lo || t0 > hi || !mf.contains(lo) || !mf.contains(hi) {
            return Err(LtvError::Domain { t: t0, lo: mf.domain.0, hi: mf.domain.1 });
        }
        let real = n0.im == 0.0 && d0.im == 0.0 && mf.omega01.is_real() && mf.omega02.is_real();
        let mut traj = ProjectiveTrajectory {
            omega01: mf.omega01.clone(),
            omega02: mf.omega02.clone(),
            real,
            span,
            domain: span,
            seed_t: t0,
            nodes: Vec::new(),
            ext: None,
            poles: Vec::new(),
        };
        let seed = normalize(real, t0, C64::new(0.0, 0.0), &[n0, d0])?;
        let mut back = vec![];
        let mut fwd = vec![Node { t: t0, s: seed }];
        traj.run(seed, t0, lo, &mut back)?;
        traj.run(seed, t0, hi, &mut fwd)?;
        back.reverse();
        back.extend(fwd);
        traj.nodes = back;
        if real {
            let times: Vec<f64> = traj.nodes.iter().map(|n| n.t).collect();
            traj.poles = locate_poles(&|t| traj.sample_base(t), &times)?;
        }
        Ok(traj)
    }

    fn run(&self, seed: CoreSample, t0: f64, t1: f64, out: &mut Vec<Node>) -> Result<()> {
        if t0 == t1 {
            return Ok(());
        }
        let f = self.rhs();
        let mut ls = seed.log_scale;
        let real = self.real;
        ode::integrate(&f, t0, [seed.n, seed.d], t1, &Dp5Config::default(), |t, y| {
            let s = normalize(real, t, ls, y)?;
            ls = s.log_scale;
            out.push(Node { t, s });
            Ok([s.n, s.d])
        })?;
        Ok(())
    }

    /// Integrate over one period `[lo, lo + period]` and extend by the
    /// Floquet multiplier of the seed, which must be a fixed point of the
    /// period map. `forward` seeds at `lo`, otherwise at `lo + period`.
    pub fn periodic(mf: &ModulationForm, n0: C64, d0: C64, period: f64, forward: bool) -> Result<Self> {
        let lo = mf.domain.0;
        let end = lo + period;
        let t0 = if forward { lo } else { end };
        let mut traj = ProjectiveTrajectory::integrate(mf, n0, d0, t0, (lo, end))?;
        let first = traj.nodes[0].s;
        let last = traj.nodes[traj.nodes.len() - 1].s;
        let (a, b) = if first.d.norm() >= first.n.norm() { (first.d, last.d) } else { (first.n, last.n) };
        let ratio = b / a;
        let (log_mu, sign) = if traj.real {
            (last.log_scale - first.log_scale + ratio.norm().ln(), ratio.re.signum())
        } else {
            (last.log_scale - first.log_scale + ratio.ln(), 1.0)
        };
        traj.ext = Some(Extension { period, log_mu, sign });
        traj.domain = mf.domain;
        if traj.real {
            let base = std::mem::take(&mut traj.poles);
            let (dlo, dhi) = mf.domain;
            let kmax = ((dhi - lo) / period).ceil() as i64;
            let mut poles = vec![];
            for k in 0..=kmax {
                for &p in &base {
                    let s = p + k as f64 * period;
                    if s >= dlo && s <= dhi && poles.last().is_none_or(|&q: &f64| s - q > 1e-9 * period) {
                        poles.push(s);
                    }
                }
            }
            traj.poles = poles;
        }
        Ok(traj)
    }

    pub fn is_periodic(&self) -> bool {
        self.ext.is_some()
    }

    /// Logarithm of the period multiplier of `(n, d)`, with `i pi` added for a
    /// sign flip of a real trajectory.
    pub fn log_multiplier(&self) -> Option<C64> {
        self.ext.map(|e| {
            if e.sign < 0.0 {
                e.log_mu + C64::new(0.0, std::f64::consts::PI)
            } else {
                e.log_mu
            }
        })
    }

    pub fn seed_time(&self) -> f64 {
        self.seed_t
    }

    pub fn node_times(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.t).collect()
    }

    fn sample_base(&self, t: f64) -> Result<CoreSample> {
        let (lo, hi) = self.span;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(LtvError::Domain { t, lo: self.domain.0, hi: self.domain.1 });
        }
        let t = t.clamp(lo, hi);
        let k = self.nodes.partition_point(|n| n.t <= t);
        let node = if t >= self.seed_t {
            self.nodes[k.saturating_sub(1)]
        } else if k > 0 && self.nodes[k - 1].t == t {
            self.nodes[k - 1]
        } else {
            self.nodes[k.min(self.nodes.len() - 1)]
        };
        if node.t == t {
            return Ok(node.s);
        }
        let (y, _) = ode::dp5_step(&self.rhs(), node.t, &[node.s.n, node.s.d], t - node.t)?;
        normalize(self.real, t, node.s.log_scale, &y)
    }
}

impl CoreFactor for ProjectiveTrajectory {
    fn sample(&self, t: f64) -> Result<CoreSample> {
        let Some(e) = self.ext else {
            return self.sample_base(t);
        };
        let (dlo, dhi) = self.domain;
        let slack = 1e-12 * (1.0 + dlo.abs().max(dhi.abs()));
        if !(t >= dlo - slack && t <= dhi + slack) {
            return Err(LtvError::Domain { t, lo: dlo, hi: dhi });
        }
        let lo = self.span.0;
        let mut k = ((t - lo) / e.period).floor();
        let mut tb = t - k * e.period;
        if tb > self.span.1 {
            k += 1.0;
            tb -= e.period;
        }
        if tb < lo {
            k -= 1.0;
            tb += e.period;
        }
        let mut s = self.sample_base(tb.clamp(lo, self.span.1))?;
        if k != 0.0 {
            s.log_scale += e.log_mu * k;
            if e.sign < 0.0 && (k as i64) % 2 != 0 {
                s.n = -s.n;
                s.d = -s.d;
            }
        }
        Ok(s)
    }

    fn is_real(&self) -> bool {
        self.real
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn poles(&self) -> &[f64] {
        &self.poles
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{FnMatrix, Ltv2System};

    fn mf(m: [[&str; 2]; 2], lo: f64, hi: f64) -> ModulationForm {
        Ltv2System::homogeneous(FnMatrix::parse(m).unwrap(), (lo, hi), None)
            .unwrap()
            .modulation_form()
            .unwrap()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn stationary_point_stays_put() {
        let m = mf([["3", "1"], ["2", "2"]], 0.0, 2.0);
        let tr = ProjectiveTrajectory::integrate(&m, c(1.5), c(1.0), 0.0, (0.0, 2.0)).unwrap();
        for &t in &[0.0, 0.3, 1.234, 2.0] {
            let s = tr.sample(t).unwrap();
            assert!((s.ratio().unwrap().re - 1.5).abs() < 1e-12);
        }
        assert!(tr.poles().is_empty());
    }

    #[test]
    fn tanh_branch_from_zero() {
        let m = mf([["3", "1"], ["2", "2"]], 0.0, 2.0);
        let tr = ProjectiveTrajectory::integrate(&m, c(0.0), c(1.0), 0.0, (0.0, 2.0)).unwrap();
        for k in 0..=40 {
            let t = 0.05 * k as f64;
            let v = tr.sample(t).unwrap().ratio().unwrap().re;
            assert!((v - 1.5 * (1.5 * t).tanh()).abs() < 1e-9, "t={t} v={v}");
        }
    }

    #[test]
    fn crosses_cot_pole() {
        // omega01 = 1, omega02 = -1: v = cot(t) through t = pi.
        let m = mf([["0", "1"], ["-1", "0"]], 0.5, 4.0);
        let v0 = 0.5f64.cos() / 0.5f64.sin();
        let tr = ProjectiveTrajectory::integrate(&m, c(v0), c(1.0), 0.5, (0.5, 4.0)).unwrap();
        assert_eq!(tr.poles().len(), 1);
        assert!((tr.poles()[0] - std::f64::consts::PI).abs() < 1e-9);
        let t = 3.5f64;
        let v = tr.sample(t).unwrap().ratio().unwrap().re;
        assert!((v - t.cos() / t.sin()).abs() < 1e-8);
        assert!(tr.sample(std::f64::consts::PI).unwrap().ratio().is_none());
    }

    #[test]
    fn backward_from_interior_seed() {
        let m = mf([["1", "1"], ["-1", "3"]], 0.5, 3.0);
        let tr = ProjectiveTrajectory::integrate(&m, c(1.0), c(1.0), 1.0, (0.5, 3.0)).unwrap();
        for &t in &[0.5, 0.77, 1.0, 2.2, 3.0] {
            let v = tr.sample(t).unwrap().ratio().unwrap().re;
            assert!((v - 1.0 / t).abs() < 1e-8);
        }
    }

    #[test]
    fn complex_log_scale_is_continuous() {
        // omega01 = 1, omega02 = -1, v = j: d grows like e^{jt}.
        let m = mf([["0", "1"], ["-1", "0"]], 0.0, 10.0);
        let j = C64::new(0.0, 1.0);
        let tr = ProjectiveTrajectory::integrate(&m, j, c(1.0), 0.0, (0.0, 10.0)).unwrap();
        let s = tr.sample(10.0).unwrap();
        assert!((s.log_growth(false) - j * 10.0).norm() < 1e-8);
    }

    #[test]
    fn periodic_extension_matches_direct_integration() {
        let m = mf([["0", "1"], ["-1", "0"]], 0.0, 10.0);
        let j = C64::new(0.0, 1.0);
        let p = 2.0 * std::f64::consts::PI;
        let per = ProjectiveTrajectory::periodic(&m, j, c(1.0), p, true).unwrap();
        let s = per.sample(9.0).unwrap();
        assert!((s.log_growth(false) - j * 9.0).norm() < 1e-8);
        assert!((per.log_multiplier().unwrap() - j * p).norm() < 1e-8);
    }
}
