//! Dynamic eigenvalues, eigenvector matrix and the spectrum-preserving
//! transform chain `M0 -> P -> D -> M_D`.

use nalgebra::Matrix2;

use crate::error::{LtvError, Result};
use crate::rce::{RceFamilyMember, SymmetrizingGauge};
use crate::system::{gauge_action, FnMatrix, GaugeKind, GaugeMatrix, Ltv2System, ModulationForm, PROBE_POINTS};
use crate::timefn::{default_step, linspace, Codomain, TimeFn};
use crate::C64;

/// Tolerance of every stage of [`verify_chain`].
pub const CHAIN_TOL: f64 = 1e-6;

/// Tolerance of the runtime symmetry check in [`symmetrize`].
pub const SYMMETRY_TOL: f64 = 1e-7;

/// System variable the core modes are referenced to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceVariable {
    X1,
}

/// `lambda_i = sigma0 + omega01 v_i` for a complementary pair.
#[derive(Clone, Debug)]
pub struct DynamicSpectrum {
    pub lambda1: TimeFn,
    pub lambda2: TimeFn,
    pub sigma_f: TimeFn,
    pub omega_f: TimeFn,
    pub reference: ReferenceVariable,
    pub v1: RceFamilyMember,
    pub v2: RceFamilyMember,
}

impl DynamicSpectrum {
    /// Pole times of either member, sorted.
    pub fn poles(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.v1.poles().iter().chain(self.v2.poles()).copied().collect();
        p.sort_by(f64::total_cmp);
        p
    }

    pub fn members(&self) -> [&RceFamilyMember; 2] {
        [&self.v1, &self.v2]
    }

    pub fn is_real(&self) -> bool {
        self.v1.is_real() && self.v2.is_real()
    }
}

/// `[[1, 1], [v1 - alpha, v2 - alpha]]`.
#[derive(Clone, Debug)]
pub struct EigenvectorMatrix {
    pub entries: FnMatrix,
}

impl EigenvectorMatrix {
    pub fn eval(&self, t: f64) -> Result<Matrix2<C64>> {
        self.entries.eval(t)
    }

    /// `v2 - v1`, which equals `-2/p`.
    pub fn det(&self) -> TimeFn {
        &self.entries.0[1][1] - &self.entries.0[1][0]
    }
}

pub fn dynamic_eigenvalues(mf: &ModulationForm, v1: &RceFamilyMember, v2: &RceFamilyMember) -> DynamicSpectrum {
    let lambda1 = &mf.sigma0 + &(&mf.omega01 * &v1.v);
    let lambda2 = &mf.sigma0 + &(&mf.omega01 * &v2.v);
    let sigma_f = &(&lambda1 + &lambda2) * 0.5;
    let omega_f = &(&lambda1 - &lambda2) * 0.5;
    DynamicSpectrum {
        lambda1,
        lambda2,
        sigma_f,
        omega_f,
        reference: ReferenceVariable::X1,
        v1: v1.clone(),
        v2: v2.clone(),
    }
}

pub fn eigenvector_matrix(mf: &ModulationForm, v1: &RceFamilyMember, v2: &RceFamilyMember) -> EigenvectorMatrix {
    EigenvectorMatrix {
        entries: FnMatrix::new(TimeFn::one(), TimeFn::one(), &v1.v - &mf.alpha, &v2.v - &mf.alpha),
    }
}

/// `P = [[1, 0], [-q, p]]`.
pub fn p_gauge(gauge: &SymmetrizingGauge) -> GaugeMatrix {
    GaugeMatrix::new(FnMatrix::new(TimeFn::one(), TimeFn::zero(), -&gauge.q, gauge.p.clone()), GaugeKind::P)
}

fn m0_at(mf: &ModulationForm, t: f64) -> Result<(Matrix2<C64>, Matrix2<C64>)> {
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let m = Matrix2::new(one, zero, mf.alpha.eval(t)?, one);
    let md = Matrix2::new(zero, zero, mf.alpha.derivative(t, None)?, zero);
    Ok((m, md))
}

fn p_at(gauge: &SymmetrizingGauge, t: f64) -> Result<(Matrix2<C64>, Matrix2<C64>)> {
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let m = Matrix2::new(one, zero, -gauge.q.eval(t)?, gauge.p.eval(t)?);
    let md = Matrix2::new(zero, zero, -gauge.q.derivative(t, None)?, gauge.p.derivative(t, None)?);
    Ok((m, md))
}

/// Probe points at least `gap` away from every pole.
pub fn regular_points(lo: f64, hi: f64, n: usize, poles: &[f64], gap: f64) -> Vec<f64> {
    linspace(lo, hi, n).into_iter().filter(|t| poles.iter().all(|p| (p - t).abs() >= gap)).collect()
}

fn skippable(e: &LtvError) -> bool {
    matches!(e, LtvError::Pole { .. } | LtvError::NonFinite { .. } | LtvError::Degenerate { .. })
}

/// Symmetric modulation form `[[sigma_f, omega_f], [omega_f, sigma_f]]`
/// with `sigma_f = sigma0 + p'/(2p)` and `omega_f = omega01/p`. The 2-1
/// entry of the transformed matrix is checked against `omega_f`.
pub fn symmetrize(mf: &ModulationForm, gauge: &SymmetrizingGauge) -> Result<FnMatrix> {
    let pdot = gauge.p.derivative_fn();
    let sigma_f = &mf.sigma0 + &(&pdot / &(&gauge.p * 2.0));
    let omega_f = &mf.omega01 / &gauge.p;
    let a0 = mf.a0();
    for t in mf.probe_grid() {
        let step = (|| -> Result<(C64, C64)> {
            let (p, pd) = p_at(gauge, t)?;
            let af = gauge_action(&a0.eval(t)?, &p, &pd, t)?;
            Ok((af[(1, 0)], omega_f.eval(t)?))
        })();
        match step {
            Ok((a21, wf)) => {
                let dev = (a21 - wf).norm();
                if !(dev <= SYMMETRY_TOL * (1.0 + wf.norm())) {
                    return Err(LtvError::GaugeMismatch { t, deviation: dev });
                }
            }
            Err(e) if skippable(&e) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(FnMatrix::new(sigma_f.clone(), omega_f.clone(), omega_f, sigma_f))
}

/// Diagonal form and the matrices that produce it.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub a_fd: FnMatrix,
    pub d: GaugeMatrix,
    /// `M_fd = D P M0`.
    pub m_fd: GaugeMatrix,
}

pub fn diagonalize(mf: &ModulationForm, gauge: &SymmetrizingGauge, spectrum: &DynamicSpectrum) -> Diagonalization {
    let d = GaugeMatrix::d();
    let m_fd = d.compose(&p_gauge(gauge)).compose(&GaugeMatrix::m0(mf));
    Diagonalization {
        a_fd: FnMatrix::diag(spectrum.lambda1.clone(), spectrum.lambda2.clone()),
        d,
        m_fd: GaugeMatrix::new(m_fd.m, GaugeKind::Mfd),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageCheck {
    pub stage: usize,
    pub form: &'static str,
    pub max_deviation: f64,
    pub worst_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub stages: Vec<StageCheck>,
    pub points: usize,
}

impl ChainReport {
    pub fn max_deviation(&self) -> f64 {
        self.stages.iter().map(|s| s.max_deviation).fold(0.0, f64::max)
    }
}

const STAGES: [&str; 4] = ["modulation", "symmetric", "diagonal", "zero"];

fn max_abs(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `∫_t^s sigma0 + L(s) - L(t)`, the exponent of a core column relative to `t`.
fn relative_exponent(mf: &ModulationForm, member: &RceFamilyMember, t: f64) -> Result<TimeFn> {
    let (lo, hi) = mf.domain;
    let base = member.log_growth(t)?;
    let (sigma0, m) = (mf.sigma0.clone(), member.clone());
    Ok(TimeFn::native(Codomain::Complex, move |s| {
        let (i, _) = sigma0.integrate(t, s, 1e-13)?;
        Ok((-(i + m.log_growth(s)? - base)).exp())
    })
    .with_domain(lo, hi))
}

/// Apply `M0`, `P`, `D` and `M_D` in turn and check that the state matrix
/// takes the modulation, symmetric, diagonal and zero forms.
pub fn verify_chain(
    sys: &Ltv2System,
    mf: &ModulationForm,
    gauge: &SymmetrizingGauge,
    spectrum: &DynamicSpectrum,
) -> Result<ChainReport> {
    let (lo, hi) = sys.domain();
    let points = regular_points(lo, hi, PROBE_POINTS, &spectrum.poles(), 1e-3 * (hi - lo));
    let mut stages: Vec<StageCheck> = STAGES
        .iter()
        .enumerate()
        .map(|(i, f)| StageCheck { stage: i + 1, form: f, max_deviation: 0.0, worst_t: lo })
        .collect();
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let d = Matrix2::new(one, one, one, -one);
    let mut used = 0;
    for &t in &points {
        let a = sys.state_matrix(t)?;
        let (m0, m0d) = m0_at(mf, t)?;
        let a0 = gauge_action(&a, &m0, &m0d, t)?;
        let sigma0 = mf.sigma0.eval(t)?;
        let expect0 = Matrix2::new(sigma0, mf.omega01.eval(t)?, mf.omega02.eval(t)?, sigma0);
        let dev0 = max_abs(&(a0 - expect0)) / (1.0 + max_abs(&expect0));

        let (p, pd) = match p_at(gauge, t) {
            Ok(x) => x,
            Err(e) if skippable(&e) => continue,
            Err(e) => return Err(e),
        };
        let af = gauge_action(&a0, &p, &pd, t)?;
        let dev1 = ((af[(0, 1)] - af[(1, 0)]).norm()).max((af[(0, 0)] - af[(1, 1)]).norm()) / (1.0 + max_abs(&af));

        let afd = gauge_action(&af, &d, &Matrix2::zeros(), t)?;
        let (l1, l2) = (spectrum.lambda1.eval(t)?, spectrum.lambda2.eval(t)?);
        let expect2 = Matrix2::new(l1, zero, zero, l2);
        let dev2 = max_abs(&(afd - expect2)) / (1.0 + max_abs(&expect2));

        let h = default_step(t);
        let e1 = relative_exponent(mf, &spectrum.v1, t)?;
        let e2 = relative_exponent(mf, &spectrum.v2, t)?;
        let md = Matrix2::new(one, zero, zero, one);
        let mdd = Matrix2::new(e1.fd_derivative(t, h)?, zero, zero, e2.fd_derivative(t, h)?);
        let az = gauge_action(&afd, &md, &mdd, t)?;
        let dev3 = max_abs(&az) / (1.0 + max_abs(&afd));

        used += 1;
        for (s, dev) in stages.iter_mut().zip([dev0, dev1, dev2, dev3]) {
            if dev > s.max_deviation || dev.is_nan() {
                s.max_deviation = dev;
                s.worst_t = t;
            }
        }
    }
    for s in &stages {
        if !(s.max_deviation <= CHAIN_TOL) {
            return Err(LtvError::ChainStage {
                stage: s.stage,
                form: s.form.to_string(),
                t: s.worst_t,
                deviation: s.max_deviation,
            });
        }
    }
    Ok(ChainReport { stages, points: used })
}
