//! End-to-end pipeline: choose a complementary RCE pair for a system and
//! build its spectrum, eigenvector matrix and fundamental matrix.

use std::fmt;
use std::sync::Arc;

use crate::error::{LtvError, Result};
use crate::floquet::{floquet_decompose, FloquetData};
use crate::rce::{
    decompose, family_member, integrate_rce, lti_primitive, periodic_primitive, FamilyKind, IntrinsicKind,
    RceFamilyMember, RcePrimitive, SymmetrizingGauge, LTI_TOL,
};
use crate::solution::{fundamental_matrix, state_transition, FundamentalMatrix, StateTransition};
use crate::spectral::{dynamic_eigenvalues, eigenvector_matrix, DynamicSpectrum, EigenvectorMatrix};
use crate::system::{Ltv2System, ModulationForm};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RceSeed {
    pub t0: f64,
    pub v1: C64,
    pub v2: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalysisOptions {
    /// Reference time of the fundamental matrix; the domain start by default.
    pub t_ref: Option<f64>,
    pub period: Option<f64>,
    pub seed: Option<RceSeed>,
    pub prefer_real_family: bool,
    pub family_k: f64,
}

/// How the RCE pair was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Constant,
    ConstantRepeated,
    Periodic,
    Seeded,
    FrozenSeed,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Constant => "constant",
            Route::ConstantRepeated => "constant_repeated",
            Route::Periodic => "periodic",
            Route::Seeded => "seeded",
            Route::FrozenSeed => "frozen_seed",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub sys: Ltv2System,
    pub mf: ModulationForm,
    pub route: Route,
    pub primitive: Option<Arc<RcePrimitive>>,
    pub gauge: Option<SymmetrizingGauge>,
    pub spectrum: DynamicSpectrum,
    pub eigvec: EigenvectorMatrix,
    pub fund: FundamentalMatrix,
}

impl Analysis {
    pub fn v1(&self) -> &RceFamilyMember {
        &self.spectrum.v1
    }

    pub fn v2(&self) -> &RceFamilyMember {
        &self.spectrum.v2
    }

    pub fn stm(&self, t_ref: f64) -> Result<StateTransition> {
        state_transition(&self.fund, t_ref)
    }

    pub fn floquet(&self, period: f64) -> Result<FloquetData> {
        floquet_decompose(&self.fund, &self.mf, &self.spectrum, period)
    }
}

fn constant_pair(mf: &ModulationForm, opts: &AnalysisOptions) -> Result<Option<(Route, RceFamilyMember, RceFamilyMember)>> {
    if mf.constant_values(LTI_TOL)?.is_none() {
        return Ok(None);
    }
    let prim = Arc::new(lti_primitive(mf)?);
    if prim.degenerate {
        // v' = -omega01 v^2: the zero solution and a 1/(omega01 t) branch.
        let (lo, hi) = mf.domain;
        let far = if hi.abs() >= lo.abs() { hi } else { lo };
        let w1 = mf.omega01.eval(far)?;
        let v1 = integrate_rce(mf, 1.0 / (w1 * far), far, None)?;
        let v2 = integrate_rce(mf, C64::new(0.0, 0.0), lo, None)?;
        return Ok(Some((Route::ConstantRepeated, v1, v2)));
    }
    let (a, b) = if prim.intrinsic == IntrinsicKind::Imaginary && opts.prefer_real_family {
        (FamilyKind::Tan, FamilyKind::Cot)
    } else {
        (FamilyKind::PrimitivePlus, FamilyKind::PrimitiveMinus)
    };
    Ok(Some((
        Route::Constant,
        family_member(&prim, opts.family_k, a)?,
        family_member(&prim, opts.family_k, b)?,
    )))
}

fn frozen_pair(mf: &ModulationForm) -> Result<(RceFamilyMember, RceFamilyMember)> {
    let (lo, hi) = mf.domain;
    let w1 = mf.omega01.eval(lo)?;
    let mut w = (mf.omega02.eval(lo)? / w1).sqrt();
    if w.norm() < 1e-8 {
        w = 1.0 / (w1 * (hi - lo));
    }
    Ok((integrate_rce(mf, w, lo, None)?, integrate_rce(mf, -w, lo, None)?))
}

/// Run the pipeline: constant systems use the closed-form primitive, declared
/// periods the periodic fixed points, seeds the integrated pair and anything
/// else the frozen roots at the domain start as seeds.
pub fn analyze(sys: &Ltv2System, opts: &AnalysisOptions) -> Result<Analysis> {
    let mf = sys.modulation_form()?;
    let (route, mut v1, mut v2) = if let Some(found) = constant_pair(&mf, opts)? {
        found
    } else if let Some(period) = opts.period.or(sys.period()) {
        let (a, b) = periodic_primitive(&mf, period)?;
        (Route::Periodic, a, b)
    } else if let Some(seed) = opts.seed {
        (
            Route::Seeded,
            integrate_rce(&mf, seed.v1, seed.t0, None)?,
            integrate_rce(&mf, seed.v2, seed.t0, None)?,
        )
    } else {
        let (a, b) = frozen_pair(&mf)?;
        (Route::FrozenSeed, a, b)
    };
    log::info!("RCE pair from the {route} route");

    let (mut primitive, mut gauge) = match decompose(&v1, &v2) {
        Ok((p, g)) => (Some(p), Some(g)),
        Err(e) => {
            log::debug!("no symmetrizing gauge: {e}");
            (None, None)
        }
    };
    if opts.prefer_real_family && !matches!(route, Route::Constant) {
        if let Some(p) = primitive.as_ref().filter(|p| p.intrinsic == IntrinsicKind::Imaginary) {
            let p = p.clone();
            v1 = family_member(&p, opts.family_k, FamilyKind::Tan)?;
            v2 = family_member(&p, opts.family_k, FamilyKind::Cot)?;
            let (q, g) = decompose(&v1, &v2)?;
            primitive = Some(q);
            gauge = Some(g);
        }
    }

    let spectrum = dynamic_eigenvalues(&mf, &v1, &v2);
    let eigvec = eigenvector_matrix(&mf, &v1, &v2);
    let t_ref = opts.t_ref.unwrap_or(mf.domain.0);
    if !mf.contains(t_ref) {
        return Err(LtvError::Domain { t: t_ref, lo: mf.domain.0, hi: mf.domain.1 });
    }
    let fund = fundamental_matrix(&eigvec, &spectrum, t_ref)?;
    Ok(Analysis { sys: sys.clone(), mf, route, primitive, gauge, spectrum, eigvec, fund })
}
