//! System description files and the built-in example systems.

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisOptions, RceSeed};
use crate::error::{LtvError, Result};
use crate::system::{FnMatrix, Ltv2System};
use crate::timefn::TimeFn;
use crate::C64;

pub const DEFAULT_GRID_POINTS: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub t0: f64,
    pub t1: f64,
}

/// A complex number written either as a plain number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexInput {
    pub fn value(self) -> C64 {
        match self {
            ComplexInput::Real(x) => C64::new(x, 0.0),
            ComplexInput::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub t0: f64,
    pub v1: ComplexInput,
    pub v2: ComplexInput,
}

fn default_input() -> [String; 2] {
    ["0".into(), "0".into()]
}

/// Flat JSON description of a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpecFile {
    pub matrix: [[String; 2]; 2],
    #[serde(default = "default_input")]
    pub input: [String; 2],
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ref: Option<f64>,
    /// Initial values of the two RCE solutions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rce_seed: Option<SeedSpec>,
    /// Replace an imaginary primitive pair by its real tan/cot members.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub prefer_real_family: bool,
    /// `K` of the real family members.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_k: Option<f64>,
}

impl SystemSpecFile {
    pub fn from_json(src: &str) -> Result<Self> {
        let spec: SystemSpecFile = serde_json::from_str(src).map_err(|e| LtvError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let DomainSpec { t0, t1 } = self.domain;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(LtvError::Spec(format!("domain [{t0}, {t1}] must satisfy t0 < t1")));
        }
        if let Some(p) = self.period {
            if !(p > 0.0 && p.is_finite()) {
                return Err(LtvError::Spec(format!("period {p} must be positive")));
            }
        }
        if let Some(n) = self.grid_points {
            if n < 2 {
                return Err(LtvError::Spec(format!("grid_points {n} must be at least 2")));
            }
        }
        Ok(())
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points.unwrap_or(DEFAULT_GRID_POINTS)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.domain.t0, self.domain.t1)
    }

    pub fn system(&self) -> Result<Ltv2System> {
        self.validate()?;
        let m = &self.matrix;
        let a = FnMatrix::parse([[m[0][0].as_str(), &m[0][1]], [&m[1][0], &m[1][1]]])?;
        let u = [TimeFn::parse(&self.input[0])?, TimeFn::parse(&self.input[1])?];
        Ltv2System::new(a, u, self.domain(), self.period)
    }

    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            t_ref: self.t_ref,
            period: self.period,
            seed: self.rce_seed.map(|s| RceSeed { t0: s.t0, v1: s.v1.value(), v2: s.v2.value() }),
            prefer_real_family: self.prefer_real_family,
            family_k: self.family_k.unwrap_or(0.0),
        }
    }
}

/// A built-in example system.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub key: &'static str,
    pub title: &'static str,
    /// Expected results in closed form.
    pub summary: &'static str,
    pub spec: SystemSpecFile,
}

fn spec(m: [[&str; 2]; 2], t0: f64, t1: f64) -> SystemSpecFile {
    SystemSpecFile {
        matrix: m.map(|r| r.map(String::from)),
        input: default_input(),
        domain: DomainSpec { t0, t1 },
        period: None,
        grid_points: None,
        t_ref: None,
        rce_seed: None,
        prefer_real_family: false,
        family_k: None,
    }
}

pub fn fixtures() -> Vec<Fixture> {
    use std::f64::consts::PI;
    vec![
        Fixture {
            key: "eq31",
            title: "LTI, distinct real eigenvalues",
            summary: "lambda = 4, 1; V = [[1, 1], [1, -2]]; \
                      phi = (1/3)[[e^t + 2e^4t, e^4t - e^t], [2e^4t - 2e^t, 2e^t + e^4t]]",
            spec: spec([["3", "1"], ["2", "2"]], 0.0, 2.0),
        },
        Fixture {
            key: "eq33",
            title: "LTI, repeated eigenvalue",
            summary: "omega02 = 0; lambda1 = 2 + 1/t, lambda2 = 2; \
                      phi(t, 0.5) = [[(1-s)e^2s, s e^2s], [-s e^2s, (1+s)e^2s]] with s = t - 0.5",
            spec: SystemSpecFile { t_ref: Some(0.5), ..spec([["1", "1"], ["-1", "3"]], 0.5, 3.0) },
        },
        Fixture {
            key: "eq35",
            title: "LTI, complex eigenvalues",
            summary: "lambda = -1 ± j; real family v = -tan t, cot t; \
                      phi = e^-t [[2 sin t + cos t, sin t], [-5 sin t, cos t - 2 sin t]]",
            spec: spec([["1", "1"], ["-5", "-3"]], 0.0, 2.0),
        },
        Fixture {
            key: "eq40",
            title: "LTV, real dynamic eigenvalues",
            summary: "lambda1 = 1 + 3/(2(t+1)), lambda2 = 1 - 1/(2(t+1)); \
                      V = [[1, 1], [5/(2(t+1)), 1/(2(t+1))]]",
            spec: SystemSpecFile {
                rce_seed: Some(SeedSpec { t0: 0.0, v1: ComplexInput::Real(1.5), v2: ComplexInput::Real(-0.5) }),
                ..spec([["t/(t+1)", "1"], ["-5/(4*(t+1)^2)", "1 + 1/(t+1)"]], 0.0, 2.0)
            },
        },
        Fixture {
            key: "eq43",
            title: "LTV, state matrix singular at t = 0",
            summary: "v = 1/t ± j/t^2; real family v = 1/t - tan(2 - 1/t)/t^2 and its cot partner; \
                      no state transition matrix referenced at t = 0",
            spec: SystemSpecFile {
                rce_seed: Some(SeedSpec { t0: 0.5, v1: ComplexInput::Pair([2.0, 4.0]), v2: ComplexInput::Pair([2.0, -4.0]) }),
                prefer_real_family: true,
                family_k: Some(2.0),
                ..spec([["1 + 1/t", "1"], ["-1/t^4", "1 - 1/t"]], 0.5, 3.0)
            },
        },
        Fixture {
            key: "eq47",
            title: "periodic LTV, unstable despite stable frozen eigenvalues",
            summary: "frozen eigenvalues -1/4 ± j sqrt(7)/4; lambda1 = -1 - tan t, lambda2 = 1/2 + cot t; \
                      Floquet exponents -1, 1/2 over T = 2 pi: unstable",
            spec: SystemSpecFile {
                period: Some(2.0 * PI),
                ..spec(
                    [
                        ["-1 + 1.5*sin(t)^2", "-1 - 1.5*sin(t)*cos(t)"],
                        ["1 - 1.5*sin(t)*cos(t)", "-1 + 1.5*cos(t)^2"],
                    ],
                    0.0,
                    4.0 * PI,
                )
            },
        },
    ]
}

pub fn fixture(key: &str) -> Result<Fixture> {
    fixtures().into_iter().find(|f| f.key == key).ok_or_else(|| {
        let keys: Vec<_> = fixtures().iter().map(|f| f.key).collect();
        LtvError::Spec(format!("unknown example '{key}' (known: {})", keys.join(", ")))
    })
}
