//! Uniform or non-uniform sample tables with piecewise polynomial interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{LtvError, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    Linear,
    #[default]
    Cubic,
}

#[derive(Debug, Clone)]
pub struct Grid {
    t: Vec<f64>,
    y: Vec<C64>,
    interp: Interp,
}

impl Grid {
    pub fn new(t: Vec<f64>, y: Vec<C64>, interp: Interp) -> Result<Self> {
        if t.len() != y.len() {
            return Err(LtvError::Invalid(format!(
                "grid has {} times but {} values",
                t.len(),
                y.len()
            )));
        }
        if t.len() < 4 {
            return Err(LtvError::Invalid("grid needs at least 4 samples".into()));
        }
        if let Some(w) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(LtvError::Invalid(format!(
                "grid times must be strictly increasing (index {})",
                w + 1
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LtvError::NonFinite { t: t[i], what: "grid sample".into() });
        }
        Ok(Grid { t, y, interp })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[C64] {
        &self.y
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn is_real(&self) -> bool {
        self.y.iter().all(|v| v.im == 0.0)
    }

    fn check(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.span();
        if t < lo || t > hi || t.is_nan() {
            return Err(LtvError::Domain { t, lo, hi });
        }
        Ok(())
    }

    /// Index `i` with `t[i] <= t <= t[i+1]`.
    fn interval(&self, t: f64) -> usize {
        let k = self.t.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.t.len() - 2)
    }

    fn stencil(&self, i: usize) -> usize {
        i.saturating_sub(1).min(self.t.len() - 4)
    }

    pub fn eval(&self, t: f64) -> Result<C64> {
        self.check(t)?;
        let i = self.interval(t);
        match self.interp {
            Interp::Linear => {
                let w = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
                Ok(self.y[i] * (1.0 - w) + self.y[i + 1] * w)
            }
            Interp::Cubic => {
                let b = self.stencil(i);
                let xs = &self.t[b..b + 4];
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..4 {
                    let mut l = 1.0;
                    for m in 0..4 {
                        if m != j {
                            l *= (t - xs[m]) / (xs[j] - xs[m]);
                        }
                    }
                    acc += self.y[b + j] * l;
                }
                Ok(acc)
            }
        }
    }

    /// Derivative of the interpolant.
    pub fn deriv(&self, t: f64) -> Result<C64> {
        self.check(t)?;
        let i = self.interval(t);
        match self.interp {
            Interp::Linear => Ok((self.y[i + 1] - self.y[i]) / (self.t[i + 1] - self.t[i])),
            Interp::Cubic => {
                let b = self.stencil(i);
                let xs = &self.t[b..b + 4];
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..4 {
                    let mut dl = 0.0;
                    for m in 0..4 {
                        if m == j {
                            continue;
                        }
                        let mut term = 1.0 / (xs[j] - xs[m]);
                        for l in 0..4 {
                            if l != j && l != m {
                                term *= (t - xs[l]) / (xs[j] - xs[l]);
                            }
                        }
                        dl += term;
                    }
                    acc += self.y[b + j] * dl;
                }
                Ok(acc)
            }
        }
    }
}
