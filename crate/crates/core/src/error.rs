use thiserror::Error;

pub type Result<T> = std::result::Result<T, LtvError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LtvError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` takes exactly one argument (byte {offset})")]
    Arity { name: String, offset: usize },

    #[error("t = {t} lies outside the domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("non-finite value at t = {t}: {what}")]
    NonFinite { t: f64, what: String },

    #[error("evaluation at t = {t} falls inside a pole interval around t = {pole}")]
    Pole { t: f64, pole: f64 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, tol: f64, estimate: f64 },

    #[error("ODE integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("|a12| = {value:e} below threshold {eps:e} at t = {t}")]
    SmallA12 { t: f64, value: f64, eps: f64 },

    #[error("gauge matrix is singular at t = {t}")]
    SingularGauge { t: f64 },

    #[error("coefficients are not constant (deviation {deviation:e}); use the time-varying path")]
    NotConstant { deviation: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("kind {kind} is incompatible with a {intrinsic} intrinsic component")]
    IncompatibleKind { kind: String, intrinsic: String },

    #[error("complementary solutions coincide at t = {t}; no symmetrizing gauge exists")]
    Degenerate { t: f64 },

    #[error("gauge does not symmetrize the state matrix: deviation {deviation:e} at t = {t}")]
    GaugeMismatch { t: f64, deviation: f64 },

    #[error("cannot normalize the fundamental matrix at t_ref = {t_ref}: {reason}")]
    SingularReference { t_ref: f64, reason: String },

    #[error("{what} is not periodic with period {period}: deviation {deviation:e} at t = {t}")]
    NotPeriodic { what: String, period: f64, t: f64, deviation: f64 },

    #[error("period map is parabolic (repeated multiplier {multiplier}); single fixed point v* = {fixed_point}")]
    Parabolic { multiplier: String, fixed_point: String },

    #[error("transform chain stage {stage} ({form}) violated: deviation {deviation:e} at t = {t}")]
    ChainStage { stage: usize, form: String, t: f64, deviation: f64 },

    #[error("spec error: {0}")]
    Spec(String),
}

impl LtvError {
    /// Replace the subject of a periodicity error by a short name.
    pub fn named(self, name: &str) -> Self {
        match self {
            LtvError::NotPeriodic { period, t, deviation, .. } => {
                LtvError::NotPeriodic { what: name.to_string(), period, t, deviation }
            }
            e => e,
        }
    }

    /// True for malformed user input (expressions, spec files).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            LtvError::Syntax { .. }
                | LtvError::UnknownIdentifier { .. }
                | LtvError::Arity { .. }
                | LtvError::Spec(_)
                | LtvError::Invalid(_)
        )
    }
}
