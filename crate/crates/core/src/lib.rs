//! Second-order linear time-varying systems solved through their Riccati
//! characteristic equation.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod floquet;
pub mod ode;
pub mod oracle;
pub mod rce;
pub mod solution;
pub mod spectral;
pub mod system;
pub mod timefn;

pub use num_complex::Complex64 as C64;

pub use error::{LtvError, Result};
pub use timefn::TimeFn;
