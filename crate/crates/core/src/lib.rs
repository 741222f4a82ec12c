//! Probability distributions on the integers with continuous parameters.
//!
//! Every family exposes a log mass, its analytic gradient, a mean and an
//! exact sampler through [`Discrete`]. The [`oracle`] module recomputes all
//! of it by brute force.
//!
//! ```
//! use intdist::{DalapParams, Discrete, Support};
//!
//! let d = DalapParams::new(0.0, 0.5).unwrap();
//! let p0 = d.log_prob(0, Support::Unbounded).unwrap().exp();
//! assert!((p0 - 1.0 / 3.0).abs() < 1e-15);
//! ```

pub mod bitwise;
pub mod checks;
pub mod dalap;
pub mod danorm;
pub mod discretized;
pub mod dist;
pub mod error;
pub mod mixture;
pub mod numcore;
pub mod oracle;

pub use bitwise::BitwiseParams;
pub use dalap::DalapParams;
pub use danorm::DanormParams;
pub use discretized::{DLaplaceParams, DLogisticParams, DNormalParams, DWeibullParams};
pub use dist::{Discrete, Family, Params, Parametric};
pub use error::{Error, Result};
pub use mixture::MixtureParams;
pub use numcore::{GradRecord, Support};
