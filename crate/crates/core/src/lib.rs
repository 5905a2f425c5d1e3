//! Generalized Gramians, reachability/observability analysis and balanced
//! truncation for continuous-time linear switched systems
//! `ẋ = A_{q(t)} x + B_{q(t)} u`, `y = C_{q(t)} x`.

pub mod balred;
pub mod builtin;
pub mod cli;
pub mod error;
pub mod gramians;
pub mod linalg;
pub mod lyap;
pub mod model;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result};
