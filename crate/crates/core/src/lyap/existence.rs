use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{is_normal, spectral_abscissa, spectral_norm, sym_norm2};

/// Number of log-spaced samples used to estimate the transient bound.
const BETA_SAMPLES: usize = 64;

/// Sufficient existence condition `‖Σ_j D_j D_jᵀ‖₂ < 2α/β²` where
/// `‖e^{At}‖₂ ≤ β e^{−αt}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceDiagnostic {
    pub alpha: f64,
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// `true` when `β` was estimated by sampling rather than known exactly.
    pub heuristic: bool,
}

/// Computes the existence margin for `A` Hurwitz.
///
/// `α` is the decay rate `−max Re λ(A)`. For normal `A`, `β = 1` exactly;
/// otherwise `β` is the maximum of `‖e^{At}‖₂ e^{αt}` over 64 log-spaced
/// times in `[10⁻³/α, 10/α]`, clamped to at least 1. The sampled `β` can
/// only underestimate the true constant, so a `satisfied` verdict with
/// `heuristic = true` is advisory.
pub fn existence_margin(a: &DMatrix<f64>, ds: &[DMatrix<f64>]) -> Result<ExistenceDiagnostic> {
    let n = a.nrows();
    if !a.is_square() || ds.iter().any(|d| d.shape() != (n, n)) {
        return Err(Error::ShapeMismatch("existence margin needs square A and D_j of equal size".into()));
    }
    let abscissa = spectral_abscissa(a);
    if abscissa.is_nan() || abscissa >= 0.0 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let alpha = -abscissa;

    let (beta, heuristic) = if is_normal(a, 1e-12) {
        (1.0, false)
    } else {
        let lo = (1e-3 / alpha).log10();
        let hi = (10.0 / alpha).log10();
        let mut beta = 1.0_f64;
        for k in 0..BETA_SAMPLES {
            let t = 10f64.powf(lo + (hi - lo) * k as f64 / (BETA_SAMPLES - 1) as f64);
            let e = (a * t).exp();
            beta = beta.max(spectral_norm(&e) * (alpha * t).exp());
        }
        (beta, true)
    };

    let mut sum = DMatrix::zeros(n, n);
    for d in ds {
        sum += d * d.transpose();
    }
    let lhs = sym_norm2(&sum);
    let rhs = 2.0 * alpha / (beta * beta);
    Ok(ExistenceDiagnostic { alpha, beta, lhs, rhs, satisfied: lhs < rhs, heuristic })
}
