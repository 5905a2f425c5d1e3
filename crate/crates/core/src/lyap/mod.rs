//! Dense solvers for the standard Lyapunov equation `A X + X Aᵀ + W = 0`
//! and the generalized equation
//! `A X + X Aᵀ + Σ_j D_j X D_jᵀ + W = 0`.
//!
//! Two independent routes are provided for the generalized equation: the
//! `n² × n²` Kronecker system and the convergent series `X = Σ_k X_k` whose
//! terms are standard Lyapunov solves. Both symmetrize their output.

mod existence;
mod schur;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, symmetrized};

pub use existence::{existence_margin, ExistenceDiagnostic};
pub use schur::{SchurLyapunov, NEAR_SINGULAR_GAP};

/// Number of consecutive growing series terms treated as divergence.
pub const DIVERGENCE_STREAK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kronecker,
    FixedPoint,
    /// Fixed point, falling back to Kronecker when the series has not
    /// converged within `max_iter` and `n ≤ kron_cap`.
    Auto,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kron" | "kronecker" => Ok(Method::Kronecker),
            "fixedpoint" | "fixed_point" => Ok(Method::FixedPoint),
            "auto" => Ok(Method::Auto),
            other => Err(Error::Invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSolveOptions {
    pub method: Method,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub kron_cap: usize,
}

impl Default for GenSolveOptions {
    fn default() -> Self {
        GenSolveOptions { method: Method::Auto, rel_tol: 1e-12, max_iter: 1000, kron_cap: 64 }
    }
}

impl GenSolveOptions {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Invalid(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_iter == 0 || self.kron_cap == 0 {
            return Err(Error::Invalid("max_iter and kron_cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenSolveReport {
    pub method: Method,
    /// Number of series terms summed (fixed point only; 0 otherwise).
    pub iterations: usize,
    /// Normalized residual, see [`residual`].
    pub residual: f64,
    pub converged: bool,
    /// `‖X_K‖_F / ‖Σ_k X_k‖_F` for the last term (fixed point only).
    pub series_tail: f64,
}

fn check_square(a: &DMatrix<f64>, ds: &[DMatrix<f64>], w: &DMatrix<f64>) -> Result<usize> {
    let n = a.nrows();
    if !a.is_square() || w.shape() != (n, n) || ds.iter().any(|d| d.shape() != (n, n)) {
        return Err(Error::ShapeMismatch(format!(
            "A {:?}, W {:?}, D shapes {:?}",
            a.shape(),
            w.shape(),
            ds.iter().map(|d| d.shape()).collect::<Vec<_>>()
        )));
    }
    Ok(n)
}

/// `‖A X + X Aᵀ + Σ_j D_j X D_jᵀ + W‖_F / max(1, ‖W‖_F)`.
pub fn residual(a: &DMatrix<f64>, ds: &[DMatrix<f64>], w: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
    let n = check_square(a, ds, w)?;
    if x.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!("X is {:?}, expected ({n}, {n})", x.shape())));
    }
    let mut r = a * x + x * a.transpose() + w;
    for d in ds {
        r += d * x * d.transpose();
    }
    Ok(r.norm() / w.norm().max(1.0))
}

/// Standard Lyapunov solve `A X + X Aᵀ + W = 0` by the Schur method.
pub fn solve_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a, &[], w)?;
    Ok(SchurLyapunov::new(a)?.solve(w))
}

/// `vec(X) = −(I⊗A + A⊗I + Σ D_j⊗D_j)⁻¹ vec(W)`.
pub fn solve_generalized_kron(
    a: &DMatrix<f64>,
    ds: &[DMatrix<f64>],
    w: &DMatrix<f64>,
    kron_cap: usize,
) -> Result<DMatrix<f64>> {
    let n = check_square(a, ds, w)?;
    if n > kron_cap {
        return Err(Error::DimensionTooLarge { n, cap: kron_cap });
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let mut op = eye.kronecker(a) + a.kronecker(&eye);
    let mut scale = 2.0 * (n as f64).sqrt() * a.norm();
    for d in ds {
        op += d.kronecker(d);
        scale += d.norm_squared();
    }
    let w = symmetrized(w);
    let rhs = -nalgebra::DVector::from_column_slice(w.as_slice());
    let lu = op.lu();
    // Pivots that vanish relative to the size of the terms that formed the
    // operator indicate cancellation to a singular matrix.
    let pmin = lu.u().diagonal().iter().fold(f64::INFINITY, |lo, v| lo.min(v.abs()));
    if n > 0 && pmin <= 1e-13 * scale {
        return Err(Error::SingularKroneckerMatrix);
    }
    let sol = lu.solve(&rhs).ok_or(Error::SingularKroneckerMatrix)?;
    let mut x = DMatrix::from_column_slice(n, n, sol.as_slice());
    symmetrize(&mut x);
    Ok(x)
}

fn nonzero(ds: &[DMatrix<f64>]) -> Vec<&DMatrix<f64>> {
    ds.iter().filter(|d| d.iter().any(|v| *v != 0.0)).collect()
}

/// Series iteration carried out in Schur coordinates.
struct Series<'a> {
    solver: &'a SchurLyapunov,
    /// `Qᵀ D_j Q` for the nonzero `D_j`.
    d_hat: Vec<DMatrix<f64>>,
    term: DMatrix<f64>,
}

impl<'a> Series<'a> {
    fn start(solver: &'a SchurLyapunov, ds: &[DMatrix<f64>], w: &DMatrix<f64>) -> Self {
        let d_hat = nonzero(ds).into_iter().map(|d| solver.to_schur(d)).collect();
        let mut w_hat = solver.to_schur(w);
        symmetrize(&mut w_hat);
        let term = solver.solve_schur(&w_hat);
        Series { solver, d_hat, term }
    }

    fn is_finite_sum(&self) -> bool {
        self.d_hat.is_empty()
    }

    /// Advances to `X_{k+1}` from `Σ_j D_j X_k D_jᵀ`.
    fn advance(&mut self) {
        let n = self.term.nrows();
        let mut rhs = DMatrix::zeros(n, n);
        for d in &self.d_hat {
            rhs += d * &self.term * d.transpose();
        }
        symmetrize(&mut rhs);
        self.term = self.solver.solve_schur(&rhs);
    }
}

/// Fixed-point series `X = Σ_k X_k` with `A X₁ + X₁Aᵀ + W = 0` and
/// `A X_k + X_kAᵀ + Σ_j D_j X_{k−1} D_jᵀ = 0`.
///
/// Stops once `‖X_K‖_F ≤ rel_tol·‖Σ X_k‖_F` or after `max_iter` terms.
/// Five consecutive growing terms abort with [`Error::Diverged`].
pub fn solve_generalized_fixedpoint(
    a: &DMatrix<f64>,
    ds: &[DMatrix<f64>],
    w: &DMatrix<f64>,
    opts: &GenSolveOptions,
) -> Result<(DMatrix<f64>, GenSolveReport)> {
    opts.check()?;
    check_square(a, ds, w)?;
    let solver = SchurLyapunov::new(a)?;
    let (x, report) = fixedpoint_with(&solver, a, ds, w, opts)?;
    Ok((x, report))
}

pub(crate) fn fixedpoint_with(
    solver: &SchurLyapunov,
    a: &DMatrix<f64>,
    ds: &[DMatrix<f64>],
    w: &DMatrix<f64>,
    opts: &GenSolveOptions,
) -> Result<(DMatrix<f64>, GenSolveReport)> {
    let mut series = Series::start(solver, ds, w);
    let mut sum = series.term.clone();
    let mut iterations = 1;
    let mut last_norm = series.term.norm();
    let mut growth = 0;
    let mut tail = if sum.norm() > 0.0 { 1.0 } else { 0.0 };
    let mut converged = series.is_finite_sum() || last_norm == 0.0;

    while !converged && iterations < opts.max_iter {
        series.advance();
        iterations += 1;
        let norm = series.term.norm();
        if !norm.is_finite() {
            return Err(Error::Diverged { iterations });
        }
        sum += &series.term;
        let total = sum.norm();
        tail = if total > 0.0 { norm / total } else { 0.0 };
        if norm > last_norm {
            growth += 1;
            if growth >= DIVERGENCE_STREAK {
                log::warn!("fixed-point series grew for {growth} consecutive terms");
                return Err(Error::Diverged { iterations });
            }
        } else {
            growth = 0;
        }
        last_norm = norm;
        converged = norm <= opts.rel_tol * total;
    }

    let mut x = solver.from_schur(&sum);
    symmetrize(&mut x);
    let res = residual(a, ds, w, &x)?;
    log::debug!("fixed point: {iterations} terms, tail {tail:.3e}, residual {res:.3e}");
    Ok((
        x,
        GenSolveReport { method: Method::FixedPoint, iterations, residual: res, converged, series_tail: tail },
    ))
}

/// The first `k` series terms `X_1, …, X_k` in original coordinates.
pub fn series_terms(a: &DMatrix<f64>, ds: &[DMatrix<f64>], w: &DMatrix<f64>, k: usize) -> Result<Vec<DMatrix<f64>>> {
    check_square(a, ds, w)?;
    if k == 0 {
        return Err(Error::Invalid("series_terms needs k >= 1".into()));
    }
    let solver = SchurLyapunov::new(a)?;
    let mut series = Series::start(&solver, ds, w);
    let mut out = Vec::with_capacity(k);
    for step in 0..k {
        if step > 0 {
            series.advance();
        }
        let mut x = solver.from_schur(&series.term);
        symmetrize(&mut x);
        out.push(x);
    }
    Ok(out)
}

/// Dispatches on `opts.method`.
pub fn solve_generalized(
    a: &DMatrix<f64>,
    ds: &[DMatrix<f64>],
    w: &DMatrix<f64>,
    opts: &GenSolveOptions,
) -> Result<(DMatrix<f64>, GenSolveReport)> {
    opts.check()?;
    let n = check_square(a, ds, w)?;
    match opts.method {
        Method::Kronecker => kron_with_report(a, ds, w, opts.kron_cap),
        Method::FixedPoint => solve_generalized_fixedpoint(a, ds, w, opts),
        Method::Auto => {
            let (x, report) = solve_generalized_fixedpoint(a, ds, w, opts)?;
            if !report.converged && n <= opts.kron_cap {
                log::info!("series not converged after {} terms; using the Kronecker solve", report.iterations);
                return kron_with_report(a, ds, w, opts.kron_cap);
            }
            Ok((x, report))
        }
    }
}

fn kron_with_report(
    a: &DMatrix<f64>,
    ds: &[DMatrix<f64>],
    w: &DMatrix<f64>,
    cap: usize,
) -> Result<(DMatrix<f64>, GenSolveReport)> {
    let x = solve_generalized_kron(a, ds, w, cap)?;
    let res = residual(a, ds, w, &x)?;
    Ok((
        x,
        GenSolveReport { method: Method::Kronecker, iterations: 0, residual: res, converged: true, series_tail: 0.0 },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{self, random_instance, RandomSpec};
    use crate::model::bilinear_embed;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn example1_data() -> (DMatrix<f64>, Vec<DMatrix<f64>>, DMatrix<f64>) {
        let emb = bilinear_embed(&builtin::example1());
        let w = emb.b.iter().map(|b| b * b.transpose()).sum::<DMatrix<f64>>();
        (emb.a, emb.d, w)
    }

    const EXAMPLE1_P: [f64; 8] = [0.5, 0.25, 0.125, 0.0625, 0.0, 0.0, 0.0, 0.5];

    #[test]
    fn standard_solve_on_example1_first_term() {
        let (a, _, w) = example1_data();
        let x = solve_lyapunov(&a, &w).unwrap();
        assert!((x - diag(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5])).abs().max() < 1e-15);
    }

    #[test]
    fn kron_reproduces_example1_gramian() {
        let (a, ds, w) = example1_data();
        let x = solve_generalized_kron(&a, &ds, &w, 64).unwrap();
        assert!((&x - diag(&EXAMPLE1_P)).abs().max() < 1e-13);
        assert!(residual(&a, &ds, &w, &diag(&EXAMPLE1_P)).unwrap() <= 1e-13);
    }

    #[test]
    fn fixedpoint_reproduces_example1_gramian() {
        let (a, ds, w) = example1_data();
        let (x, report) = solve_generalized_fixedpoint(&a, &ds, &w, &GenSolveOptions::default()).unwrap();
        assert!(report.converged);
        assert!((&x - diag(&EXAMPLE1_P)).abs().max() < 1e-12);
        let xk = solve_generalized_kron(&a, &ds, &w, 64).unwrap();
        assert!((&x - &xk).abs().max() < 1e-12);
    }

    #[test]
    fn example1_series_terms() {
        let (a, ds, w) = example1_data();
        let terms = series_terms(&a, &ds, &w, 2).unwrap();
        assert!((&terms[0] - diag(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5])).abs().max() < 1e-15);
        assert!((&terms[1] - diag(&[0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])).abs().max() < 1e-15);
        let one = series_terms(&a, &ds, &w, 1).unwrap();
        assert_eq!(one[0], solve_lyapunov(&a, &w).unwrap());
    }

    #[test]
    fn zero_perturbations_reduce_to_standard_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = random_instance(&mut rng, RandomSpec::new(5, 2, 1, 1));
        let a = model.modes[0].a.clone();
        let w = &model.modes[0].b * model.modes[0].b.transpose();
        let zeros = vec![DMatrix::zeros(5, 5)];
        let std = solve_lyapunov(&a, &w).unwrap();
        let (fp, report) = solve_generalized_fixedpoint(&a, &zeros, &w, &GenSolveOptions::default()).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(fp, std);
        let kr = solve_generalized_kron(&a, &zeros, &w, 64).unwrap();
        assert!((kr - std).norm() < 1e-12);
    }

    #[test]
    fn random_stable_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_instance(&mut rng, RandomSpec::new(5, 1, 1, 1));
        let a = &model.modes[0].a;
        let w = DMatrix::identity(5, 5);
        let x = solve_lyapunov(a, &w).unwrap();
        assert!(residual(a, &[], &w, &x).unwrap() <= 1e-10);
    }

    #[test]
    fn methods_agree_on_small_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_instance(&mut rng, RandomSpec::new(4, 1, 1, 2).d_fraction(0.1));
        let emb = bilinear_embed(&model);
        let w = emb.b.iter().map(|b| b * b.transpose()).sum::<DMatrix<f64>>();
        let xk = solve_generalized_kron(&emb.a, &emb.d, &w, 64).unwrap();
        let (xf, report) =
            solve_generalized_fixedpoint(&emb.a, &emb.d, &w, &GenSolveOptions::default()).unwrap();
        assert!(report.converged);
        assert!((&xk - &xf).norm() <= 1e-8 * xk.norm());
        assert!(report.residual <= 10.0 * 1e-12);
    }

    #[test]
    fn divergent_series_is_reported() {
        let a = DMatrix::identity(2, 2) * -0.5;
        let d = DMatrix::identity(2, 2) * 2f64.sqrt();
        let w = DMatrix::identity(2, 2);
        let err = solve_generalized_fixedpoint(&a, &[d], &w, &GenSolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
        assert!(err.to_string().contains("2 alpha / beta^2"));
    }

    #[test]
    fn kron_cap_is_enforced() {
        let a = -DMatrix::<f64>::identity(5, 5);
        let w = DMatrix::identity(5, 5);
        assert!(matches!(
            solve_generalized_kron(&a, &[], &w, 4),
            Err(Error::DimensionTooLarge { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn singular_kronecker_operator() {
        // A + D = 0 makes the operator vanish on the identity direction.
        let a = -DMatrix::<f64>::identity(1, 1);
        let d = DMatrix::from_element(1, 1, 2f64.sqrt());
        let w = DMatrix::identity(1, 1);
        assert!(matches!(solve_generalized_kron(&a, &[d], &w, 4), Err(Error::SingularKroneckerMatrix)));
    }

    #[test]
    fn residual_of_zero_guess() {
        let a = -DMatrix::<f64>::identity(3, 3);
        let w = DMatrix::identity(3, 3);
        let r = residual(&a, &[], &w, &DMatrix::zeros(3, 3)).unwrap();
        // ‖I‖_F / max(1, ‖I‖_F) = 1
        assert!((r - 1.0).abs() < 1e-15);
        assert!(residual(&a, &[], &w, &DMatrix::zeros(2, 2)).is_err());
    }
}
