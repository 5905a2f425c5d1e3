//! Small dense kernels shared by the solvers: symmetrization, semidefinite
//! factors, orthonormal range bases, principal angles and spectral
//! quantities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RTOL: f64 = 1e-10;

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    symmetrize(&mut out);
    out
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return f64::NEG_INFINITY;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `M = U·diag(σ)·Vᵀ` with `σ` nonincreasing.
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// Thin SVD computed by faer.
///
/// nalgebra's bidiagonal SVD returns inconsistent singular triplets on
/// some rank-deficient inputs, which breaks every range computation here.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(ThinSvd { u: DMatrix::zeros(m.nrows(), 0), sigma: Vec::new(), v: DMatrix::zeros(m.ncols(), 0) });
    }
    let svd = to_faer(m).thin_svd().map_err(|e| Error::SvdFailed(format!("{e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]),
        sigma: (0..k).map(|i| s[i]).collect(),
        v: DMatrix::from_fn(m.ncols(), k, |i, j| v[(i, j)]),
    })
}

pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(m).singular_values().map_err(|e| Error::SvdFailed(format!("{e:?}")))
}

/// Spectral norm; `NaN` if the SVD fails.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    match singular_values(m) {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => f64::NAN,
    }
}

/// Largest eigenvalue magnitude of a symmetric matrix, used as `‖S‖₂`.
pub fn sym_norm2(s: &DMatrix<f64>) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    s.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn min_sym_eigenvalue(s: &DMatrix<f64>) -> f64 {
    symmetrized(s)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_sym_eigenvalue(s: &DMatrix<f64>) -> f64 {
    symmetrized(s)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order.
pub fn sorted_sym_eigen(s: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = s.nrows();
    let eig = symmetrized(s).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Factor `F` with `F·Fᵀ ≈ S` for a symmetric positive semidefinite `S`.
///
/// Only eigenpairs with `λ > rtol·λ_max` are kept, so `F` has as many
/// columns as the numerical rank of `S`. Works for singular inputs where
/// a Cholesky factorization would break down.
pub fn psd_factor(s: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let n = s.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (values, vectors) = sorted_sym_eigen(s);
    let lmax = values[0];
    if lmax <= 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let rank = values.iter().take_while(|&&l| l > rtol * lmax).count();
    let mut f = vectors.columns(0, rank).into_owned();
    for k in 0..rank {
        let scale = values[k].sqrt();
        f.column_mut(k).scale_mut(scale);
    }
    f
}

/// Orthonormal basis of `range(M)` keeping singular values above
/// `rtol·σ_max`.
pub fn orth(m: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let svd = thin_svd(m)?;
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    if !(smax > 0.0) {
        return Ok(DMatrix::zeros(n, 0));
    }
    let rank = svd.sigma.iter().take_while(|&&s| s > rtol * smax).count();
    Ok(svd.u.columns(0, rank).into_owned())
}

/// Sine of the largest principal angle between `range(U)` and `range(V)`,
/// both given by orthonormal bases. Subspaces of different dimension are
/// reported as orthogonal (`1.0`).
pub fn max_principal_sine(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    assert_eq!(u.nrows(), v.nrows(), "ambient dimensions differ");
    if u.ncols() != v.ncols() {
        return 1.0;
    }
    if u.ncols() == 0 {
        return 0.0;
    }
    let residual = u - v * v.tr_mul(u);
    spectral_norm(&residual).min(1.0)
}

/// Largest principal angle in radians.
pub fn max_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    max_principal_sine(u, v).asin()
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `‖AAᵀ − AᵀA‖_F ≤ tol·‖A‖_F²`.
pub fn is_normal(a: &DMatrix<f64>, tol: f64) -> bool {
    let comm = a * a.transpose() - a.transpose() * a;
    comm.norm() <= tol * a.norm_squared().max(f64::MIN_POSITIVE)
}

/// Stacks matrices with equal row count side by side.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_factor_reproduces_singular_matrix() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25, 0.0, 0.5]));
        let f = psd_factor(&s, DEFAULT_RTOL);
        assert_eq!(f.ncols(), 3);
        assert!((&f * f.transpose() - &s).norm() < 1e-14);
    }

    #[test]
    fn orth_drops_dependent_columns() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0]);
        let q = orth(&m, DEFAULT_RTOL).unwrap();
        assert_eq!(q.ncols(), 2);
        assert!((q.tr_mul(&q) - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn principal_angle_of_coordinate_axes() {
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!((max_principal_angle(&e1, &e2) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(max_principal_angle(&e1, &e1), 0.0);
    }

    /// Rank-deficient product with an exact bit pattern on which
    /// nalgebra's SVD pairs a wrong left vector with `σ₃`.
    #[test]
    fn orth_spans_range_of_rank_deficient_matrix() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(28);
        let model = crate::builtin::random_sweep_instance(&mut rng);
        let bs: Vec<&DMatrix<f64>> = model.modes.iter().map(|m| &m.b).collect();
        let b = hstack(&bs);
        let q = orth(&b, DEFAULT_RTOL).unwrap();
        assert_eq!(q.ncols(), 3);
        assert!((&b - &q * q.tr_mul(&b)).norm() < 1e-13 * b.norm());
    }

    #[test]
    fn thin_svd_reconstructs() {
        let m = DMatrix::from_fn(5, 3, |i, j| ((i * 3 + j) as f64).sin());
        let svd = thin_svd(&m).unwrap();
        let s = DMatrix::from_diagonal(&DVector::from_column_slice(&svd.sigma));
        assert!((&svd.u * s * svd.v.transpose() - &m).norm() < 1e-14);
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        let u = DVector::from_vec(vec![3.0, 4.0]);
        let m = &u * u.transpose();
        assert!((spectral_norm(&m) - 25.0).abs() < 1e-12);
    }
}
