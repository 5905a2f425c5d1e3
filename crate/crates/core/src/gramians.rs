//! Generalized reachability/observability Gramians of a switched system,
//! the averaged-Gramian baseline, and range-based reachability tests.
//!
//! With `A = A₁` and `D_j = A_j − A₁`, the reachability Gramian `𝒫` solves
//! `A𝒫 + 𝒫Aᵀ + Σ_j (D_j𝒫D_jᵀ + B_jB_jᵀ) = 0` and the observability Gramian
//! `𝒬` the dual equation. Their ranges are the reachable and observable
//! subspaces.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sorted_sym_eigen, spectral_norm, DEFAULT_RTOL};
use crate::lyap::{self, GenSolveOptions, GenSolveReport, SchurLyapunov};
use crate::model::{bilinear_embed, BilinearEmbedding, LssModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GramianKind {
    Reachability,
    Observability,
}

#[derive(Debug, Clone)]
pub struct GramianResult {
    pub matrix: DMatrix<f64>,
    pub kind: GramianKind,
    pub report: GenSolveReport,
}

fn reach_from_embedding(emb: &BilinearEmbedding, opts: &GenSolveOptions) -> Result<GramianResult> {
    let n = emb.n();
    let mut w = DMatrix::zeros(n, n);
    for b in &emb.b {
        w += b * b.transpose();
    }
    let (matrix, report) = lyap::solve_generalized(&emb.a, &emb.d, &w, opts)?;
    Ok(GramianResult { matrix, kind: GramianKind::Reachability, report })
}

/// Generalized reachability Gramian `𝒫`.
pub fn reach_gramian(model: &LssModel, opts: &GenSolveOptions) -> Result<GramianResult> {
    model.check_shapes()?;
    reach_from_embedding(&bilinear_embed(model), opts)
}

/// Generalized observability Gramian `𝒬`, computed as the reachability
/// Gramian of the transposed embedding.
pub fn obs_gramian(model: &LssModel, opts: &GenSolveOptions) -> Result<GramianResult> {
    model.check_shapes()?;
    let mut res = reach_from_embedding(&bilinear_embed(model).transposed(), opts)?;
    res.kind = GramianKind::Observability;
    Ok(res)
}

/// Both Gramians, solved concurrently.
pub fn gramian_pair(model: &LssModel, opts: &GenSolveOptions) -> Result<(GramianResult, GramianResult)> {
    let (p, q) = rayon::join(|| reach_gramian(model, opts), || obs_gramian(model, opts));
    Ok((p?, q?))
}

/// Normalization of the averaged Gramians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AvgScale {
    /// `Σ_k 𝒫_k`.
    #[default]
    Sum,
    /// `(1/M) Σ_k 𝒫_k`.
    Mean,
}

#[derive(Debug, Clone)]
pub struct AveragedGramians {
    pub p_avg: DMatrix<f64>,
    pub q_avg: DMatrix<f64>,
    /// Per-mode `𝒫_k` with `A_k𝒫_k + 𝒫_kA_kᵀ + B_kB_kᵀ = 0`.
    pub p_terms: Vec<DMatrix<f64>>,
    /// Per-mode `𝒬_k` with `A_kᵀ𝒬_k + 𝒬_kA_k + C_kᵀC_k = 0`.
    pub q_terms: Vec<DMatrix<f64>>,
}

/// Sum (or mean) of the per-mode LTI Gramians.
pub fn averaged_gramians(model: &LssModel, scale: AvgScale) -> Result<AveragedGramians> {
    model.check_shapes()?;
    let n = model.n;
    let mut p_terms = Vec::with_capacity(model.num_modes());
    let mut q_terms = Vec::with_capacity(model.num_modes());
    for (idx, mode) in model.modes.iter().enumerate() {
        let named = |e: Error| match e {
            Error::NotHurwitz { abscissa } => Error::ModeNotHurwitz { mode: idx + 1, abscissa },
            other => other,
        };
        let solver = SchurLyapunov::new(&mode.a).map_err(named)?;
        p_terms.push(solver.solve(&(&mode.b * mode.b.transpose())));
        let dual = SchurLyapunov::new(&mode.a.transpose()).map_err(named)?;
        q_terms.push(dual.solve(&(mode.c.transpose() * &mode.c)));
    }
    let factor = match scale {
        AvgScale::Sum => 1.0,
        AvgScale::Mean => 1.0 / model.num_modes() as f64,
    };
    let p_avg = p_terms.iter().fold(DMatrix::zeros(n, n), |acc, p| acc + p) * factor;
    let q_avg = q_terms.iter().fold(DMatrix::zeros(n, n), |acc, q| acc + q) * factor;
    Ok(AveragedGramians { p_avg, q_avg, p_terms, q_terms })
}

/// Orthonormal basis of a computed subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    /// `n × r` with orthonormal columns.
    pub basis: DMatrix<f64>,
    pub rank: usize,
    /// Eigenvalues (or singular values) of the kept directions, descending.
    pub values: Vec<f64>,
    pub rtol: f64,
}

impl SubspaceBasis {
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn from_orthonormal(basis: DMatrix<f64>, values: Vec<f64>, rtol: f64) -> Self {
        let rank = basis.ncols();
        SubspaceBasis { basis, rank, values, rtol }
    }
}

/// Range of a symmetric PSD matrix: eigenvectors with `λ > rtol·λ_max`.
pub fn range_basis(s: &DMatrix<f64>, rtol: f64) -> SubspaceBasis {
    let n = s.nrows();
    if n == 0 {
        return SubspaceBasis::from_orthonormal(DMatrix::zeros(0, 0), Vec::new(), rtol);
    }
    let (values, vectors) = sorted_sym_eigen(s);
    let lmax = values[0];
    let rank = if lmax > 0.0 { values.iter().take_while(|&&l| l > rtol * lmax).count() } else { 0 };
    SubspaceBasis::from_orthonormal(
        vectors.columns(0, rank).into_owned(),
        values.iter().take(rank).copied().collect(),
        rtol,
    )
}

/// `true` iff `‖(I − VVᵀ)U‖₂ ≤ tol`, i.e. `range(U) ⊆ range(V)`.
pub fn subspace_contains(u: &SubspaceBasis, v: &SubspaceBasis, tol: f64) -> Result<bool> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::ShapeMismatch(format!(
            "subspaces live in R^{} and R^{}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    if u.rank == 0 {
        return Ok(true);
    }
    let residual = &u.basis - &v.basis * v.basis.tr_mul(&u.basis);
    Ok(spectral_norm(&residual) <= tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankVerdict {
    pub verdict: bool,
    pub rank: usize,
    pub n: usize,
}

/// Complete reachability iff `rank 𝒫 = n`.
pub fn is_completely_reachable(model: &LssModel, opts: &GenSolveOptions) -> Result<RankVerdict> {
    let p = reach_gramian(model, opts)?;
    let rank = range_basis(&p.matrix, DEFAULT_RTOL).rank;
    Ok(RankVerdict { verdict: rank == model.n, rank, n: model.n })
}

/// Complete observability iff `rank 𝒬 = n`.
pub fn is_completely_observable(model: &LssModel, opts: &GenSolveOptions) -> Result<RankVerdict> {
    let q = obs_gramian(model, opts)?;
    let rank = range_basis(&q.matrix, DEFAULT_RTOL).rank;
    Ok(RankVerdict { verdict: rank == model.n, rank, n: model.n })
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn eigenvalue_profile(s: &DMatrix<f64>) -> DVector<f64> {
    sorted_sym_eigen(s).0
}
