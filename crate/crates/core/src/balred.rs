//! Square-root balanced truncation with global projectors.
//!
//! From factors `𝒫 = SSᵀ`, `𝒬 = RRᵀ` and the SVD `SᵀR = UΣVᵀ`, the
//! projectors are `V = S U₁ Σ₁^{-1/2}` and `W = R V₁ Σ₁^{-1/2}`, so that
//! `WᵀV = I_r` and every mode is reduced as `(WᵀA_jV, WᵀB_j, C_jV)`.

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_sym_eigenvalue, min_sym_eigenvalue, psd_factor, thin_svd, DEFAULT_RTOL};
use crate::model::{bilinear_embed, LssModel, Mode};

/// Biorthogonality tolerance `‖WᵀV − I‖_F`.
pub const BIORTH_TOL: f64 = 1e-8;

/// Relative gap below which `σ_r` and `σ_{r+1}` count as tied.
const TIE_RTOL: f64 = 1e-8;

/// How the reduced order is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// Exactly `r`; fails with [`Error::OrderTooLarge`] beyond the numerical rank.
    Fixed(usize),
    /// `r`, silently lowered to the numerical rank when larger.
    AtMost(usize),
    /// Smallest `r` with `Σ_{i>r} σ_i ≤ tol·Σ_i σ_i`.
    EnergyTol(f64),
}

#[derive(Debug, Clone)]
pub struct BalancedReduction {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// All singular values of `SᵀR`, descending.
    pub hsv: Vec<f64>,
    pub r: usize,
    pub reduced: LssModel,
    /// `2·Σ_{k>r} σ_k`.
    pub bound_coefficient: f64,
    /// Numerical rank of `SᵀR`.
    pub rank: usize,
    /// The requested order was lowered to `rank`.
    pub capped: bool,
    /// `σ_r` and `σ_{r+1}` coincide to relative precision.
    pub tie: bool,
}

struct Factored {
    s: DMatrix<f64>,
    r: DMatrix<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    sigma: Vec<f64>,
}

fn check_gramian(name: &str, x: &DMatrix<f64>, n: Option<usize>) -> Result<()> {
    if !x.is_square() || n.is_some_and(|n| x.nrows() != n) {
        return Err(Error::ShapeMismatch(format!("{name} is {:?}", x.shape())));
    }
    Ok(())
}

/// SVD of `SᵀR`.
fn factor(p: &DMatrix<f64>, q: &DMatrix<f64>, rtol: f64) -> Result<Factored> {
    check_gramian("P", p, None)?;
    check_gramian("Q", q, Some(p.nrows()))?;
    let s = psd_factor(p, rtol);
    let r = psd_factor(q, rtol);
    if s.ncols() == 0 || r.ncols() == 0 {
        return Err(Error::DegenerateGramians);
    }
    let svd = thin_svd(&s.tr_mul(&r))?;
    Ok(Factored { s, r, u: svd.u, v: svd.v, sigma: svd.sigma })
}

fn numerical_rank(sigma: &[f64], rtol: f64) -> usize {
    match sigma.first() {
        Some(&smax) if smax > 0.0 => sigma.iter().take_while(|&&s| s > rtol * smax).count(),
        _ => 0,
    }
}

/// Hankel singular values: singular values of `SᵀR`, descending.
pub fn hankel_singular_values(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Vec<f64>> {
    match factor(p, q, DEFAULT_RTOL) {
        Ok(f) => Ok(f.sigma),
        Err(Error::DegenerateGramians) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

fn tail_sum(hsv: &[f64], r: usize) -> f64 {
    hsv.iter().skip(r).fold(0.0, |acc, s| acc + s)
}

/// Smallest `r ≥ 1` whose discarded tail is at most `tol` of the total.
pub fn order_for_energy(hsv: &[f64], tol: f64) -> usize {
    let total: f64 = hsv.iter().sum();
    (1..=hsv.len()).find(|&r| tail_sum(hsv, r) <= tol * total).unwrap_or(hsv.len())
}

/// Balanced truncation of `model` from Gramians `𝒫`, `𝒬`.
pub fn balance_truncate(
    model: &LssModel,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    order: Order,
    rtol: f64,
) -> Result<BalancedReduction> {
    model.check_shapes()?;
    check_gramian("P", p, Some(model.n))?;
    let f = factor(p, q, rtol)?;
    let rank = numerical_rank(&f.sigma, rtol);
    if rank == 0 {
        return Err(Error::DegenerateGramians);
    }
    let (r, capped) = match order {
        Order::Fixed(r) if r > rank => return Err(Error::OrderTooLarge { requested: r, rank }),
        Order::Fixed(r) => (r, false),
        Order::AtMost(r) => (r.min(rank), r > rank),
        Order::EnergyTol(tol) if !(tol >= 0.0) => {
            return Err(Error::Invalid(format!("energy tolerance must be nonnegative, got {tol}")))
        }
        Order::EnergyTol(tol) => (order_for_energy(&f.sigma[..rank], tol), false),
    };
    if r == 0 {
        return Err(Error::Invalid("reduced order must be at least 1".into()));
    }
    if capped {
        warn!("requested order lowered to numerical rank {rank}");
    }
    let tie = r < f.sigma.len() && (f.sigma[r - 1] - f.sigma[r]).abs() <= TIE_RTOL * f.sigma[0];
    if tie {
        warn!("sigma_{r} = {:.6e} and sigma_{} = {:.6e} are tied; truncation split kept", f.sigma[r - 1], r + 1, f.sigma[r]);
    }

    let mut v = &f.s * f.u.columns(0, r);
    let mut w = &f.r * f.v.columns(0, r);
    for k in 0..r {
        let scale = 1.0 / f.sigma[k].sqrt();
        v.column_mut(k).scale_mut(scale);
        w.column_mut(k).scale_mut(scale);
    }
    let reduced = project_model(model, &v, &w)?;
    let bound_coefficient = 2.0 * tail_sum(&f.sigma, r);
    Ok(BalancedReduction { v, w, hsv: f.sigma, r, reduced, bound_coefficient, rank, capped, tie })
}

/// Per-mode projection `(WᵀA_jV, WᵀB_j, C_jV)`.
pub fn project_model(model: &LssModel, v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<LssModel> {
    model.check_shapes()?;
    if v.nrows() != model.n || w.shape() != v.shape() {
        return Err(Error::ShapeMismatch(format!(
            "projectors V {:?}, W {:?} for n = {}",
            v.shape(),
            w.shape(),
            model.n
        )));
    }
    let r = v.ncols();
    let defect = (w.tr_mul(v) - DMatrix::<f64>::identity(r, r)).norm();
    if !(defect <= BIORTH_TOL) {
        return Err(Error::BiorthogonalityViolated(defect));
    }
    let modes: Vec<Mode> = model
        .modes
        .par_iter()
        .map(|mode| Mode::new(w.tr_mul(&(&mode.a * v)), w.tr_mul(&mode.b), &mode.c * v))
        .collect();
    LssModel::new(modes, format!("{}-r{r}", model.label))
}

/// `2·(Σ_{k>r} σ_k)·‖u‖`.
pub fn error_bound(hsv: &[f64], r: usize, u_l2: f64) -> Result<f64> {
    if r > hsv.len() {
        return Err(Error::Invalid(format!("order {r} exceeds the {} available singular values", hsv.len())));
    }
    if !(u_l2 >= 0.0) {
        return Err(Error::Invalid(format!("input norm must be nonnegative, got {u_l2}")));
    }
    Ok(2.0 * tail_sum(hsv, r) * u_l2)
}

/// Coupling inequalities for mode `k ≥ 2`:
/// `Σ_j D_j𝒫D_jᵀ + Σ_{j≠k} B_jB_jᵀ − D_k𝒫 − 𝒫D_kᵀ ⪰ 0` and the dual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingCheck {
    pub mode: usize,
    pub min_eig_reach: f64,
    pub min_eig_obs: f64,
}

/// Per-mode Lyapunov inequalities `A_k𝒫 + 𝒫A_kᵀ + B_kB_kᵀ ⪯ 0` and
/// `A_kᵀ𝒬 + 𝒬A_k + C_kᵀC_k ⪯ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeLyapunovCheck {
    pub mode: usize,
    pub max_eig_reach: f64,
    pub max_eig_obs: f64,
    pub holds: bool,
    /// Both matrices negative definite beyond `tol`.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub tol: f64,
    pub coupling: Vec<CouplingCheck>,
    pub mode_lyapunov: Vec<ModeLyapunovCheck>,
    /// All coupling minimum eigenvalues are `≥ −tol`.
    pub verdict: bool,
}

impl AssumptionReport {
    pub fn all_strict(&self) -> bool {
        self.mode_lyapunov.iter().all(|m| m.strict)
    }
}

/// Dense eigenvalue check of the sufficient conditions under which the
/// truncation error bound is guaranteed.
pub fn check_assumption1(model: &LssModel, p: &DMatrix<f64>, q: &DMatrix<f64>, tol: f64) -> Result<AssumptionReport> {
    model.check_shapes()?;
    check_gramian("P", p, Some(model.n))?;
    check_gramian("Q", q, Some(model.n))?;
    let emb = bilinear_embed(model);
    let n = model.n;
    let bb: Vec<DMatrix<f64>> = model.modes.iter().map(|m| &m.b * m.b.transpose()).collect();
    let cc: Vec<DMatrix<f64>> = model.modes.iter().map(|m| m.c.transpose() * &m.c).collect();
    let mut dpd = DMatrix::zeros(n, n);
    let mut dqd = DMatrix::zeros(n, n);
    for d in &emb.d {
        dpd += d * p * d.transpose();
        dqd += d.transpose() * q * d;
    }
    let sum_bb = bb.iter().fold(DMatrix::zeros(n, n), |acc, x| acc + x);
    let sum_cc = cc.iter().fold(DMatrix::zeros(n, n), |acc, x| acc + x);

    let coupling: Vec<CouplingCheck> = (2..=model.num_modes())
        .map(|k| {
            let d = &emb.d[k - 1];
            let dp = d * p;
            let reach = &dpd + &sum_bb - &bb[k - 1] - &dp - dp.transpose();
            let qd = q * d;
            let obs = &dqd + &sum_cc - &cc[k - 1] - &qd - qd.transpose();
            CouplingCheck { mode: k, min_eig_reach: min_sym_eigenvalue(&reach), min_eig_obs: min_sym_eigenvalue(&obs) }
        })
        .collect();

    let mode_lyapunov = model
        .modes
        .iter()
        .enumerate()
        .map(|(idx, mode)| {
            let ap = &mode.a * p;
            let qa = q * &mode.a;
            let max_eig_reach = max_sym_eigenvalue(&(&ap + ap.transpose() + &bb[idx]));
            let max_eig_obs = max_sym_eigenvalue(&(&qa + qa.transpose() + &cc[idx]));
            let worst = max_eig_reach.max(max_eig_obs);
            ModeLyapunovCheck { mode: idx + 1, max_eig_reach, max_eig_obs, holds: worst <= tol, strict: worst < -tol }
        })
        .collect();

    let verdict = coupling.iter().all(|c| c.min_eig_reach >= -tol && c.min_eig_obs >= -tol);
    Ok(AssumptionReport { tol, coupling, mode_lyapunov, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCertificate {
    /// `max_j λ_max(A_jᵀX + XA_j) < 0`.
    pub verdict: bool,
    /// `λ_max(A_jᵀX + XA_j)` per mode.
    pub max_eigenvalues: Vec<f64>,
    /// `λ_min(A_jᵀX + XA_j)` per mode.
    pub min_eigenvalues: Vec<f64>,
}

/// Checks `X` as a common quadratic Lyapunov function for all modes.
pub fn quadratic_stability_certificate(model: &LssModel, x: &DMatrix<f64>) -> Result<StabilityCertificate> {
    model.check_shapes()?;
    check_gramian("X", x, Some(model.n))?;
    let min_eig = min_sym_eigenvalue(x);
    if !(min_eig > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    let (mut max_eigenvalues, mut min_eigenvalues) = (Vec::new(), Vec::new());
    for mode in &model.modes {
        let xa = x * &mode.a;
        let lyap = xa.transpose() + &xa;
        max_eigenvalues.push(max_sym_eigenvalue(&lyap));
        min_eigenvalues.push(min_sym_eigenvalue(&lyap));
    }
    let verdict = max_eigenvalues.iter().all(|&l| l < 0.0);
    Ok(StabilityCertificate { verdict, max_eigenvalues, min_eigenvalues })
}

/// Candidate Lyapunov matrix for the reduced model: `Vᵀ𝒬V`, which equals
/// `Σ₁` for the balanced projectors.
pub fn reduced_certificate_matrix(red: &BalancedReduction, q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = red.v.tr_mul(&(q * &red.v));
    crate::linalg::symmetrize(&mut x);
    x
}
