//! Gramian-free reachable and observable subspaces.
//!
//! The reachable space is the smallest subspace containing every
//! `range(B_j)` and invariant under every `A_j`. It is computed by a sweep
//! closure `V_{s+1} = orth([V_s, A_1V_s, …, A_MV_s])` that re-orthonormalizes
//! after every sweep; rank can only grow and is bounded by `n`, so the
//! closure saturates within `n` sweeps. Powers and products of the `A_j`
//! are never formed explicitly.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::gramians::{gramian_pair, range_basis, SubspaceBasis};
use crate::linalg::{hstack, max_principal_angle, orth, DEFAULT_RTOL};
use crate::lyap::GenSolveOptions;
use crate::model::{bilinear_embed, LssModel};

/// Principal-angle threshold for declaring two subspaces equal.
pub const MATCH_ANGLE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureResult {
    pub basis: SubspaceBasis,
    /// Expansion sweeps performed.
    pub sweeps: usize,
    /// One more sweep would not increase the rank.
    pub saturated: bool,
}

/// Smallest subspace containing `range(start)` and invariant under every
/// generator.
pub fn invariant_closure(
    start: &DMatrix<f64>,
    generators: &[&DMatrix<f64>],
    max_sweeps: usize,
    rtol: f64,
) -> Result<ClosureResult> {
    let n = start.nrows();
    let mut v = orth(start, rtol)?;
    let mut sweeps = 0;
    let mut saturated = v.ncols() == n;
    while !saturated && sweeps < max_sweeps && v.ncols() > 0 {
        let images: Vec<DMatrix<f64>> = generators.iter().map(|g| *g * &v).collect();
        let mut blocks: Vec<&DMatrix<f64>> = vec![&v];
        blocks.extend(images.iter());
        let next = orth(&hstack(&blocks), rtol)?;
        sweeps += 1;
        let grew = next.ncols() > v.ncols();
        v = next;
        saturated = !grew || v.ncols() == n;
    }
    if v.ncols() == 0 {
        saturated = true;
    }
    let rank = v.ncols();
    Ok(ClosureResult { basis: SubspaceBasis::from_orthonormal(v, vec![1.0; rank], rtol), sweeps, saturated })
}

/// Reachable space from the closure over `{A_1, …, A_M}` started at
/// `[B_1 … B_M]`. `max_sweeps` defaults to `n`.
pub fn reachable_space_bruteforce(model: &LssModel, max_sweeps: Option<usize>) -> Result<ClosureResult> {
    let bs: Vec<&DMatrix<f64>> = model.modes.iter().map(|m| &m.b).collect();
    let gens: Vec<&DMatrix<f64>> = model.modes.iter().map(|m| &m.a).collect();
    invariant_closure(&hstack(&bs), &gens, max_sweeps.unwrap_or(model.n), DEFAULT_RTOL)
}

/// Observable space from the closure over `{A_1ᵀ, …, A_Mᵀ}` started at
/// `[C_1ᵀ … C_Mᵀ]`.
pub fn observable_space_bruteforce(model: &LssModel, max_sweeps: Option<usize>) -> Result<ClosureResult> {
    reachable_space_bruteforce(&model.dual(), max_sweeps)
}

/// Same closure over the embedded generator set `{D_1, …, D_M, A}`; equal
/// to [`reachable_space_bruteforce`] because each `A_j = A + D_j` and each
/// `D_j = A_j − A_1` lie in the span of the other set.
pub fn embedded_closure(model: &LssModel) -> Result<ClosureResult> {
    let emb = bilinear_embed(model);
    let bs: Vec<&DMatrix<f64>> = emb.b.iter().collect();
    let mut gens: Vec<&DMatrix<f64>> = emb.d.iter().collect();
    gens.push(&emb.a);
    invariant_closure(&hstack(&bs), &gens, model.n, DEFAULT_RTOL)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceMatch {
    pub gramian_rank: usize,
    pub closure_rank: usize,
    /// Largest principal angle; `π/2` when the ranks differ.
    pub max_angle: f64,
    pub matches: bool,
}

impl SubspaceMatch {
    fn between(gramian: &SubspaceBasis, closure: &SubspaceBasis) -> Self {
        let max_angle = if gramian.rank == closure.rank {
            max_principal_angle(&gramian.basis, &closure.basis)
        } else {
            std::f64::consts::FRAC_PI_2
        };
        SubspaceMatch {
            gramian_rank: gramian.rank,
            closure_rank: closure.rank,
            max_angle,
            matches: gramian.rank == closure.rank && max_angle < MATCH_ANGLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub reachable: SubspaceMatch,
    pub observable: SubspaceMatch,
}

impl OracleComparison {
    pub fn matches(&self) -> bool {
        self.reachable.matches && self.observable.matches
    }
}

/// Compares `range 𝒫` and `range 𝒬` against the closures.
pub fn compare_with_gramians(model: &LssModel, opts: &GenSolveOptions, rtol: f64) -> Result<OracleComparison> {
    let (p, q) = gramian_pair(model, opts)?;
    let reach = reachable_space_bruteforce(model, None)?;
    let obs = observable_space_bruteforce(model, None)?;
    Ok(OracleComparison {
        reachable: SubspaceMatch::between(&range_basis(&p.matrix, rtol), &reach.basis),
        observable: SubspaceMatch::between(&range_basis(&q.matrix, rtol), &obs.basis),
    })
}
