//! Bartels–Stewart solver for `A X + X Aᵀ + W = 0` on top of a real Schur
//! factorization `A = Q T Qᵀ`.
//!
//! The factorization is computed once and reused for every right-hand side,
//! which is what makes the fixed-point series affordable at `n ≈ 1000`.

use nalgebra::{DMatrix, Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Gap below which `λ_i + λ_j` is treated as zero.
pub const NEAR_SINGULAR_GAP: f64 = 1e-12;

/// Cached real Schur form of a Hurwitz matrix.
#[derive(Debug, Clone)]
pub struct SchurLyapunov {
    q: DMatrix<f64>,
    t: DMatrix<f64>,
    /// Diagonal blocks of `T` as `(start, size)` with size 1 or 2.
    blocks: Vec<(usize, usize)>,
    abscissa: f64,
}

fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            debug_assert!(k + 2 >= n || t[(k + 2, k + 1)] == 0.0, "Schur form has a chained subdiagonal");
            blocks.push((k, 2));
            k += 2;
        } else {
            blocks.push((k, 1));
            k += 1;
        }
    }
    blocks
}

/// Eigenvalues `(re, im)` of the diagonal blocks.
fn block_eigenvalues(t: &DMatrix<f64>, blocks: &[(usize, usize)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(t.nrows());
    for &(s, size) in blocks {
        if size == 1 {
            out.push((t[(s, s)], 0.0));
        } else {
            let (a, b, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let r = disc.sqrt();
                out.push((half_tr + r, 0.0));
                out.push((half_tr - r, 0.0));
            } else {
                let r = (-disc).sqrt();
                out.push((half_tr, r));
                out.push((half_tr, -r));
            }
        }
    }
    out
}

impl SchurLyapunov {
    /// Factorizes `a`; fails unless it is Hurwitz and `λ_i + λ_j` stays
    /// away from zero.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        assert!(a.is_square(), "Lyapunov operator needs a square matrix");
        let n = a.nrows();
        let (q, t) = if n == 0 {
            (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
        } else {
            a.clone().schur().unpack()
        };
        let blocks = diagonal_blocks(&t);
        let eigs = block_eigenvalues(&t, &blocks);
        let abscissa = eigs.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        if abscissa.is_nan() || abscissa >= 0.0 {
            return Err(Error::NotHurwitz { abscissa });
        }
        // min |λ_i + λ_j| over all pairs.
        let mut gap = f64::INFINITY;
        for (i, ei) in eigs.iter().enumerate() {
            for ej in &eigs[i..] {
                gap = gap.min((ei.0 + ej.0).hypot(ei.1 + ej.1));
            }
        }
        if gap < NEAR_SINGULAR_GAP {
            return Err(Error::NearSingular { gap });
        }
        Ok(SchurLyapunov { q, t, blocks, abscissa })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn spectral_abscissa(&self) -> f64 {
        self.abscissa
    }

    pub fn schur_vectors(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `Qᵀ X Q`.
    pub fn to_schur(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.q.tr_mul(&(x * &self.q))
    }

    /// `Q Y Qᵀ`.
    pub fn from_schur(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * (y * self.q.transpose())
    }

    /// Solves `A X + X Aᵀ + W = 0`; `W` is symmetrized first and the
    /// returned `X` is exactly symmetric.
    pub fn solve(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w_hat = self.to_schur(w);
        symmetrize(&mut w_hat);
        let y = self.solve_schur(&w_hat);
        let mut x = self.from_schur(&y);
        symmetrize(&mut x);
        x
    }

    /// Solves `T Y + Y Tᵀ + W = 0` in Schur coordinates for symmetric `W`.
    ///
    /// Column blocks are computed from the last to the first. Entries of a
    /// column block below its diagonal block are already known by symmetry,
    /// the rest follow by block back-substitution against `T`.
    pub fn solve_schur(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let t = &self.t;
        let tdata = t.as_slice();
        let mut y = DMatrix::<f64>::zeros(n, n);

        for &(c, s) in self.blocks.iter().rev() {
            let top = c + s;
            // rhs[l] holds rows 0..top of column c + l.
            let mut rhs: Vec<Vec<f64>> = (0..s).map(|l| (0..top).map(|i| -w[(i, c + l)]).collect()).collect();

            // − Σ_{k ≥ top} Y[:, k] T[c+l, k]
            for k in top..n {
                let ycol = &y.as_slice()[k * n..k * n + top];
                for (l, r) in rhs.iter_mut().enumerate() {
                    let coef = t[(c + l, k)];
                    if coef != 0.0 {
                        for (ri, yi) in r.iter_mut().zip(ycol) {
                            *ri -= coef * yi;
                        }
                    }
                }
            }

            // Rows below the block are Y[J, k]ᵀ for k ≥ top; move their
            // contribution T[i, k] Z[k] to the right-hand side.
            for k in top..n {
                let tcol = &tdata[k * n..k * n + top];
                for (l, r) in rhs.iter_mut().enumerate() {
                    let z = y[(c + l, k)];
                    if z != 0.0 {
                        for (ri, ti) in r.iter_mut().zip(tcol) {
                            *ri -= ti * z;
                        }
                    }
                }
            }

            // Back-substitution over row blocks I ≤ J.
            let tjj = block(t, c, s);
            let mut z = vec![vec![0.0; top]; s];
            for &(r0, a) in self.blocks.iter().rev().filter(|b| b.0 <= c) {
                let tii = block(t, r0, a);
                let local: Vec<[f64; 2]> = (0..a)
                    .map(|i| {
                        let mut row = [0.0; 2];
                        for (l, v) in row.iter_mut().enumerate().take(s) {
                            *v = rhs[l][r0 + i];
                        }
                        row
                    })
                    .collect();
                let zi = solve_small_sylvester(&tii, a, &tjj, s, &local);
                for i in 0..a {
                    for l in 0..s {
                        z[l][r0 + i] = zi[i][l];
                    }
                }
                // rhs[0..r0] -= T[0..r0, I] Z_I
                for i in 0..a {
                    let tcol = &tdata[(r0 + i) * n..(r0 + i) * n + r0];
                    for l in 0..s {
                        let zv = zi[i][l];
                        if zv != 0.0 {
                            for (ri, ti) in rhs[l][..r0].iter_mut().zip(tcol) {
                                *ri -= ti * zv;
                            }
                        }
                    }
                }
            }

            for (l, zl) in z.iter().enumerate() {
                for (i, v) in zl.iter().enumerate() {
                    y[(i, c + l)] = *v;
                }
                for k in top..n {
                    y[(k, c + l)] = y[(c + l, k)];
                }
            }
        }
        symmetrize(&mut y);
        y
    }
}

fn block(t: &DMatrix<f64>, s: usize, size: usize) -> [[f64; 2]; 2] {
    let mut b = [[0.0; 2]; 2];
    for i in 0..size {
        for j in 0..size {
            b[i][j] = t[(s + i, s + j)];
        }
    }
    b
}

/// Solves `T_I Z + Z T_Jᵀ = R` for blocks of size 1 or 2.
fn solve_small_sylvester(ti: &[[f64; 2]; 2], a: usize, tj: &[[f64; 2]; 2], s: usize, r: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if a == 1 && s == 1 {
        return vec![[r[0][0] / (ti[0][0] + tj[0][0]), 0.0]];
    }
    // Unknowns z[i][l] at index i + a·l (column-major vec).
    let dim = a * s;
    let mut m = Matrix4::<f64>::zeros();
    let mut rhs = Vector4::<f64>::zeros();
    for l in 0..s {
        for i in 0..a {
            let row = i + a * l;
            rhs[row] = r[i][l];
            // (T_I Z)[i][l] = Σ_k T_I[i][k] z[k][l]
            for k in 0..a {
                m[(row, k + a * l)] += ti[i][k];
            }
            // (Z T_Jᵀ)[i][l] = Σ_k z[i][k] T_J[l][k]
            for k in 0..s {
                m[(row, i + a * k)] += tj[l][k];
            }
        }
    }
    let sub = m.view((0, 0), (dim, dim)).clone_owned();
    let b = rhs.rows(0, dim).clone_owned();
    let sol = sub.lu().solve(&b).expect("diagonal block Sylvester system is nonsingular for Hurwitz T");
    let mut out = vec![[0.0; 2]; a];
    for l in 0..s {
        for (i, o) in out.iter_mut().enumerate() {
            o[l] = sol[i + a * l];
        }
    }
    out
}
