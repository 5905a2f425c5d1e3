//! Built-in instances: the 8-state reachability example, the tridiagonal
//! two-mode reduction benchmark with its switching scenario, and seeded
//! random stable instances for property sweeps.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{InputSignal, LssModel, Mode, Scenario, Segment, SwitchingSignal};

fn unit_column(n: usize, k: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, 1);
    e[(k, 0)] = 1.0;
    e
}

fn tridiagonal(n: usize, sub: f64, diag: f64, sup: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if i == j + 1 {
            sub
        } else if j == i + 1 {
            sup
        } else {
            0.0
        }
    })
}

/// Two modes on `R⁸`: `A₁ = −I`, `A₂ = A₁ + D` with `D` the partial shift
/// `D₂₁ = D₃₂ = D₄₃ = 1`, `B₁ = e₁`, `B₂ = e₈`, `C_j = B_jᵀ`.
pub fn example1() -> LssModel {
    let n = 8;
    let a1 = -DMatrix::<f64>::identity(n, n);
    let mut a2 = a1.clone();
    a2[(1, 0)] = 1.0;
    a2[(2, 1)] = 1.0;
    a2[(3, 2)] = 1.0;
    let b1 = unit_column(n, 0);
    let b2 = unit_column(n, n - 1);
    LssModel::new(
        vec![
            Mode::new(a1, b1.clone(), b1.transpose()),
            Mode::new(a2, b2.clone(), b2.transpose()),
        ],
        "example1",
    )
    .expect("consistent shapes")
}

/// Tridiagonal two-mode family of order `n ≥ 2`.
///
/// `A₁ = tridiag(0.1, −2, 1)`, `A₂ = tridiag(1, −2, 0.5)` (sub, diagonal,
/// super), `B₁ = e₁`, `B₂ = e_n`, `C₁ = e₂ᵀ`, `C₂ = e_{n−1}ᵀ`.
pub fn example2(n: usize) -> LssModel {
    assert!(n >= 2, "example2 needs n >= 2");
    LssModel::new(
        vec![
            Mode::new(tridiagonal(n, 0.1, -2.0, 1.0), unit_column(n, 0), unit_column(n, 1).transpose()),
            Mode::new(tridiagonal(n, 1.0, -2.0, 0.5), unit_column(n, n - 1), unit_column(n, n - 2).transpose()),
        ],
        format!("example2 (n = {n})"),
    )
    .expect("consistent shapes")
}

/// Mode 1 on `[0,0.5) ∪ [2,2.5) ∪ [4,5) ∪ [5.5,6]`, mode 2 elsewhere.
pub fn example2_switching() -> SwitchingSignal {
    let seg = |t_end, mode| Segment { t_end, mode };
    SwitchingSignal::new(vec![
        seg(0.5, 1),
        seg(2.0, 2),
        seg(2.5, 1),
        seg(4.0, 2),
        seg(5.0, 1),
        seg(5.5, 2),
        seg(6.0, 1),
    ])
    .expect("ordered segments")
}

/// `u(t) = 10 sin(30t) e^{−t}` over `[0, 6]` with [`example2_switching`].
pub fn example2_scenario() -> Scenario {
    Scenario::new(
        6.0,
        example2_switching(),
        InputSignal::SineDecay { amplitude: 10.0, omega: 30.0, lambda: 1.0, mask: None },
    )
}

pub fn scalar_lti(a: f64, b: f64, c: f64) -> LssModel {
    let s = |v| DMatrix::from_element(1, 1, v);
    LssModel::new(vec![Mode::new(s(a), s(b), s(c))], "scalar").expect("consistent shapes")
}

/// Knobs for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub modes: usize,
    /// Fraction of the series-convergence budget `Σ‖D_j‖² < 2α` spent on
    /// the mode differences; keep below 1.
    pub d_fraction: f64,
    /// Plant nested invariant subspaces so that reachable and observable
    /// spaces are generically proper subspaces.
    pub structured: bool,
}

impl RandomSpec {
    pub fn new(n: usize, m: usize, p: usize, modes: usize) -> Self {
        RandomSpec { n, m, p, modes, d_fraction: 0.5, structured: false }
    }

    pub fn structured(mut self) -> Self {
        self.structured = true;
        self
    }

    pub fn d_fraction(mut self, f: f64) -> Self {
        self.d_fraction = f;
        self
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-like random orthogonal matrix from the QR factorization of a
/// Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let qr = gaussian(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

fn spectral_radius(g: &DMatrix<f64>) -> f64 {
    g.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Random stable switched system.
///
/// The first mode is `A₁ = (G − Gᵀ)/2 − (c + ρ(G))·I`, which is Hurwitz
/// with abscissa `−(c + ρ(G))`; the other modes add perturbations `D_j`
/// with `Σ‖D_j‖₂² = d_fraction·2α` and `‖D_j‖₂ < α`, so every mode is
/// Hurwitz and the fixed-point Gramian series converges.
///
/// With `structured`, a random flag `V₁ ⊂ V₂` is made invariant for every
/// mode, the inputs live in `V₂` and the outputs vanish on `V₁`, and the
/// whole system is rotated by a random orthogonal matrix.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, spec: RandomSpec) -> LssModel {
    let RandomSpec { n, m, p, modes, d_fraction, structured } = spec;
    assert!(n >= 1 && modes >= 1);
    let (k1, k2) = if structured {
        let a = rng.random_range(0..=n);
        let b = rng.random_range(0..=n);
        (a.min(b), a.max(b).max(1))
    } else {
        (0, n)
    };
    let block = |i: usize| usize::from(i >= k1) + usize::from(i >= k2);
    let mask_lower = |mut x: DMatrix<f64>| {
        for j in 0..n {
            for i in 0..n {
                if block(i) > block(j) {
                    x[(i, j)] = 0.0;
                }
            }
        }
        x
    };

    let g = gaussian(rng, n, n);
    let c: f64 = rng.random_range(0.2..1.0);
    let alpha = c + spectral_radius(&g);
    let skew = (&g - g.transpose()) * 0.5;
    let coupling = if structured { mask_lower(gaussian(rng, n, n)) * 0.3 } else { DMatrix::zeros(n, n) };
    // Off-diagonal blocks only; diagonal blocks stay skew minus shift.
    let coupling = DMatrix::from_fn(n, n, |i, j| if block(i) < block(j) { coupling[(i, j)] } else { 0.0 });
    let a1 = mask_lower(skew) - DMatrix::<f64>::identity(n, n) * alpha + coupling;

    let per_mode = if modes > 1 { (d_fraction * 2.0 * alpha / (modes - 1) as f64).sqrt() } else { 0.0 };
    let d_norm = per_mode.min(0.9 * alpha);
    let mut out = Vec::with_capacity(modes);
    for j in 0..modes {
        let a = if j == 0 {
            a1.clone()
        } else {
            let raw = mask_lower(gaussian(rng, n, n));
            let nrm = crate::linalg::spectral_norm(&raw);
            if nrm > 0.0 {
                &a1 + raw * (d_norm / nrm)
            } else {
                a1.clone()
            }
        };
        let mut b = gaussian(rng, n, m);
        for i in k2..n {
            b.row_mut(i).fill(0.0);
        }
        let mut cm = gaussian(rng, p, n);
        for i in 0..k1 {
            cm.column_mut(i).fill(0.0);
        }
        out.push(Mode::new(a, b, cm));
    }
    let model = LssModel::new(out, format!("random n={n} M={modes}")).expect("consistent shapes");
    if structured {
        let t = random_orthogonal(rng, n);
        model.orthogonal_transform(&t)
    } else {
        model
    }
}

/// Random structured instance for property sweeps: `n ∈ 2..=8`,
/// `M ∈ 2..=3`, `m, p ∈ 1..=2`.
///
/// Single-mode single-input systems are left out: their Gramian
/// eigenvalues along reachable directions routinely fall below `1e-10`
/// relative for `n ≥ 5`, where no fixed rank threshold separates them from
/// rounding noise.
pub fn random_sweep_instance<R: Rng + ?Sized>(rng: &mut R) -> LssModel {
    let n = rng.random_range(2..=8);
    let modes = rng.random_range(2..=3);
    let m = rng.random_range(1..=2);
    let p = rng.random_range(1..=2);
    random_instance(rng, RandomSpec::new(n, m, p, modes).structured())
}
