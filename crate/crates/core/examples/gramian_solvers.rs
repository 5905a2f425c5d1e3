//! Solves one generalized Lyapunov equation three ways and prints how the
//! fixed-point series converges.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swibal::builtin::{random_instance, RandomSpec};
use swibal::lyap::{existence_margin, residual, series_terms, solve_generalized, GenSolveOptions, Method};
use swibal::model::bilinear_embed;

fn main() -> swibal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = random_instance(&mut rng, RandomSpec::new(12, 2, 1, 3).d_fraction(0.7));
    let emb = bilinear_embed(&model);
    let w: DMatrix<f64> = emb.b.iter().map(|b| b * b.transpose()).sum();

    let ex = existence_margin(&emb.a, &emb.d)?;
    println!(
        "existence: alpha = {:.3}, beta = {:.3}, {:.3e} < {:.3e}: {}{}",
        ex.alpha,
        ex.beta,
        ex.lhs,
        ex.rhs,
        ex.satisfied,
        if ex.heuristic { " (sampled beta)" } else { "" }
    );

    let mut solutions = Vec::new();
    for method in [Method::Kronecker, Method::FixedPoint, Method::Auto] {
        let (x, rep) = solve_generalized(&emb.a, &emb.d, &w, &GenSolveOptions::default().with_method(method))?;
        println!("{method:?}: {} terms, residual {:.2e}", rep.iterations, residual(&emb.a, &emb.d, &w, &x)?);
        solutions.push(x);
    }
    println!("|X_kron - X_fp| / |X_kron| = {:.2e}", (&solutions[0] - &solutions[1]).norm() / solutions[0].norm());

    for (k, t) in series_terms(&emb.a, &emb.d, &w, 10)?.iter().enumerate() {
        println!("term {k}: |X_k| = {:.3e}", t.norm());
    }
    Ok(())
}
