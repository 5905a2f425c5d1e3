//! Balanced truncation of a random three-mode system: Hankel singular
//! values, error bound coefficient, the sufficient condition for the bound
//! and the stability certificate of the reduced model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swibal::balred::{balance_truncate, check_assumption1, order_for_energy, quadratic_stability_certificate, reduced_certificate_matrix, Order};
use swibal::builtin::{random_instance, RandomSpec};
use swibal::gramians::gramian_pair;
use swibal::linalg::{spectral_abscissa, DEFAULT_RTOL};
use swibal::lyap::GenSolveOptions;

fn main() -> swibal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = random_instance(&mut rng, RandomSpec::new(20, 2, 2, 3).d_fraction(0.3));
    let (p, q) = gramian_pair(&model, &GenSolveOptions::default())?;

    let red = balance_truncate(&model, &p.matrix, &q.matrix, Order::EnergyTol(5e-2), DEFAULT_RTOL)?;
    println!("hsv: {:?}", red.hsv.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>());
    println!("order {} (energy rule gives {}), 2*sum of tail = {:.3e}", red.r, order_for_energy(&red.hsv, 5e-2), red.bound_coefficient);
    println!("|W^T V - I| = {:.2e}", (red.w.transpose() * &red.v - nalgebra::DMatrix::identity(red.r, red.r)).amax());

    for (j, mode) in red.reduced.modes.iter().enumerate() {
        println!("reduced mode {}: spectral abscissa {:.3}", j + 1, spectral_abscissa(&mode.a));
    }

    let report = check_assumption1(&model, &p.matrix, &q.matrix, 1e-8)?;
    println!("sufficient condition for the bound: {}", report.verdict);
    let x = reduced_certificate_matrix(&red, &q.matrix);
    let cert = quadratic_stability_certificate(&red.reduced, &x)?;
    println!("common quadratic Lyapunov function for the reduced model: {} {:?}", cert.verdict, cert.max_eigenvalues);
    Ok(())
}
