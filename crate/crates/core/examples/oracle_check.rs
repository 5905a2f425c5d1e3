//! Compares Gramian ranges with the Gramian-free subspace closure on a
//! batch of random structured systems.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swibal::builtin::random_sweep_instance;
use swibal::linalg::DEFAULT_RTOL;
use swibal::lyap::GenSolveOptions;
use swibal::oracle::compare_with_gramians;

fn main() -> swibal::Result<()> {
    let count: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let opts = GenSolveOptions::default();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for i in 0..count {
        let model = random_sweep_instance(&mut rng);
        let cmp = compare_with_gramians(&model, &opts, DEFAULT_RTOL)?;
        worst = worst.max(cmp.reachable.max_angle).max(cmp.observable.max_angle);
        if !cmp.matches() {
            failures += 1;
            println!("instance {i} (n = {}): {cmp:?}", model.n);
        }
        if i < 5 {
            println!(
                "n = {}, modes = {}: reachable rank {}, observable rank {}",
                model.n,
                model.num_modes(),
                cmp.reachable.gramian_rank,
                cmp.observable.gramian_rank
            );
        }
    }
    println!("{count} instances, {failures} mismatches, largest principal angle {worst:.2e}");
    Ok(())
}
