//! Reachable and observable subspaces of the 8-state, two-mode example,
//! and why the averaged Gramian misses most of the reachable space.

use swibal::builtin;
use swibal::gramians::{averaged_gramians, eigenvalue_profile, is_completely_observable, is_completely_reachable, reach_gramian, AvgScale};
use swibal::lyap::GenSolveOptions;

fn main() -> swibal::Result<()> {
    let model = builtin::example1();
    let opts = GenSolveOptions::default();

    let p = reach_gramian(&model, &opts)?;
    println!("P diagonal: {:?}", p.matrix.diagonal().as_slice());
    println!("eigenvalues of P: {:?}", eigenvalue_profile(&p.matrix).as_slice());

    let reach = is_completely_reachable(&model, &opts)?;
    let obs = is_completely_observable(&model, &opts)?;
    println!("reachable: {} (rank {}/{})", reach.verdict, reach.rank, reach.n);
    println!("observable: {} (rank {}/{})", obs.verdict, obs.rank, obs.n);

    let avg = averaged_gramians(&model, AvgScale::Sum)?;
    println!("averaged P diagonal: {:?}", avg.p_avg.diagonal().as_slice());
    Ok(())
}
