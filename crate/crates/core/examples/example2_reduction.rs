//! Order-15 reduction of the two-mode tridiagonal benchmark, generalized
//! against averaged Gramians. Pass the state dimension as the first
//! argument (default 100; 1000 takes a few minutes in release mode).

use std::time::Instant;

use swibal::balred::{balance_truncate, check_assumption1, Order};
use swibal::builtin;
use swibal::gramians::{averaged_gramians, gramian_pair, AvgScale};
use swibal::linalg::DEFAULT_RTOL;
use swibal::lyap::GenSolveOptions;
use swibal::sim::{l2_norm_input, output_error, Horizon, DEFAULT_STEP};

fn main() -> swibal::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let start = Instant::now();
    let model = builtin::example2(n);
    let scenario = builtin::example2_scenario();

    let (p, q) = gramian_pair(&model, &GenSolveOptions::default())?;
    println!("Gramians in {:.1?} ({} series terms)", start.elapsed(), p.report.iterations);
    let red = balance_truncate(&model, &p.matrix, &q.matrix, Order::Fixed(15), DEFAULT_RTOL)?;
    let head: Vec<String> = red.hsv.iter().take(5).map(|s| format!("{:.5}", s / red.hsv[0])).collect();
    println!("normalized hsv: {}", head.join(", "));
    let u = l2_norm_input(&scenario.input, model.m, Horizon::Infinite)?;
    println!("|u| = {u:.4}, bound = {:.4e}", red.bound_coefficient * u);
    let cond = check_assumption1(&model, &p.matrix, &q.matrix, 1e-8)?;
    println!("sufficient condition for the bound holds: {}", cond.verdict);

    let avg = averaged_gramians(&model, AvgScale::Sum)?;
    let red_avg = balance_truncate(&model, &avg.p_avg, &avg.q_avg, Order::AtMost(15), DEFAULT_RTOL)?;
    if red_avg.capped {
        println!("averaged Gramians have numerical rank {}; order lowered to {}", red_avg.rank, red_avg.r);
    }

    let gen = output_error(&model, &red.reduced, &scenario, DEFAULT_STEP, Some(&red.hsv))?;
    let ave = output_error(&model, &red_avg.reduced, &scenario, DEFAULT_STEP, None)?;
    println!("generalized: |y - y_r| = {:.3e} (bound satisfied: {:?})", gen.l2_error, gen.bound_satisfied);
    println!("averaged:    |y - y_r| = {:.3e}", ave.l2_error);
    println!("total {:.1?}", start.elapsed());
    Ok(())
}
