//! Simulates a switched system under a custom schedule, writes the
//! trajectory as CSV and compares two reduced orders.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swibal::balred::{balance_truncate, Order};
use swibal::builtin::{random_instance, RandomSpec};
use swibal::gramians::gramian_pair;
use swibal::linalg::DEFAULT_RTOL;
use swibal::lyap::GenSolveOptions;
use swibal::model::{InputSignal, Scenario, Segment, SwitchingSignal};
use swibal::sim::{l2_norm_input, output_error, simulate_switched, Horizon, DEFAULT_STEP};

fn main() -> swibal::Result<()> {
    let model = random_instance(&mut ChaCha8Rng::seed_from_u64(5), RandomSpec::new(16, 1, 1, 2));
    let switching = SwitchingSignal::new(vec![
        Segment { t_end: 1.0, mode: 1 },
        Segment { t_end: 1.5, mode: 2 },
        Segment { t_end: 3.0, mode: 1 },
        Segment { t_end: 4.0, mode: 2 },
    ])?;
    let input = InputSignal::SineDecay { amplitude: 5.0, omega: 4.0, lambda: 0.5, mask: None };
    let scenario = Scenario::new(4.0, switching, input);

    let traj = simulate_switched(&model, &scenario, DEFAULT_STEP)?;
    let path = std::env::temp_dir().join("swibal_trajectory.csv");
    traj.write_csv(&mut std::io::BufWriter::new(std::fs::File::create(&path)?), false)?;
    println!("{} samples written to {}", traj.len(), path.display());
    println!("|u| on [0, 4] = {:.4}", l2_norm_input(&scenario.input, model.m, Horizon::Finite(4.0))?);

    let (p, q) = gramian_pair(&model, &GenSolveOptions::default())?;
    for r in [2, 4, 8] {
        let red = balance_truncate(&model, &p.matrix, &q.matrix, Order::Fixed(r), DEFAULT_RTOL)?;
        let err = output_error(&model, &red.reduced, &scenario, DEFAULT_STEP, Some(&red.hsv))?;
        println!("r = {r}: |y - y_r| = {:.3e}, bound {:.3e}", err.l2_error, err.bound.unwrap_or(f64::NAN));
    }
    Ok(())
}
