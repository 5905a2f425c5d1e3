//! Fixed-step RK4 simulation of switched and bilinear-embedded dynamics,
//! L2 norms and output errors.
//!
//! Each switching segment is split into `⌈len/h⌉` equal steps, so switching
//! instants are grid points. At a switching instant the output is taken
//! with the incoming mode; the outgoing value is kept in
//! [`Trajectory::y_left`] so that quadrature does not smear the jump.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::balred::error_bound;
use crate::error::{Error, Result};
use crate::model::{BilinearEmbedding, InputSignal, LssModel, Scenario};

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    /// Output with the active (incoming) mode.
    pub y: Vec<DVector<f64>>,
    /// Left limit of the output; differs from `y` only at switching instants.
    pub y_left: Vec<DVector<f64>>,
    /// 1-based active mode.
    pub mode: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.x.last().expect("trajectory has at least one point")
    }

    /// Writes `t,mode,y_1..y_p[,x_1..x_n]` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W, with_state: bool) -> Result<()> {
        let p = self.y.first().map_or(0, |y| y.len());
        let n = self.x.first().map_or(0, |x| x.len());
        let mut header = vec!["t".to_string(), "mode".to_string()];
        header.extend((1..=p).map(|i| format!("y_{i}")));
        if with_state {
            header.extend((1..=n).map(|i| format!("x_{i}")));
        }
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.len() {
            write!(out, "{},{}", self.t[k], self.mode[k])?;
            for v in self.y[k].iter() {
                write!(out, ",{v}")?;
            }
            if with_state {
                for v in self.x[k].iter() {
                    write!(out, ",{v}")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Right-hand side and output map of one mode.
trait ModeDynamics {
    fn rhs(&self, mode: usize, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>);
    fn output(&self, mode: usize, x: &DVector<f64>) -> DVector<f64>;
}

struct Switched<'a>(&'a LssModel);

impl ModeDynamics for Switched<'_> {
    fn rhs(&self, mode: usize, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>) {
        let m = &self.0.modes[mode - 1];
        out.gemv(1.0, &m.a, x, 0.0);
        out.gemv(1.0, &m.b, u, 1.0);
    }

    fn output(&self, mode: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.0.modes[mode - 1].c * x
    }
}

/// `ẋ = Ax + Σ_j q_j(D_jx + B_ju)`, `y = Σ_j q_jC_jx` with one indicator set.
struct Bilinear<'a>(&'a BilinearEmbedding);

impl ModeDynamics for Bilinear<'_> {
    fn rhs(&self, mode: usize, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>) {
        let e = self.0;
        out.gemv(1.0, &e.a, x, 0.0);
        for j in 0..e.num_modes() {
            let q = if j + 1 == mode { 1.0 } else { 0.0 };
            out.gemv(q, &e.d[j], x, 1.0);
            out.gemv(q, &e.b[j], u, 1.0);
        }
    }

    fn output(&self, mode: usize, x: &DVector<f64>) -> DVector<f64> {
        let e = self.0;
        let mut y = DVector::zeros(e.c[0].nrows());
        for j in 0..e.num_modes() {
            let q = if j + 1 == mode { 1.0 } else { 0.0 };
            y.gemv(q, &e.c[j], x, 1.0);
        }
        y
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Invalid(format!("step size must be positive and finite, got {h}")));
    }
    Ok(())
}

fn integrate<F: ModeDynamics>(dyn_: &F, n: usize, m: usize, scenario: &Scenario, h: f64) -> Result<Trajectory> {
    let pieces = scenario.switching.pieces(scenario.horizon);
    let steps_total: usize = pieces.iter().map(|&(a, b, _)| ((b - a) / h).ceil().max(1.0) as usize).sum();
    let cap = steps_total + 1;
    let mut traj = Trajectory {
        t: Vec::with_capacity(cap),
        x: Vec::with_capacity(cap),
        y: Vec::with_capacity(cap),
        y_left: Vec::with_capacity(cap),
        mode: Vec::with_capacity(cap),
    };

    let mut x = scenario.initial_state(n);
    let first = pieces[0].2;
    let y0 = dyn_.output(first, &x);
    traj.t.push(0.0);
    traj.x.push(x.clone());
    traj.y_left.push(y0.clone());
    traj.y.push(y0);
    traj.mode.push(first);

    let input = &scenario.input;
    let (mut k1, mut k2, mut k3, mut k4) = (DVector::zeros(n), DVector::zeros(n), DVector::zeros(n), DVector::zeros(n));
    let mut tmp = DVector::zeros(n);
    for (idx, &(t0, t1, mode)) in pieces.iter().enumerate() {
        let steps = ((t1 - t0) / h).ceil().max(1.0) as usize;
        let hh = (t1 - t0) / steps as f64;
        for s in 0..steps {
            let t = t0 + s as f64 * hh;
            let t_next = if s + 1 == steps { t1 } else { t0 + (s + 1) as f64 * hh };
            let u0 = input.eval(t, m);
            let um = input.eval(t + 0.5 * hh, m);
            let u1 = input.eval(t_next, m);

            dyn_.rhs(mode, &x, &u0, &mut k1);
            tmp.copy_from(&x);
            tmp.axpy(0.5 * hh, &k1, 1.0);
            dyn_.rhs(mode, &tmp, &um, &mut k2);
            tmp.copy_from(&x);
            tmp.axpy(0.5 * hh, &k2, 1.0);
            dyn_.rhs(mode, &tmp, &um, &mut k3);
            tmp.copy_from(&x);
            tmp.axpy(hh, &k3, 1.0);
            dyn_.rhs(mode, &tmp, &u1, &mut k4);
            x.axpy(hh / 6.0, &k1, 1.0);
            x.axpy(hh / 3.0, &k2, 1.0);
            x.axpy(hh / 3.0, &k3, 1.0);
            x.axpy(hh / 6.0, &k4, 1.0);
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { t: t_next });
            }

            let y_left = dyn_.output(mode, &x);
            let (active, y) = if s + 1 == steps {
                match pieces.get(idx + 1) {
                    Some(&(_, _, next)) => (next, dyn_.output(next, &x)),
                    None => (mode, y_left.clone()),
                }
            } else {
                (mode, y_left.clone())
            };
            traj.t.push(t_next);
            traj.x.push(x.clone());
            traj.y.push(y);
            traj.y_left.push(y_left);
            traj.mode.push(active);
        }
    }
    Ok(traj)
}

/// RK4 simulation of `ẋ = A_{q(t)}x + B_{q(t)}u`, `y = C_{q(t)}x`.
pub fn simulate_switched(model: &LssModel, scenario: &Scenario, h: f64) -> Result<Trajectory> {
    check_step(h)?;
    model.check_shapes()?;
    scenario.check(model)?;
    integrate(&Switched(model), model.n, model.m, scenario, h)
}

/// RK4 simulation of the bilinear embedding driven by the mode indicators.
pub fn simulate_bilinear(emb: &BilinearEmbedding, scenario: &Scenario, h: f64) -> Result<Trajectory> {
    check_step(h)?;
    if emb.num_modes() == 0 {
        return Err(Error::Invalid("embedding has no modes".into()));
    }
    let model = emb.to_model("embedding");
    model.check_shapes()?;
    scenario.check(&model)?;
    integrate(&Bilinear(emb), model.n, model.m, scenario, h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

/// `∫₀^T sin²(ωt)e^{−2λt} dt`, with `T = ∞` allowed for `λ > 0`.
fn sine_decay_integral(omega: f64, lambda: f64, horizon: Horizon) -> Result<f64> {
    if omega == 0.0 {
        return Ok(0.0);
    }
    let w2 = omega * omega;
    match horizon {
        Horizon::Infinite if lambda > 0.0 => Ok(w2 / (4.0 * lambda * (lambda * lambda + w2))),
        Horizon::Infinite => Err(Error::DivergentIntegral),
        Horizon::Finite(t) if lambda == 0.0 => Ok(t / 2.0 - (2.0 * omega * t).sin() / (4.0 * omega)),
        Horizon::Finite(t) => {
            // sin² = (1 − cos 2ωt)/2
            let e = (-2.0 * lambda * t).exp();
            let flat = (1.0 - e) / (4.0 * lambda);
            let osc = (e * (-2.0 * lambda * (2.0 * omega * t).cos() + 2.0 * omega * (2.0 * omega * t).sin())
                + 2.0 * lambda)
                / (4.0 * (lambda * lambda + w2));
            Ok(flat - 0.5 * osc)
        }
    }
}

/// `‖u‖_{L2[0,T]}` for an input with `m` channels.
///
/// Sine-decay inputs use a closed form. Sampled inputs use the trapezoid
/// rule on their sample grid (exact on the held end pieces); on an
/// infinite horizon they converge only when the last sample is zero.
pub fn l2_norm_input(input: &InputSignal, m: usize, horizon: Horizon) -> Result<f64> {
    input.check(m)?;
    if let Horizon::Finite(t) = horizon {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Invalid(format!("horizon must be finite and nonnegative, got {t}")));
        }
    }
    match input {
        InputSignal::Zero => Ok(0.0),
        InputSignal::Constant { value } => {
            let norm = value.iter().map(|v| v * v).sum::<f64>().sqrt();
            match horizon {
                _ if norm == 0.0 => Ok(0.0),
                Horizon::Finite(t) => Ok(norm * t.sqrt()),
                Horizon::Infinite => Err(Error::DivergentIntegral),
            }
        }
        InputSignal::SineDecay { amplitude, omega, lambda, .. } => {
            if *amplitude == 0.0 {
                return Ok(0.0);
            }
            let k = input.active_channels(m) as f64;
            Ok(amplitude.abs() * (k * sine_decay_integral(*omega, *lambda, horizon)?).sqrt())
        }
        InputSignal::Sampled { t: grid, values } => {
            let end = match horizon {
                Horizon::Finite(t) => t,
                Horizon::Infinite => {
                    if values.last().expect("checked non-empty").iter().any(|&v| v != 0.0) {
                        return Err(Error::DivergentIntegral);
                    }
                    grid.last().copied().unwrap_or(0.0).max(0.0)
                }
            };
            let mut points = vec![0.0];
            points.extend(grid.iter().copied().filter(|&g| g > 0.0 && g < end));
            if end > 0.0 {
                points.push(end);
            }
            let sq = |t: f64| input.eval(t, m).norm_squared();
            let total: f64 = points.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (sq(w[0]) + sq(w[1]))).sum();
            Ok(total.sqrt())
        }
    }
}

fn trapezoid_sq(t: &[f64], left: &[DVector<f64>], right: &[DVector<f64>]) -> f64 {
    (1..t.len())
        .map(|k| 0.5 * (t[k] - t[k - 1]) * (right[k - 1].norm_squared() + left[k].norm_squared()))
        .sum()
}

/// Trapezoid approximation of `‖y‖_{L2}` over the trajectory grid.
pub fn l2_norm_output(traj: &Trajectory) -> f64 {
    trapezoid_sq(&traj.t, &traj.y_left, &traj.y).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub l2_error: f64,
    pub linf_error: f64,
    /// `‖u‖_{L2[0,T]}` of the scenario input.
    pub input_l2: f64,
    pub bound: Option<f64>,
    pub bound_satisfied: Option<bool>,
}

/// Output error between `model` and `reduced` on one grid.
///
/// With `hsv` given, the bound `2·Σ_{k>r}σ_k·‖u‖` uses `r = reduced.n`
/// and the input norm over the simulated horizon.
pub fn output_error(
    model: &LssModel,
    reduced: &LssModel,
    scenario: &Scenario,
    h: f64,
    hsv: Option<&[f64]>,
) -> Result<ErrorSummary> {
    if (model.m, model.p, model.num_modes()) != (reduced.m, reduced.p, reduced.num_modes()) {
        return Err(Error::ShapeMismatch(format!(
            "models differ in (m, p, modes): ({}, {}, {}) vs ({}, {}, {})",
            model.m,
            model.p,
            model.num_modes(),
            reduced.m,
            reduced.p,
            reduced.num_modes()
        )));
    }
    let reduced_scenario = Scenario { x0: None, ..scenario.clone() };
    if scenario.x0.as_ref().is_some_and(|x0| x0.iter().any(|&v| v != 0.0)) {
        return Err(Error::Invalid("output error comparison requires a zero initial state".into()));
    }
    let (full, red) = rayon::join(
        || simulate_switched(model, scenario, h),
        || simulate_switched(reduced, &reduced_scenario, h),
    );
    let (full, red) = (full?, red?);
    let diff = |a: &[DVector<f64>], b: &[DVector<f64>]| -> Vec<DVector<f64>> {
        a.iter().zip(b).map(|(u, v)| u - v).collect()
    };
    let e = diff(&full.y, &red.y);
    let e_left = diff(&full.y_left, &red.y_left);
    let l2_error = trapezoid_sq(&full.t, &e_left, &e).sqrt();
    let linf_error = e.iter().chain(&e_left).map(|v| v.amax()).fold(0.0, f64::max);
    let input_l2 = l2_norm_input(&scenario.input, model.m, Horizon::Finite(scenario.horizon))?;
    let (bound, bound_satisfied) = match hsv {
        Some(hsv) => {
            let b = error_bound(hsv, reduced.n.min(hsv.len()), input_l2)?;
            (Some(b), Some(l2_error <= b * (1.0 + 1e-6) + 1e-12))
        }
        None => (None, None),
    };
    Ok(ErrorSummary { l2_error, linf_error, input_l2, bound, bound_satisfied })
}

/// Matrix exponential based reference for one constant mode and constant
/// input: `x(t) = e^{At}x₀ + A⁻¹(e^{At} − I)Bu`.
pub fn lti_constant_input_reference(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    x0: &DVector<f64>,
    u: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    let e = (a * t).exp();
    let n = a.nrows();
    let forced = (&e - DMatrix::<f64>::identity(n, n)) * (b * u);
    let lu = a.clone().lu();
    let particular = lu.solve(&forced).ok_or(Error::Invalid("A is singular".into()))?;
    Ok(&e * x0 + particular)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::model::{bilinear_embed, Segment, SwitchingSignal};

    fn sine(a: f64, w: f64, l: f64) -> InputSignal {
        InputSignal::SineDecay { amplitude: a, omega: w, lambda: l, mask: None }
    }

    #[test]
    fn scalar_decay() {
        let model = builtin::scalar_lti(-1.0, 0.0, 1.0);
        let sc = Scenario::new(1.0, SwitchingSignal::constant(1), InputSignal::Zero).with_x0(vec![1.0]);
        let traj = simulate_switched(&model, &sc, 1e-3).unwrap();
        assert_eq!(traj.len(), 1001);
        assert_eq!(*traj.t.last().unwrap(), 1.0);
        assert!((traj.final_state()[0] - (-1.0f64).exp()).abs() <= 1e-8);
    }

    #[test]
    fn zero_input_zero_state() {
        let model = builtin::example2(10);
        let traj = simulate_switched(&model, &Scenario::new(6.0, builtin::example2_switching(), InputSignal::Zero), 1e-2).unwrap();
        assert!(traj.y.iter().all(|y| y.iter().all(|&v| v == 0.0)));
        assert_eq!(l2_norm_output(&traj), 0.0);
    }

    #[test]
    fn switch_instants_are_grid_points() {
        let model = builtin::example2(10);
        let sc = builtin::example2_scenario();
        let traj = simulate_switched(&model, &sc, 0.3).unwrap();
        for seg in &sc.switching.segments {
            let k = traj.t.iter().position(|&t| t == seg.t_end).expect("switch instant on grid");
            if k + 1 < traj.len() {
                assert_eq!(traj.mode[k], traj.mode[k + 1]);
                assert_ne!(traj.mode[k], traj.mode[k - 1]);
            }
        }
        assert!(traj.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn switched_matches_bilinear_on_example2() {
        let model = builtin::example2(12);
        let sc = builtin::example2_scenario();
        let a = simulate_switched(&model, &sc, 1e-3).unwrap();
        let b = simulate_bilinear(&bilinear_embed(&model), &sc, 1e-3).unwrap();
        let gap = a.y.iter().zip(&b.y).map(|(u, v)| (u - v).amax()).fold(0.0, f64::max);
        assert!(gap <= 1e-8, "{gap}");
    }

    #[test]
    fn constant_input_matches_expm() {
        let model = builtin::example1();
        let u = DVector::from_vec(vec![1.0]);
        let sc = Scenario::new(2.0, SwitchingSignal::constant(1), InputSignal::Constant { value: vec![1.0] })
            .with_x0(vec![0.5; 8]);
        let traj = simulate_bilinear(&bilinear_embed(&model), &sc, 1e-3).unwrap();
        let m = &model.modes[0];
        let exact = lti_constant_input_reference(&m.a, &m.b, &DVector::from_element(8, 0.5), &u, 2.0).unwrap();
        assert!((traj.final_state() - exact).amax() < 1e-10);
    }

    #[test]
    fn example2_input_norm() {
        let v = l2_norm_input(&sine(10.0, 30.0, 1.0), 1, Horizon::Infinite).unwrap();
        assert!((v - 10.0 * (225.0f64 / 901.0).sqrt()).abs() < 1e-12);
        assert!((v - 4.9972).abs() < 1e-4);
        assert!(matches!(l2_norm_input(&sine(1.0, 1.0, 0.0), 1, Horizon::Infinite), Err(Error::DivergentIntegral)));
        assert_eq!(l2_norm_input(&InputSignal::Zero, 3, Horizon::Infinite).unwrap(), 0.0);
    }

    /// Composite Simpson reference on a fine grid.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn sine_decay_closed_form_matches_quadrature() {
        let f = |t: f64| (t.sin() * (-t).exp()).powi(2);
        // The tail beyond t = 40 is below e^{-80}.
        let quad = simpson(f, 0.0, 40.0, 400_000);
        let inf = l2_norm_input(&sine(1.0, 1.0, 1.0), 1, Horizon::Infinite).unwrap();
        assert!((inf * inf - quad).abs() < 1e-10, "{} {}", inf * inf, quad);
        for (w, l, t) in [(3.0, 0.5, 2.0), (2.0, 0.0, 1.3), (1.0, -0.2, 1.0)] {
            let g = |s: f64| ((w * s).sin() * (-l * s).exp()).powi(2);
            let closed = l2_norm_input(&sine(1.0, w, l), 1, Horizon::Finite(t)).unwrap();
            assert!((closed * closed - simpson(g, 0.0, t, 20_000)).abs() < 1e-10);
        }
        let masked = InputSignal::SineDecay { amplitude: 1.0, omega: 1.0, lambda: 1.0, mask: Some(vec![true, false, true]) };
        let two = l2_norm_input(&masked, 3, Horizon::Infinite).unwrap();
        assert!((two - inf * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sampled_input_norm() {
        let input = InputSignal::Sampled { t: vec![1.0, 2.0], values: vec![vec![1.0], vec![0.0]] };
        // held 1 on [0,1], then a ramp down to zero whose trapezoid value is 1/2
        let v = l2_norm_input(&input, 1, Horizon::Infinite).unwrap();
        assert!((v * v - 1.5).abs() < 1e-14);
        let held = InputSignal::Sampled { t: vec![0.0], values: vec![vec![2.0]] };
        assert!(matches!(l2_norm_input(&held, 1, Horizon::Infinite), Err(Error::DivergentIntegral)));
        assert!((l2_norm_input(&held, 1, Horizon::Finite(4.0)).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn output_norm_closed_forms() {
        let model = builtin::scalar_lti(0.0, 0.0, 1.0);
        let sc = Scenario::new(1.0, SwitchingSignal::constant(1), InputSignal::Zero).with_x0(vec![1.0]);
        assert!((l2_norm_output(&simulate_switched(&model, &sc, 1e-3).unwrap()) - 1.0).abs() < 1e-14);

        let model = builtin::scalar_lti(-1.0, 0.0, 1.0);
        let sc = Scenario::new(10.0, SwitchingSignal::constant(1), InputSignal::Zero).with_x0(vec![1.0]);
        let v = l2_norm_output(&simulate_switched(&model, &sc, 1e-3).unwrap());
        assert!((v - ((1.0 - (-20.0f64).exp()) / 2.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn jump_at_switch_uses_one_sided_values() {
        // x ≡ 1, output 0 in mode 1 and 1 in mode 2: ‖y‖² = 1 on [1, 2].
        let zero = DMatrix::zeros(1, 1);
        let model = LssModel::new(
            vec![
                crate::model::Mode::new(zero.clone(), zero.clone(), zero.clone()),
                crate::model::Mode::new(zero.clone(), zero.clone(), DMatrix::from_element(1, 1, 1.0)),
            ],
            "jump",
        )
        .unwrap();
        let sw = SwitchingSignal::new(vec![Segment { t_end: 1.0, mode: 1 }, Segment { t_end: 2.0, mode: 2 }]).unwrap();
        let traj = simulate_switched(&model, &Scenario::new(2.0, sw, InputSignal::Zero).with_x0(vec![1.0]), 0.1).unwrap();
        assert!((l2_norm_output(&traj) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identical_models_have_zero_error() {
        let model = builtin::example2(8);
        let s = output_error(&model, &model, &builtin::example2_scenario(), 1e-2, Some(&[1.0; 8])).unwrap();
        assert_eq!(s.l2_error, 0.0);
        assert_eq!(s.bound, Some(0.0));
        assert_eq!(s.bound_satisfied, Some(true));
    }

    #[test]
    fn rejects_bad_step_and_blowup() {
        let model = builtin::scalar_lti(-1.0, 1.0, 1.0);
        let sc = Scenario::new(1.0, SwitchingSignal::constant(1), InputSignal::Zero);
        assert!(simulate_switched(&model, &sc, 0.0).is_err());
        let unstable = builtin::scalar_lti(1e3, 0.0, 1.0);
        let sc = Scenario::new(10.0, SwitchingSignal::constant(1), InputSignal::Zero).with_x0(vec![1.0]);
        assert!(matches!(simulate_switched(&unstable, &sc, 1e-2), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn csv_layout() {
        let model = builtin::scalar_lti(-1.0, 1.0, 2.0);
        let sc = Scenario::new(0.5, SwitchingSignal::constant(1), InputSignal::Constant { value: vec![1.0] });
        let traj = simulate_switched(&model, &sc, 0.25).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,mode,y_1,x_1");
        assert_eq!(lines[1], "0,1,0,0");
        assert_eq!(lines.len(), 4);
    }
}
