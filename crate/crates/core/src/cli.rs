//! The `swibal` command line tool.
//!
//! Models and reports are JSON, vectors and trajectories CSV. Every file is
//! written to a temporary name in the output directory and then renamed.
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::balred::{balance_truncate, BalancedReduction, Order};
use crate::builtin;
use crate::error::{Error, Result};
use crate::gramians::{averaged_gramians, gramian_pair, range_basis, subspace_contains, AvgScale, GramianResult};
use crate::linalg::DEFAULT_RTOL;
use crate::lyap::{existence_margin, ExistenceDiagnostic, GenSolveOptions, GenSolveReport, Method};
use crate::model::{bilinear_embed, validate_model, LssModel, Scenario};
use crate::oracle::{compare_with_gramians, OracleComparison, MATCH_ANGLE};
use crate::sim::{l2_norm_input, output_error, simulate_switched, Horizon, DEFAULT_STEP};

/// Largest state dimension for which `analyze` samples the transient
/// constant of the existence condition.
pub const EXISTENCE_CAP: usize = 200;

/// Tolerance of the averaged-in-generalized range containment check.
const CONTAINMENT_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "swibal", version, about = "Gramians, reachability and balanced truncation for linear switched systems")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Relative threshold for numerical rank decisions.
    #[arg(long, global = true, default_value_t = DEFAULT_RTOL)]
    pub rtol: f64,
    /// Generalized Lyapunov solver.
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Largest n for the Kronecker solver.
    #[arg(long = "kron-cap", global = true, default_value_t = 64)]
    pub kron_cap: usize,
    /// Output directory, created if absent.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Kron,
    Fixedpoint,
    Auto,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Kron => Method::Kronecker,
            MethodArg::Fixedpoint => Method::FixedPoint,
            MethodArg::Auto => Method::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    /// Sum of the per-mode LTI Gramians.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleName {
    Example1,
    Example2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gramians, ranks, reachability/observability verdicts and diagnostics.
    Analyze { model: PathBuf },
    /// Balanced truncation; writes reduced.json, hsv.csv and bound.txt.
    Reduce {
        model: PathBuf,
        /// Reduced order (lowered to the numerical rank if larger).
        #[arg(long = "r", required_unless_present = "tol", conflicts_with = "tol")]
        r: Option<usize>,
        /// Smallest order whose discarded singular value sum is at most this fraction.
        #[arg(long)]
        tol: Option<f64>,
        /// Use a baseline Gramian pair instead of the generalized Gramians.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Scenario whose input norm enters bound.txt.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// RK4 simulation; writes trajectory.csv.
    Simulate {
        model: PathBuf,
        scenario: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        h: f64,
        /// Append the state columns.
        #[arg(long)]
        states: bool,
    },
    /// Output errors of one or two reduced models; writes errors.csv.
    Compare {
        /// MODEL REDUCED [REDUCED2] SCENARIO
        #[arg(num_args = 3..=4, required = true, value_name = "FILES")]
        files: Vec<PathBuf>,
        /// hsv.csv of each reduced model, in order, to evaluate the error bound.
        #[arg(long)]
        hsv: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        h: f64,
    },
    /// Gramian ranges against the Gramian-free closure oracle.
    Oracle {
        #[arg(required_unless_present = "sweep")]
        model: Option<PathBuf>,
        /// Number of seeded random instances to check instead of a model file.
        #[arg(long, conflicts_with = "model")]
        sweep: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Writes a built-in model (and scenario for example2).
    Example {
        #[arg(value_enum)]
        name: ExampleName,
        /// State dimension of example2.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWIBAL_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    if !(c.rtol > 0.0 && c.rtol < 1.0) {
        return Err(Error::Invalid(format!("--rtol must lie in (0, 1), got {}", c.rtol)));
    }
    let opts = GenSolveOptions { method: c.method.into(), kron_cap: c.kron_cap, ..GenSolveOptions::default() };
    match &cli.command {
        Command::Analyze { model } => analyze(&read_model(model)?, &opts, c),
        Command::Reduce { model, r, tol, baseline, scenario } => {
            let order = match (r, tol) {
                (Some(r), _) => Order::AtMost(*r),
                (None, Some(t)) => Order::EnergyTol(*t),
                (None, None) => return Err(Error::Invalid("one of --r or --tol is required".into())),
            };
            let scenario = scenario.as_deref().map(read_scenario).transpose()?;
            reduce(&read_model(model)?, order, *baseline, scenario.as_ref(), &opts, c)
        }
        Command::Simulate { model, scenario, h, states } => {
            let traj = simulate_switched(&read_model(model)?, &read_scenario(scenario)?, *h)?;
            let mut buf = Vec::new();
            traj.write_csv(&mut buf, *states)?;
            let path = write_atomic(&c.out, "trajectory.csv", &buf)?;
            println!("{} points written to {}", traj.len(), path.display());
            Ok(())
        }
        Command::Compare { files, hsv, h } => compare(files, hsv, *h, c),
        Command::Oracle { model, sweep, seed } => match (model, sweep) {
            (Some(path), _) => oracle_single(&read_model(path)?, &opts, c),
            (None, Some(count)) => oracle_sweep(*count, *seed, &opts, c),
            (None, None) => Err(Error::Invalid("give a model file or --sweep N".into())),
        },
        Command::Example { name, n } => example(*name, *n, c),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_model(path: &Path) -> Result<LssModel> {
    LssModel::from_json(&read_text(path)?)
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&read_text(path)?)
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// `index,sigma` rows, 1-based.
pub fn hsv_csv(hsv: &[f64]) -> String {
    let mut out = String::from("index,sigma\n");
    for (i, s) in hsv.iter().enumerate() {
        out.push_str(&format!("{},{s}\n", i + 1));
    }
    out
}

pub fn parse_hsv_csv(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split(',')
                .nth(1)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Invalid(format!("bad hsv row {line:?}")))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct GramianSummary {
    rank: usize,
    verdict: bool,
    solve: GenSolveReport,
}

#[derive(Debug, Serialize)]
struct AveragedSummary {
    reach_rank: usize,
    obs_rank: usize,
    /// `range P_avg ⊆ range 𝒫`.
    reach_contained: bool,
    obs_contained: bool,
    /// Containment with a strictly smaller averaged rank.
    reach_strict: bool,
    obs_strict: bool,
}

#[derive(Debug, Serialize)]
struct AnalysisReport {
    label: String,
    n: usize,
    m: usize,
    p: usize,
    modes: usize,
    diagnostics: Vec<String>,
    spectral_abscissa: Vec<Option<f64>>,
    existence: Option<ExistenceDiagnostic>,
    reachability: GramianSummary,
    observability: GramianSummary,
    averaged: Option<AveragedSummary>,
}

fn summarize(g: GramianResult, n: usize, rtol: f64) -> (GramianSummary, crate::gramians::SubspaceBasis) {
    let basis = range_basis(&g.matrix, rtol);
    (GramianSummary { rank: basis.rank, verdict: basis.rank == n, solve: g.report }, basis)
}

fn analyze(model: &LssModel, opts: &GenSolveOptions, c: &Common) -> Result<()> {
    let validation = validate_model(model);
    let diagnostics: Vec<String> = validation.diagnostics.iter().map(|d| d.to_string()).collect();
    if validation.has_dimension_errors() {
        return Err(Error::ShapeMismatch(diagnostics.join("; ")));
    }
    for d in &diagnostics {
        warn!("{d}");
    }
    let emb = bilinear_embed(model);
    let existence = if model.n <= EXISTENCE_CAP {
        Some(existence_margin(&emb.a, &emb.d)?)
    } else {
        info!("existence margin skipped for n = {} > {EXISTENCE_CAP}", model.n);
        None
    };
    let (p, q) = gramian_pair(model, opts)?;
    let (reachability, p_range) = summarize(p, model.n, c.rtol);
    let (observability, q_range) = summarize(q, model.n, c.rtol);

    let averaged = match averaged_gramians(model, AvgScale::Sum) {
        Ok(avg) => {
            let pa = range_basis(&avg.p_avg, c.rtol);
            let qa = range_basis(&avg.q_avg, c.rtol);
            let reach_contained = subspace_contains(&pa, &p_range, CONTAINMENT_TOL)?;
            let obs_contained = subspace_contains(&qa, &q_range, CONTAINMENT_TOL)?;
            Some(AveragedSummary {
                reach_rank: pa.rank,
                obs_rank: qa.rank,
                reach_contained,
                obs_contained,
                reach_strict: reach_contained && pa.rank < p_range.rank,
                obs_strict: obs_contained && qa.rank < q_range.rank,
            })
        }
        Err(e) => {
            warn!("averaged Gramians unavailable: {e}");
            None
        }
    };

    let report = AnalysisReport {
        label: model.label.clone(),
        n: model.n,
        m: model.m,
        p: model.p,
        modes: model.num_modes(),
        diagnostics,
        spectral_abscissa: validation.spectral_abscissa,
        existence,
        reachability,
        observability,
        averaged,
    };
    println!("{}", analysis_text(&report));
    write_json(&c.out, "analysis.json", &report)?;
    Ok(())
}

fn analysis_text(r: &AnalysisReport) -> String {
    let mut lines = vec![format!("model {:?}: n = {}, m = {}, p = {}, modes = {}", r.label, r.n, r.m, r.p, r.modes)];
    if let Some(e) = &r.existence {
        lines.push(format!(
            "existence: ||sum D_j D_j^T|| = {:.4e} {} 2 alpha / beta^2 = {:.4e}{}",
            e.lhs,
            if e.satisfied { "<" } else { ">=" },
            e.rhs,
            if e.heuristic { " (sampled beta)" } else { "" }
        ));
    }
    let verdict = |g: &GramianSummary, what: &str| {
        format!(
            "{}completely {what}: rank {}/{} ({:?}, {} terms, residual {:.2e})",
            if g.verdict { "" } else { "not " },
            g.rank,
            r.n,
            g.solve.method,
            g.solve.iterations,
            g.solve.residual
        )
    };
    lines.push(verdict(&r.reachability, "reachable"));
    lines.push(verdict(&r.observability, "observable"));
    if let Some(a) = &r.averaged {
        lines.push(format!(
            "averaged Gramians: ranks {}/{}, ranges contained in generalized: {}/{}",
            a.reach_rank, a.obs_rank, a.reach_contained, a.obs_contained
        ));
    }
    lines.join("\n")
}

fn reduce(
    model: &LssModel,
    order: Order,
    baseline: Option<Baseline>,
    scenario: Option<&Scenario>,
    opts: &GenSolveOptions,
    c: &Common,
) -> Result<()> {
    let (p, q, source) = match baseline {
        None => {
            let (p, q) = gramian_pair(model, opts)?;
            (p.matrix, q.matrix, "generalized")
        }
        Some(Baseline::Averaged) => {
            let avg = averaged_gramians(model, AvgScale::Sum)?;
            (avg.p_avg, avg.q_avg, "averaged")
        }
    };
    let red = balance_truncate(model, &p, &q, order, c.rtol)?;
    let input = match scenario {
        Some(sc) => {
            sc.check(model)?;
            Some(match l2_norm_input(&sc.input, model.m, Horizon::Infinite) {
                Ok(v) => (v, "infinite".to_string()),
                Err(Error::DivergentIntegral) => {
                    (l2_norm_input(&sc.input, model.m, Horizon::Finite(sc.horizon))?, format!("{}", sc.horizon))
                }
                Err(e) => return Err(e),
            })
        }
        None => None,
    };
    write_json(&c.out, "reduced.json", &red.reduced)?;
    write_atomic(&c.out, "hsv.csv", hsv_csv(&red.hsv).as_bytes())?;
    let text = bound_text(&red, source, order, input);
    write_atomic(&c.out, "bound.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn bound_text(red: &BalancedReduction, source: &str, order: Order, input: Option<(f64, String)>) -> String {
    let mut out = format!("gramians = {source}\n");
    if let Order::EnergyTol(t) = order {
        out.push_str(&format!("energy_tol = {t}\n"));
    }
    out.push_str(&format!(
        "r = {}\nrank = {}\ncapped = {}\ntie = {}\nbound_coefficient = {}\n",
        red.r, red.rank, red.capped, red.tie, red.bound_coefficient
    ));
    if let Some((u, horizon)) = input {
        out.push_str(&format!("input_l2 = {u}\ninput_horizon = {horizon}\nbound = {}\n", red.bound_coefficient * u));
    }
    out
}

fn compare(files: &[PathBuf], hsv: &[PathBuf], h: f64, c: &Common) -> Result<()> {
    let (model_path, rest) = files.split_first().expect("at least three files");
    let (scenario_path, reduced_paths) = rest.split_last().expect("at least two more files");
    if hsv.len() > reduced_paths.len() {
        return Err(Error::Invalid(format!("{} --hsv files for {} reduced models", hsv.len(), reduced_paths.len())));
    }
    let model = read_model(model_path)?;
    let scenario = read_scenario(scenario_path)?;
    let mut csv = String::from("model,r,l2_error,linf_error,input_l2,bound,bound_satisfied\n");
    for (k, path) in reduced_paths.iter().enumerate() {
        let reduced = read_model(path)?;
        let sigma = hsv.get(k).map(|p| read_text(p).and_then(|t| parse_hsv_csv(&t))).transpose()?;
        let s = output_error(&model, &reduced, &scenario, h, sigma.as_deref())?;
        let name = path.file_stem().map_or_else(|| format!("reduced{}", k + 1), |s| s.to_string_lossy().into_owned());
        let opt = |v: Option<String>| v.unwrap_or_default();
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{}\n",
            reduced.n,
            s.l2_error,
            s.linf_error,
            s.input_l2,
            opt(s.bound.map(|b| b.to_string())),
            opt(s.bound_satisfied.map(|b| b.to_string()))
        ));
        let bound = match (s.bound, s.bound_satisfied) {
            (Some(b), Some(ok)) => format!(", bound {b:.4e} ({})", if ok { "satisfied" } else { "VIOLATED" }),
            _ => String::new(),
        };
        println!("{name}: r = {}, L2 error {:.4e}, max error {:.4e}{bound}", reduced.n, s.l2_error, s.linf_error);
    }
    write_atomic(&c.out, "errors.csv", csv.as_bytes())?;
    Ok(())
}

fn match_line(space: &str, m: &crate::oracle::SubspaceMatch) -> String {
    if m.matches {
        format!("{space}: MATCH: rank {}, max principal angle {:.2e} < {MATCH_ANGLE:e}", m.gramian_rank, m.max_angle)
    } else {
        format!(
            "{space}: MISMATCH: Gramian rank {}, closure rank {}, max principal angle {:.2e}",
            m.gramian_rank, m.closure_rank, m.max_angle
        )
    }
}

fn oracle_single(model: &LssModel, opts: &GenSolveOptions, c: &Common) -> Result<()> {
    let cmp = compare_with_gramians(model, opts, c.rtol)?;
    println!("{}", match_line("reachable", &cmp.reachable));
    println!("{}", match_line("observable", &cmp.observable));
    write_json(&c.out, "oracle.json", &cmp)?;
    let count = usize::from(!cmp.reachable.matches) + usize::from(!cmp.observable.matches);
    if count > 0 {
        return Err(Error::OracleMismatch { count });
    }
    Ok(())
}

fn oracle_sweep(count: usize, seed: u64, opts: &GenSolveOptions, c: &Common) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<LssModel> = (0..count).map(|_| builtin::random_sweep_instance(&mut rng)).collect();
    let results: Vec<OracleComparison> =
        models.par_iter().map(|m| compare_with_gramians(m, opts, c.rtol)).collect::<Result<_>>()?;
    let mut csv = String::from(
        "instance,n,modes,reach_rank_gramian,reach_rank_closure,reach_angle,obs_rank_gramian,obs_rank_closure,obs_angle,match\n",
    );
    let mut mismatches = 0;
    for (k, (m, r)) in models.iter().zip(&results).enumerate() {
        mismatches += usize::from(!r.matches());
        csv.push_str(&format!(
            "{},{},{},{},{},{:e},{},{},{:e},{}\n",
            k + 1,
            m.n,
            m.num_modes(),
            r.reachable.gramian_rank,
            r.reachable.closure_rank,
            r.reachable.max_angle,
            r.observable.gramian_rank,
            r.observable.closure_rank,
            r.observable.max_angle,
            r.matches()
        ));
    }
    write_atomic(&c.out, "oracle_sweep.csv", csv.as_bytes())?;
    let worst = results
        .iter()
        .flat_map(|r| [r.reachable.max_angle, r.observable.max_angle])
        .fold(0.0, f64::max);
    println!("{count} instances (seed {seed}): {mismatches} mismatches, max principal angle {worst:.2e}");
    if mismatches > 0 {
        return Err(Error::OracleMismatch { count: mismatches });
    }
    Ok(())
}

fn example(name: ExampleName, n: usize, c: &Common) -> Result<()> {
    match name {
        ExampleName::Example1 => {
            let path = write_json(&c.out, "example1.json", &builtin::example1())?;
            println!("wrote {}", path.display());
        }
        ExampleName::Example2 => {
            if n < 2 {
                return Err(Error::Invalid(format!("example2 needs n >= 2, got {n}")));
            }
            let model = write_json(&c.out, "example2.json", &builtin::example2(n))?;
            let scenario = write_json(&c.out, "example2_scenario.json", &builtin::example2_scenario())?;
            println!("wrote {} and {}", model.display(), scenario.display());
        }
    }
    Ok(())
}
