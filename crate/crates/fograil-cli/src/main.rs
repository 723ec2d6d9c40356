//! Command-line simulator: single solves, parameter sweeps, convergence
//! traces and (tau, Q) trade-off surfaces, all emitted as CSV/JSON.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fograil::caching::{place_nonc, place_popc, place_rndc, zipf, CachePlacement};
use fograil::dynamic_solver::solve_inner;
use fograil::invariant_solver::solve_invariant;
use fograil::scenario::ScenarioConfig;
use fograil::surrogate::{mm_solve, SolveError, SolveReport};
use fograil::trajectory::PowerTrajectory;

#[derive(Parser)]
#[command(name = "fograil", about = "QoS-constrained power scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one end-to-end solve; prints the report JSON to stdout.
    Solve(SolveArgs),
    /// Sweep one parameter and emit a cost CSV.
    Sweep(SweepArgs),
    /// Emit the per-iteration cost history of one solve.
    Convergence(SolveArgs),
    /// Emit the cost surface over a (tau_max, content size) grid.
    Tradeoff(TradeoffArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Solver {
    Dynamic,
    Invariant,
}

impl Solver {
    fn label(self) -> &'static str {
        match self {
            Solver::Dynamic => "dynamic",
            Solver::Invariant => "invariant",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Popc,
    Rndc,
    Nonc,
}

impl Strategy {
    fn label(self) -> &'static str {
        match self {
            Strategy::Popc => "popc",
            Strategy::Rndc => "rndc",
            Strategy::Nonc => "nonc",
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario JSON; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dynamic")]
    solver: Solver,
    #[arg(long, value_enum, default_value = "popc")]
    strategy: Strategy,
    /// Seed for randomized cache placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of grid samples for the solve.
    #[arg(long, default_value_t = 2000)]
    grid_points: usize,
    /// Output file (trajectory CSV for `solve`, CSV table otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter to sweep.
    #[arg(long, value_parser = ["tau_max", "eta", "speed_kmh", "snr_db"])]
    param: String,
    /// Comma-separated sweep values; a per-parameter default grid otherwise.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Strategies to include (repeatable); all three when omitted.
    #[arg(long = "strategies", value_enum, value_delimiter = ',')]
    strategies: Vec<Strategy>,
    /// Number of random-placement trials for the rndc strategy.
    #[arg(long, default_value_t = 100)]
    rndc_trials: usize,
}

#[derive(Args)]
struct TradeoffArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated delay bounds (seconds).
    #[arg(long, value_delimiter = ',', required = true)]
    tau_values: Vec<f64>,
    /// Comma-separated content sizes (bits).
    #[arg(long, value_delimiter = ',', required = true)]
    q_values: Vec<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("FOGRAIL_LOG")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => run_solve(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Convergence(a) => run_convergence(&a),
        Command::Tradeoff(a) => run_tradeoff(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<ScenarioConfig<f64>> {
    match &args.config {
        None => Ok(ScenarioConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))
        }
    }
}

fn placement(cfg: &ScenarioConfig<f64>, strategy: Strategy, seed: u64) -> CachePlacement {
    let n = cfg.n_rrh();
    match strategy {
        Strategy::Popc => place_popc(cfg.num_contents, cfg.storage_size, cfg.content_size, n),
        Strategy::Rndc => {
            place_rndc(cfg.num_contents, cfg.storage_size, cfg.content_size, n, seed)
        }
        Strategy::Nonc => place_nonc(n, cfg.num_contents),
    }
}

struct SolveOutput {
    trajectory: PowerTrajectory<f64>,
    report: SolveReport,
}

fn solve_once(
    cfg: &ScenarioConfig<f64>,
    pl: &CachePlacement,
    requested: usize,
    solver: Solver,
    grid_points: usize,
) -> Result<SolveOutput, SolveError> {
    let grid = cfg.grid(grid_points)?;
    cfg.validate(&grid)?;
    match solver {
        Solver::Dynamic => {
            let (trajectory, report) = mm_solve(cfg, pl, requested, &grid, solve_inner)?;
            Ok(SolveOutput { trajectory, report })
        }
        Solver::Invariant => {
            let sol = solve_invariant(cfg, pl, requested, &grid)?;
            Ok(SolveOutput {
                trajectory: sol.trajectory,
                report: sol.report,
            })
        }
    }
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.common)?;
    let pl = placement(&cfg, args.common.strategy, args.common.seed);
    match solve_once(
        &cfg,
        &pl,
        cfg.requested_content,
        args.common.solver,
        args.common.grid_points,
    ) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.report)?);
            if let Some(path) = &args.common.out {
                let rates = cfg.rate_samples(&out.trajectory);
                fs::write(path, out.trajectory.to_csv(&rates))
                    .with_context(|| format!("writing {}", path.display()))?;
                log::info!("trajectory written to {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(SolveError::Infeasible(reason)) => {
            eprintln!("infeasible: {reason}");
            Ok(ExitCode::from(2))
        }
        Err(e) => bail!(e),
    }
}

fn run_convergence(args: &SolveArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.common)?;
    let pl = placement(&cfg, args.common.strategy, args.common.seed);
    let out = match solve_once(
        &cfg,
        &pl,
        cfg.requested_content,
        args.common.solver,
        args.common.grid_points,
    ) {
        Ok(out) => out,
        Err(SolveError::Infeasible(reason)) => {
            eprintln!("infeasible: {reason}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => bail!(e),
    };
    let mut csv = String::from("iteration,cost\n");
    for (i, c) in out.report.cost_history.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, c));
    }
    emit(&args.common.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

/// Per-solve exact costs, keyed by which RRHs have the requested content.
#[derive(Clone, Copy)]
struct ComboCost {
    total: f64,
    transmit: f64,
    backhaul: f64,
    iterations: usize,
}

/// Solves once per distinct cached/uncached combination of the two RRHs and
/// returns the popularity-weighted expectation over the requested content.
fn expected_cost(
    cfg: &ScenarioConfig<f64>,
    pl: &CachePlacement,
    solver: Solver,
    grid_points: usize,
) -> Result<ComboCost> {
    let pop = zipf::<f64>(cfg.num_contents, cfg.zipf_eta);
    let mut memo: [Option<ComboCost>; 4] = [None; 4];
    let mut acc = ComboCost {
        total: 0.0,
        transmit: 0.0,
        backhaul: 0.0,
        iterations: 0,
    };
    for l in 1..=cfg.num_contents {
        let key = (pl.cached(0, l) as usize) | ((pl.cached(1, l) as usize) << 1);
        let combo = match memo[key] {
            Some(c) => c,
            None => {
                // representative placement with the same hit pattern for
                // content 1
                let proxy = CachePlacement::from_rows(vec![
                    vec![key & 1 != 0; cfg.num_contents],
                    vec![key & 2 != 0; cfg.num_contents],
                ]);
                let out = solve_once(cfg, &proxy, 1, solver, grid_points)
                    .map_err(|e| anyhow::anyhow!("solve failed: {e}"))?;
                let c = ComboCost {
                    total: out.report.cost_total,
                    transmit: out.report.cost_transmit,
                    backhaul: out.report.cost_backhaul,
                    iterations: out.report.iterations,
                };
                memo[key] = Some(c);
                c
            }
        };
        let p = pop.p[l - 1];
        acc.total += p * combo.total;
        acc.transmit += p * combo.transmit;
        acc.backhaul += p * combo.backhaul;
        acc.iterations = acc.iterations.max(combo.iterations);
    }
    Ok(acc)
}

fn default_values(param: &str) -> Vec<f64> {
    match param {
        // 8-point delay grid kept inside the feasible range at the default
        // 10 dB budgets
        "tau_max" => (0..8).map(|i| 2.5 + 0.5 * i as f64).collect(),
        "eta" => vec![0.5, 1.0, 1.5, 2.0],
        "speed_kmh" => (0..6).map(|i| 100.0 + 50.0 * i as f64).collect(),
        "snr_db" => vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
        _ => unreachable!(),
    }
}

fn apply_param(base: &ScenarioConfig<f64>, param: &str, v: f64) -> ScenarioConfig<f64> {
    // a default (None) horizon tracks the speed: the spatial path is the
    // same at every sweep point and only the traversal time changes
    let mut cfg = base.clone();
    match param {
        "tau_max" => cfg.tau_max_s = v,
        "eta" => cfg.zipf_eta = v,
        "speed_kmh" => cfg.speed_kmh = v,
        "snr_db" => {
            let watts = cfg.sigma2 * 10f64.powf(v / 10.0);
            cfg.p_avg = vec![watts; cfg.n_rrh()];
        }
        _ => unreachable!(),
    }
    cfg
}

fn run_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let base = load_config(&args.common)?;
    let values = if args.values.is_empty() {
        default_values(&args.param)
    } else {
        args.values.clone()
    };
    let strategies = if args.strategies.is_empty() {
        vec![Strategy::Popc, Strategy::Rndc, Strategy::Nonc]
    } else {
        args.strategies.clone()
    };
    if args.rndc_trials == 0 {
        bail!("--rndc-trials must be at least 1");
    }

    let solver = args.common.solver;
    let mut csv = String::from(
        "value,strategy,solver,cost_total,cost_transmit,cost_backhaul,iterations,cost_total_std\n",
    );
    for &v in &values {
        let cfg = apply_param(&base, &args.param, v);
        for &strategy in &strategies {
            let row = match strategy {
                Strategy::Rndc => {
                    let mut totals = Vec::with_capacity(args.rndc_trials);
                    let mut acc = (0.0, 0.0, 0.0, 0usize);
                    for t in 0..args.rndc_trials {
                        let pl = placement(&cfg, strategy, args.common.seed + t as u64);
                        let c = expected_cost(&cfg, &pl, solver, args.common.grid_points)?;
                        totals.push(c.total);
                        acc.0 += c.total;
                        acc.1 += c.transmit;
                        acc.2 += c.backhaul;
                        acc.3 = acc.3.max(c.iterations);
                    }
                    let n = args.rndc_trials as f64;
                    let mean = acc.0 / n;
                    let var =
                        totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
                    (mean, acc.1 / n, acc.2 / n, acc.3, var.sqrt())
                }
                _ => {
                    let pl = placement(&cfg, strategy, args.common.seed);
                    let c = expected_cost(&cfg, &pl, solver, args.common.grid_points)?;
                    (c.total, c.transmit, c.backhaul, c.iterations, 0.0)
                }
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                v,
                strategy.label(),
                solver.label(),
                row.0,
                row.1,
                row.2,
                row.3,
                row.4,
            ));
        }
    }
    emit(&args.common.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn run_tradeoff(args: &TradeoffArgs) -> Result<ExitCode> {
    let base = load_config(&args.common)?;
    let pl = placement(&base, args.common.strategy, args.common.seed);
    let mut csv = String::from("tau_max,content_size,cost_total\n");
    for &tau in &args.tau_values {
        for &q in &args.q_values {
            let mut cfg = base.resolved();
            cfg.tau_max_s = tau;
            cfg.content_size = q;
            let cell = match solve_once(
                &cfg,
                &pl,
                cfg.requested_content,
                args.common.solver,
                args.common.grid_points,
            ) {
                Ok(out) => format!("{}", out.report.cost_total),
                Err(SolveError::Infeasible(_)) => "inf".to_string(),
                Err(e) => bail!(e),
            };
            csv.push_str(&format!("{},{},{}\n", tau, q, cell));
        }
    }
    emit(&args.common.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(out: &Option<PathBuf>, csv: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{csv}"),
    }
    Ok(())
}
