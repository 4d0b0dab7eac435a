//! `metastable` command-line tool.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on bad
//! input or usage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metastable::hierarchy::{full_hierarchy, HierarchyOptions, SolverMode};
use metastable::io::landscape_to_json;
use metastable::kawasaki::{enumerate_omega_bar, KawasakiParams};
use metastable::landscape::{BuildOptions, DEFAULT_STATE_CAP};
use metastable::plateaux::validate_cycle;
use metastable::report::HierarchyReport;
use metastable::verify::{
    exit_distribution_exact, exit_distribution_limit, first_hit, rate_system, resolvent_deviations, simulate,
    BetaParams, CheckReport, Stop, VerificationReport,
};
use metastable::{Landscape, StateId, StateSet};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "metastable", version, about = "Metastable hierarchies of energy landscapes")]
struct Cli {
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plateaux, full hierarchy and classification diagnostics of a landscape file.
    Analyze {
        landscape: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Enumerate the Kawasaki lattice-gas landscape and optionally analyze it.
    Kawasaki {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long = "N0")]
        n0: usize,
        /// Write the enumerated landscape as JSON.
        #[arg(long)]
        emit_landscape: Option<PathBuf>,
        #[arg(long)]
        analyze: bool,
        /// Cap on enumerated states.
        #[arg(long, default_value_t = metastable::kawasaki::DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare the exit law of a cycle at finite β with its limit.
    VerifyExit {
        landscape: PathBuf,
        /// Cycle states, comma separated ids or labels.
        #[arg(long)]
        cycle: String,
        /// Start states (default: the bottom of the cycle).
        #[arg(long)]
        start: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
        beta_grid: Vec<f64>,
        /// Allowed gap to the limit law at the largest β.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Monte Carlo trajectories (0 disables the check).
        #[arg(long, default_value_t = 0)]
        mc: u64,
        #[arg(long, default_value_t = 8.0)]
        mc_beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare finite-β resolvents with the limit chain at one level.
    VerifyResolvent {
        landscape: PathBuf,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        beta_grid: Vec<f64>,
        /// Allowed deviation at the largest β.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Seeded Metropolis trajectories.
    Simulate {
        landscape: PathBuf,
        #[arg(long)]
        beta: f64,
        /// Start state id or label.
        #[arg(long)]
        start: String,
        /// Stop on entering these states.
        #[arg(long)]
        hit: Option<String>,
        /// Stop after this much time.
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_jumps: u64,
        #[arg(long, default_value_t = 1)]
        trajectories: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    /// Use floating-point trace chains instead of exact rationals.
    #[arg(long)]
    float: bool,
    /// Cap on landscape states.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
}

impl SolveArgs {
    fn options(&self) -> HierarchyOptions {
        HierarchyOptions { solver: if self.float { SolverMode::Float } else { SolverMode::Exact } }
    }
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Why a command did not succeed.
enum Failure {
    Input(String),
    Check,
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Input(format!("{context}: {e}"))
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: Value,
    result: T,
}

fn emit<T: Serialize>(out: &OutArgs, command: &'static str, config: Value, result: T) -> Outcome {
    let envelope = Envelope { tool: "metastable", version: env!("CARGO_PKG_VERSION"), command, config, result };
    let text = serde_json::to_string_pretty(&envelope).expect("serializable") + "\n";
    match &out.report {
        Some(path) => fs::write(path, text).map_err(input(path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_output(out: &OutArgs) -> Outcome {
    check_writable(out.report.as_deref())
}

fn check_writable(path: Option<&Path>) -> Outcome {
    if let Some(path) = path {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(Failure::Input(format!("{}: output directory does not exist", path.display())));
        }
    }
    Ok(())
}

fn load(path: &Path, cap: usize) -> Result<Landscape, Failure> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    let options = BuildOptions { state_cap: cap };
    metastable::io::parse_landscape_with(&text, options).map_err(input(path.display()))
}

/// Resolves comma-separated labels or numeric ids.
fn parse_states(l: &Landscape, spec: &str) -> Result<StateSet, Failure> {
    let mut ids = Vec::new();
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let id = match l.labels().iter().position(|s| s == token) {
            Some(i) => i,
            None => match token.parse::<usize>() {
                Ok(i) if i < l.n_states() => i,
                _ => return Err(Failure::Input(format!("unknown state '{token}'"))),
            },
        };
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Failure::Input(format!("no states in '{spec}'")));
    }
    Ok(StateSet::from_indices(ids))
}

fn check_betas(grid: &[f64]) -> Outcome {
    if grid.is_empty() {
        return Err(Failure::Input("empty --beta-grid".into()));
    }
    for &b in grid {
        BetaParams::new(b).map_err(input("--beta-grid"))?;
    }
    Ok(())
}

/// Runs `f(0..n)` on `jobs` threads and returns the results in index order.
fn parallel_map<T: Send>(n: u64, jobs: u32, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let jobs = (jobs as u64).clamp(1, n.max(1));
    let chunk = n.div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let f = &f;
                s.spawn(move || (j * chunk..((j + 1) * chunk).min(n)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn analyze(landscape: &Path, solve: &SolveArgs, out: &OutArgs) -> Outcome {
    check_output(out)?;
    let l = load(landscape, solve.state_cap)?;
    let h = full_hierarchy(&l, &solve.options()).map_err(input(landscape.display()))?;
    let config = json!({
        "landscape": landscape.display().to_string(),
        "solver": if solve.float { "float" } else { "exact" },
        "state_cap": solve.state_cap,
    });
    emit(out, "analyze", config, HierarchyReport::new(&h, l.n_states()))
}

#[derive(Serialize)]
struct KawasakiResult {
    params: KawasakiParams,
    h0: i64,
    n_states: usize,
    n_edges: usize,
    hierarchy: Option<HierarchyReport>,
}

#[allow(clippy::too_many_arguments)]
fn kawasaki(
    k: usize,
    l: usize,
    n0: usize,
    emit_landscape: Option<&Path>,
    analyze: bool,
    cap: usize,
    solve: &SolveArgs,
    out: &OutArgs,
) -> Outcome {
    check_output(out)?;
    check_writable(emit_landscape)?;
    let p = KawasakiParams::new(k, l, n0).map_err(input("kawasaki"))?;
    let land = enumerate_omega_bar(&p, cap).map_err(input("kawasaki"))?;
    if let Some(path) = emit_landscape {
        fs::write(path, landscape_to_json(&land) + "\n").map_err(input(path.display()))?;
    }
    let hierarchy = if analyze {
        let h = full_hierarchy(&land, &solve.options()).map_err(input("kawasaki"))?;
        Some(HierarchyReport::new(&h, land.n_states()))
    } else {
        None
    };
    let config = json!({
        "K": k, "L": l, "N0": n0, "cap": cap, "analyze": analyze,
        "emit_landscape": emit_landscape.map(|p| p.display().to_string()),
        "solver": if solve.float { "float" } else { "exact" },
    });
    let result = KawasakiResult { params: p, h0: p.h0().0, n_states: land.n_states(), n_edges: land.n_edges(), hierarchy };
    emit(out, "kawasaki", config, result)
}

fn finish(out: &OutArgs, command: &'static str, config: Value, checks: Vec<CheckReport>) -> Outcome {
    let report = VerificationReport::new(checks);
    let pass = report.pass;
    emit(out, command, config, report)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_exit(
    landscape: &Path,
    cycle: &str,
    start: Option<&str>,
    beta_grid: &[f64],
    tolerance: f64,
    mc: u64,
    mc_beta: f64,
    seed: u64,
    jobs: u32,
    out: &OutArgs,
) -> Outcome {
    check_output(out)?;
    check_betas(beta_grid)?;
    if mc > 0 {
        check_betas(&[mc_beta])?;
    }
    let l = load(landscape, DEFAULT_STATE_CAP)?;
    let c = validate_cycle(&l, &parse_states(&l, cycle)?).map_err(input("--cycle"))?;
    let start = match start {
        Some(s) => parse_states(&l, s)?,
        None => c.bottom.clone(),
    };
    let limit = exit_distribution_limit(&l, &c).map_err(input("--cycle"))?;
    let label = |s: StateId| l.label(s).to_string();
    let limit_json: Value = limit
        .iter()
        .map(|(s, p)| (label(*s), Value::String(p.to_string())))
        .collect::<serde_json::Map<_, _>>()
        .into();
    let limit_f64 = |s: StateId| {
        limit.iter().find(|(t, _)| *t == s).map_or(0.0, |(_, p)| p.to_f64().unwrap_or(f64::NAN))
    };
    let mut checks = Vec::new();
    let mut gaps = Vec::new();
    for &beta in beta_grid {
        let d = exit_distribution_exact(&l, &c, beta, Some(&start)).map_err(input("exit solve"))?;
        let gap = d.probabilities.iter().map(|&(s, p)| (p - limit_f64(s)).abs()).fold(0.0, f64::max);
        gaps.push(json!({
            "beta": beta,
            "law": d.probabilities.iter().map(|&(s, p)| (label(s), json!(p))).collect::<serde_json::Map<_, _>>(),
            "max_gap_to_limit": gap,
            "high_precision": d.high_precision,
        }));
    }
    let top = beta_grid.iter().cloned().fold(f64::MIN, f64::max);
    let top_gap = gaps
        .iter()
        .find(|g| g["beta"].as_f64() == Some(top))
        .and_then(|g| g["max_gap_to_limit"].as_f64())
        .unwrap_or(f64::NAN);
    checks.push(CheckReport::new(
        "exit law converges to the contact-count limit",
        json!({"cycle": c.states.iter().map(label).collect::<Vec<_>>(), "beta_grid": beta_grid}),
        limit_json,
        json!(gaps),
        json!({"max_gap_at_largest_beta": tolerance}),
        top_gap <= tolerance,
    ));
    if mc > 0 {
        let exact = exit_distribution_exact(&l, &c, mc_beta, Some(&start)).map_err(input("exit solve"))?;
        let rs = rate_system(&l, BetaParams::new(mc_beta).map_err(input("--mc-beta"))?);
        let (boundary, _) = l.boundary_sets(&c.states).map_err(input("--cycle"))?;
        let target = boundary.mask(l.n_states());
        let starts: Vec<StateId> = start.iter().collect();
        let hits = parallel_map(mc, jobs, |k| {
            first_hit(&l, &rs, starts[(k % starts.len() as u64) as usize], &target, seed, k)
        });
        let mut worst = 0.0f64;
        let mut freqs = serde_json::Map::new();
        for &(s, p) in &exact.probabilities {
            let f = hits.iter().filter(|&&h| h == s).count() as f64 / mc as f64;
            let se = (p * (1.0 - p) / mc as f64).sqrt();
            let z = if se > 0.0 { (f - p).abs() / se } else if f == p { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            freqs.insert(label(s), json!({"frequency": f, "exact": p, "standard_errors": z}));
        }
        checks.push(CheckReport::new(
            "Monte Carlo exit frequencies match the exact law",
            json!({"beta": mc_beta, "trajectories": mc, "seed": seed, "start": starts.iter().map(|&s| label(s)).collect::<Vec<_>>()}),
            json!("exact law at the same beta"),
            Value::Object(freqs),
            json!({"standard_errors": 3.0}),
            worst <= 3.0,
        ));
    }
    let config = json!({
        "landscape": landscape.display().to_string(), "cycle": cycle, "start": start.iter().map(label).collect::<Vec<_>>(),
        "beta_grid": beta_grid, "tolerance": tolerance, "mc": mc, "mc_beta": mc_beta, "seed": seed,
    });
    finish(out, "verify-exit", config, checks)
}

#[allow(clippy::too_many_arguments)]
fn verify_resolvent(
    landscape: &Path,
    level: usize,
    lambda: f64,
    beta_grid: &[f64],
    tolerance: f64,
    solve: &SolveArgs,
    out: &OutArgs,
) -> Outcome {
    check_output(out)?;
    check_betas(beta_grid)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Failure::Input(format!("--lambda must be positive, got {lambda}")));
    }
    let l = load(landscape, solve.state_cap)?;
    let h = full_hierarchy(&l, &solve.options()).map_err(input(landscape.display()))?;
    if level == 0 || level > h.levels.len() {
        return Err(Failure::Input(format!("--level must lie in 1..={}, got {level}", h.levels.len())));
    }
    let lv = h.level(level);
    let n = lv.plateaux.len();
    let gs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut grid: Vec<f64> = beta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let table: Vec<Vec<Vec<f64>>> = grid
        .iter()
        .map(|&b| resolvent_deviations(h.landscape(), lv, lambda, &gs, b).map_err(input("resolvent")))
        .collect::<Result<_, _>>()?;
    let mut not_decreasing = 0;
    for g in 0..n {
        for v in 0..n {
            if table.windows(2).any(|w| w[1][g][v] >= w[0][g][v]) {
                not_decreasing += 1;
            }
        }
    }
    let maxima: Vec<f64> = table
        .iter()
        .map(|t| t.iter().flatten().cloned().fold(0.0, f64::max))
        .collect();
    let last = *maxima.last().expect("nonempty grid");
    let checks = vec![
        CheckReport::new(
            "per-valley deviations strictly decrease in beta",
            json!({"level": level, "lambda": lambda, "beta_grid": grid, "g": "indicators"}),
            json!({"non_decreasing_pairs": 0}),
            json!({"non_decreasing_pairs": not_decreasing, "pairs": n * n, "max_deviation_per_beta": maxima}),
            json!(null),
            not_decreasing == 0,
        ),
        CheckReport::new(
            "deviation at the largest beta is small",
            json!({"level": level, "lambda": lambda, "beta": grid.last()}),
            json!({"max_deviation_at_most": tolerance}),
            json!({"max_deviation": last}),
            json!(tolerance),
            last <= tolerance,
        ),
    ];
    let config = json!({
        "landscape": landscape.display().to_string(), "level": level, "lambda": lambda,
        "beta_grid": grid, "tolerance": tolerance, "solver": if solve.float { "float" } else { "exact" },
    });
    finish(out, "verify-resolvent", config, checks)
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    landscape: &Path,
    beta: f64,
    start: &str,
    hit: Option<&str>,
    time: Option<f64>,
    max_jumps: u64,
    trajectories: u64,
    seed: u64,
    jobs: u32,
    out: &OutArgs,
) -> Outcome {
    check_output(out)?;
    let beta = BetaParams::new(beta).map_err(input("--beta"))?;
    if let Some(t) = time {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Failure::Input(format!("--time must be non-negative, got {t}")));
        }
    }
    let l = load(landscape, DEFAULT_STATE_CAP)?;
    let start_id = parse_states(&l, start)?;
    if start_id.len() != 1 {
        return Err(Failure::Input("--start takes a single state".into()));
    }
    let hit = hit.map(|h| parse_states(&l, h)).transpose()?;
    let rs = rate_system(&l, beta);
    let stop = Stop { hit, time_budget: time, max_jumps: Some(max_jumps) };
    let first = start_id.first().expect("one state");
    let runs = parallel_map(trajectories, jobs, |k| simulate(&l, &rs, first, &stop, seed, k));
    let runs: Vec<_> = runs.into_iter().collect::<Result<_, _>>().map_err(input("simulate"))?;
    let config = json!({
        "landscape": landscape.display().to_string(), "beta": beta.beta, "start": l.label(first),
        "hit": stop.hit.as_ref().map(|h| h.iter().map(|s| l.label(s).to_string()).collect::<Vec<_>>()),
        "time": time, "max_jumps": max_jumps, "trajectories": trajectories, "seed": seed,
    });
    emit(out, "simulate", config, runs)
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Analyze { landscape, solve, out } => analyze(landscape, solve, out),
        Command::Kawasaki { k, l, n0, emit_landscape, analyze, cap, solve, out } => {
            kawasaki(*k, *l, *n0, emit_landscape.as_deref(), *analyze, *cap, solve, out)
        }
        Command::VerifyExit { landscape, cycle, start, beta_grid, tolerance, mc, mc_beta, seed, out } => verify_exit(
            landscape,
            cycle,
            start.as_deref(),
            beta_grid,
            *tolerance,
            *mc,
            *mc_beta,
            *seed,
            cli.jobs,
            out,
        ),
        Command::VerifyResolvent { landscape, level, lambda, beta_grid, tolerance, solve, out } => {
            verify_resolvent(landscape, *level, *lambda, beta_grid, *tolerance, solve, out)
        }
        Command::Simulate { landscape, beta, start, hit, time, max_jumps, trajectories, seed, out } => run_simulate(
            landscape,
            *beta,
            start,
            hit.as_deref(),
            *time,
            *max_jumps,
            *trajectories,
            *seed,
            cli.jobs,
            out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
