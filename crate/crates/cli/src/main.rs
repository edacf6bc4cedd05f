//! Command-line front end: evaluates the rate function, runs trajectory
//! optimization, exact DP exponent tables, graph and chain simulations and
//! the contagious-set calculators, emitting CSV for grids/series and JSON
//! for single reports.
//!
//! Exit codes: 0 success, 1 numerical guard (state space or enumeration too
//! large), 2 usage error. Every command honors `--seed` (falling back to the
//! `PERC_LDP_SEED` environment variable) and is bit-reproducible regardless
//! of `--threads`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use perc_ldp::*;

#[derive(Parser)]
#[command(
    name = "perc-ldp",
    version,
    about = "Bootstrap percolation large deviations toolkit"
)]
struct Cli {
    /// RNG seed; falls back to $PERC_LDP_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for batch commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output path (default: stdout).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the rate function xi(alpha, beta) on points or grids.
    Rate(RateArgs),
    /// Closed-form optimal trajectory next to the variational optimizer.
    Trajectory(TrajectoryArgs),
    /// Finite-n exponent convergence table from the exact DP.
    Exponent(ExponentArgs),
    /// Graph simulation batch: sample G(n,p), percolate, record |A*|.
    Simulate(SimulateArgs),
    /// Binomial chain: Monte Carlo survival, moments, traces, exact tables.
    Chain(ChainArgs),
    /// Contagious-set lower bounds and the brute-force oracle.
    Bound(BoundArgs),
    /// Verify the diagonal-structure inequalities over a parameter grid.
    Claims(ClaimsArgs),
}

#[derive(Args)]
struct ClaimsArgs {
    #[arg(long)]
    r: u32,
    /// Alpha grid lo:hi:step.
    #[arg(long, default_value = "0.1:0.9:0.2")]
    alpha_grid: String,
    /// Beta grid lo:hi:step.
    #[arg(long, default_value = "0.2:1.0:0.2")]
    beta_grid: String,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    r: u32,
    /// Single alpha in [0,1).
    #[arg(long, conflicts_with = "alpha_grid")]
    alpha: Option<f64>,
    /// Alpha grid lo:hi:step.
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Single beta.
    #[arg(long, conflicts_with = "beta_grid")]
    beta: Option<f64>,
    /// Beta grid lo:hi:step.
    #[arg(long)]
    beta_grid: Option<String>,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[arg(long)]
    r: u32,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Grid cells.
    #[arg(long, default_value_t = 256)]
    m: usize,
    /// Value-lattice resolution (default: (cap - alpha*gamma_r)/2000).
    #[arg(long)]
    resolution: Option<f64>,
    /// Trajectory cap C.
    #[arg(long, default_value_t = 3.0)]
    cap: f64,
    /// Endpoint mode: `free` or `fixed:<value>`.
    #[arg(long, default_value = "free")]
    endpoint: String,
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long)]
    r: u32,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Comma-separated vertex counts, scientific notation accepted.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<String>,
    /// Critical-time scaling: t_c = n^power for each n.
    #[arg(long, default_value_t = 0.4, conflicts_with = "tc")]
    tc_power: f64,
    /// Explicit comma-separated t_c values matching --n.
    #[arg(long, value_delimiter = ',')]
    tc: Option<Vec<f64>>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    a: u64,
    #[arg(long)]
    runs: u64,
    /// Use uniformly random initial sets instead of {0, ..., a-1}.
    #[arg(long)]
    random_initial: bool,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long)]
    n: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    r: u32,
    /// Initial active count.
    #[arg(long, conflicts_with = "alpha")]
    a: Option<u64>,
    /// Initial size as a fraction of a_c: a = round(alpha a_c).
    #[arg(long)]
    alpha: Option<f64>,
    /// Survival target t.
    #[arg(long, conflicts_with_all = ["beta", "t_frac"])]
    t_target: Option<u64>,
    /// Target as a fraction of t_c: t = round(beta t_c).
    #[arg(long, conflicts_with = "t_frac")]
    beta: Option<f64>,
    /// Target as a fraction of n: t = ceil(frac * n).
    #[arg(long)]
    t_frac: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
    /// Emit sample moments of |A*| instead of a survival estimate.
    #[arg(long)]
    moments: bool,
    /// Emit a single simulated trace as CSV (t, s_t).
    #[arg(long)]
    trace: bool,
    /// Emit the exact DP survival table as CSV (t, survival).
    #[arg(long)]
    exact: bool,
    /// With --exact: emit the full JSON record instead of CSV.
    #[arg(long)]
    json: bool,
    /// Step horizon (default: min(n, a + ceil(cap_mult t_c))).
    #[arg(long)]
    horizon: Option<u64>,
    /// Trajectory cap multiplier C.
    #[arg(long, default_value_t = 3.0)]
    cap_mult: f64,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    r: u32,
    #[arg(long)]
    n: String,
    #[arg(long)]
    vartheta: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Replace the asymptotic survival term with the exact DP value.
    #[arg(long)]
    first_moment: bool,
    /// Run the brute-force oracle on an edge-list file instead.
    #[arg(long, conflicts_with = "first_moment")]
    graph: Option<PathBuf>,
    /// Subset-size limit for the brute-force search.
    #[arg(long, default_value_t = 8)]
    size_limit: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let seed = cli.seed.unwrap_or_else(|| {
        std::env::var("PERC_LDP_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    });
    let result = match &cli.command {
        Command::Rate(args) => cmd_rate(args, &cli.out),
        Command::Trajectory(args) => cmd_trajectory(args, &cli.out),
        Command::Exponent(args) => cmd_exponent(args, &cli.out),
        Command::Simulate(args) => cmd_simulate(args, seed, &cli.out),
        Command::Chain(args) => cmd_chain(args, seed, &cli.out),
        Command::Bound(args) => cmd_bound(args, &cli.out),
        Command::Claims(args) => cmd_claims(args, &cli.out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::StateSpace { .. } | Error::EnumerationGuard { .. } | Error::Io(_) => 1,
        Error::InvalidParameter(_) | Error::Domain(_) | Error::Infeasible(_) | Error::Parse(_) => 2,
    }
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

/// Parses counts like `200`, `1e6` or `2.5e5`.
fn parse_count(text: &str) -> Result<u64> {
    let trimmed = text.trim();
    if let Ok(n) = trimmed.parse::<u64>() {
        return Ok(n);
    }
    let value: f64 = trimmed
        .parse()
        .map_err(|e| Error::Parse(format!("bad count '{trimmed}': {e}")))?;
    if !value.is_finite() || !(1.0..=1e18).contains(&value) {
        return Err(Error::Parse(format!("count '{trimmed}' out of range")));
    }
    Ok(value.round() as u64)
}

/// Parses `lo:hi:step` inclusive grids.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "grid must be lo:hi:step, got '{text}'"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|e| Error::Parse(format!("bad grid bound: {e}")))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|e| Error::Parse(format!("bad grid bound: {e}")))?;
    let step: f64 = parts[2]
        .parse()
        .map_err(|e| Error::Parse(format!("bad grid step: {e}")))?;
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::Parse(format!("empty or inverted grid '{text}'")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

fn branch_name(branch: RateBranch) -> &'static str {
    match branch {
        RateBranch::BelowAlpha => "below_alpha",
        RateBranch::AboveAlpha => "above_alpha",
        RateBranch::ClampedAtOne => "clamped_at_one",
    }
}

fn cmd_rate(args: &RateArgs, out: &Option<PathBuf>) -> Result<ExitCode> {
    let alphas = match (&args.alpha, &args.alpha_grid) {
        (Some(a), _) => vec![*a],
        (None, Some(grid)) => parse_grid(grid)?,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "provide --alpha or --alpha-grid".into(),
            ))
        }
    };
    let betas = match (&args.beta, &args.beta_grid) {
        (Some(b), _) => vec![*b],
        (None, Some(grid)) => parse_grid(grid)?,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "provide --beta or --beta-grid".into(),
            ))
        }
    };
    let mut w = writer(out)?;
    writeln!(w, "alpha,beta,xi,branch,phi_alpha")?;
    for &alpha in &alphas {
        let phi_a = phi(alpha, args.r)?;
        for &beta in &betas {
            if beta <= phi_a {
                writeln!(w, "{alpha:.15e},{beta:.15e},nan,below_phi,{phi_a:.15e}")?;
                continue;
            }
            let point = rate_xi(alpha, beta, args.r)?;
            writeln!(
                w,
                "{alpha:.15e},{beta:.15e},{:.15e},{},{phi_a:.15e}",
                point.xi,
                branch_name(point.branch)
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_trajectory(args: &TrajectoryArgs, out: &Option<PathBuf>) -> Result<ExitCode> {
    let endpoint = match args.endpoint.as_str() {
        "free" => EndpointMode::Free,
        other => match other.strip_prefix("fixed:") {
            Some(value) => EndpointMode::Fixed(
                value
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad fixed endpoint '{other}': {e}")))?,
            ),
            None => {
                return Err(Error::Parse(format!(
                    "endpoint must be 'free' or 'fixed:<value>', got '{other}'"
                )))
            }
        },
    };
    let problem =
        TrajectoryProblem::with_options(args.alpha, args.beta, args.r, args.m, args.cap, endpoint)?;
    let resolution = args
        .resolution
        .unwrap_or_else(|| problem.default_resolution());
    let optimized = maximize_trajectory(&problem, resolution)?;
    let reference = optimal_trajectory(args.alpha, args.beta, args.r, args.m)?;
    let sigma = sigma_total(&optimized, args.r)?;
    let sup_gap = optimized.sup_distance(&reference)?;

    let mut w = writer(out)?;
    writeln!(w, "x,f_star,f_opt,gap,sigma")?;
    for i in 0..=args.m {
        let sigma_i = sigma
            .per_cell
            .get(i)
            .map(|v| format!("{v:.15e}"))
            .unwrap_or_default();
        writeln!(
            w,
            "{:.15e},{:.15e},{:.15e},{:.15e},{sigma_i}",
            optimized.grid()[i],
            reference.values()[i],
            optimized.values()[i],
            (optimized.values()[i] - reference.values()[i]).abs(),
        )?;
    }
    w.flush()?;
    eprintln!("sup_gap={sup_gap:.15e} J={:.15e}", sigma.total);
    Ok(ExitCode::SUCCESS)
}

fn cmd_exponent(args: &ExponentArgs, out: &Option<PathBuf>) -> Result<ExitCode> {
    let ns: Vec<u64> = args
        .n
        .iter()
        .map(|s| parse_count(s))
        .collect::<Result<_>>()?;
    let tcs: Vec<f64> = match &args.tc {
        Some(list) => {
            if list.len() != ns.len() {
                return Err(Error::InvalidParameter(
                    "--tc list must match --n in length".into(),
                ));
            }
            list.clone()
        }
        None => ns.iter().map(|&n| (n as f64).powf(args.tc_power)).collect(),
    };
    let models: Vec<ModelParams> = ns
        .iter()
        .zip(&tcs)
        .map(|(&n, &tc)| ModelParams::for_critical_time(n, args.r, tc))
        .collect::<Result<_>>()?;

    let mut w = writer(out)?;
    writeln!(w, "n,t_c,a,t,survival,exponent,xi,mass_censored")?;
    // Emit rows one model at a time so a guard breach still leaves the
    // completed prefix behind.
    for model in &models {
        match empirical_exponent(args.alpha, args.beta, std::slice::from_ref(model)) {
            Ok(points) => {
                let p = &points[0];
                writeln!(
                    w,
                    "{},{:.15e},{},{},{:.15e},{:.15e},{:.15e},{:.15e}",
                    p.n, p.t_c, p.a, p.t_target, p.survival, p.exponent, p.xi, p.mass_censored
                )?;
            }
            Err(e @ Error::StateSpace { .. }) => {
                w.flush()?;
                eprintln!("warning: stopping at n = {}: {e}", model.n());
                return Ok(ExitCode::from(1));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: &SimulateArgs, seed: u64, out: &Option<PathBuf>) -> Result<ExitCode> {
    let n = parse_count(&args.n)?;
    let model = ModelParams::new(n, args.p, args.r)?;
    let initial = if args.random_initial {
        InitialSet::UniformRandom
    } else {
        InitialSet::FirstVertices
    };
    let samples = final_size_samples(&model, args.a, args.runs, seed, initial)?;
    let mut w = writer(out)?;
    writeln!(w, "run,a_star")?;
    for (run, size) in samples.iter().enumerate() {
        writeln!(w, "{run},{size}")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_chain(args: &ChainArgs, seed: u64, out: &Option<PathBuf>) -> Result<ExitCode> {
    let n = parse_count(&args.n)?;
    let model = ModelParams::new(n, args.p, args.r)?;
    let scales = model.critical_scales();
    let a = match (args.a, args.alpha) {
        (Some(a), _) => a,
        (None, Some(alpha)) => (alpha * scales.a_c).round() as u64,
        (None, None) => return Err(Error::InvalidParameter("provide --a or --alpha".into())),
    };
    let mut params = ChainParams::with_cap(model, a, args.cap_mult)?;
    if let Some(h) = args.horizon {
        params = params.with_horizon(h)?;
    }
    let t_target = match (args.t_target, args.beta, args.t_frac) {
        (Some(t), _, _) => t,
        (None, Some(beta), _) => (beta * scales.t_c).round() as u64,
        (None, None, Some(frac)) => (frac * n as f64).ceil() as u64,
        (None, None, None) => scales.t_c.round() as u64,
    };
    let mut w = writer(out)?;
    if args.trace {
        let trace = simulate_chain(&params, seed);
        trace.write_csv(&mut w)?;
        return Ok(ExitCode::SUCCESS);
    }
    if args.exact {
        let table = exact_distribution(&params)?;
        if args.json {
            serde_json::to_writer_pretty(&mut w, &table)
                .map_err(|e| Error::Parse(format!("json: {e}")))?;
            writeln!(w)?;
        } else {
            table.write_csv(&mut w)?;
        }
        return Ok(ExitCode::SUCCESS);
    }
    if args.moments {
        let moments = final_size_moments(&params, args.runs, seed)?;
        serde_json::to_writer_pretty(&mut w, &moments)
            .map_err(|e| Error::Parse(format!("json: {e}")))?;
        writeln!(w)?;
        return Ok(ExitCode::SUCCESS);
    }
    let estimate = survival_mc(&params, t_target, args.runs, seed)?;
    serde_json::to_writer_pretty(&mut w, &estimate)
        .map_err(|e| Error::Parse(format!("json: {e}")))?;
    writeln!(w)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_claims(args: &ClaimsArgs, out: &Option<PathBuf>) -> Result<ExitCode> {
    let alphas = parse_grid(&args.alpha_grid)?;
    let betas = parse_grid(&args.beta_grid)?;
    let report = verify_diagonal_claims(args.r, &alphas, &betas)?;
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, &report)
        .map_err(|e| Error::Parse(format!("json: {e}")))?;
    writeln!(w)?;
    if !report.all_strict() {
        eprintln!(
            "warning: non-strict margin detected (min {:?})",
            report.min_margin()
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound(args: &BoundArgs, out: &Option<PathBuf>) -> Result<ExitCode> {
    let n = parse_count(&args.n)?;
    let mut w = writer(out)?;
    if let Some(path) = &args.graph {
        let graph = Graph::read_edge_list(std::io::BufReader::new(File::open(path)?))?;
        let result = min_contagious_bruteforce(&graph, args.r, args.size_limit)?;
        serde_json::to_writer_pretty(&mut w, &result)
            .map_err(|e| Error::Parse(format!("json: {e}")))?;
        writeln!(w)?;
        return Ok(ExitCode::SUCCESS);
    }
    if args.first_moment {
        let report = first_moment(args.r, n, args.vartheta, args.delta)?;
        serde_json::to_writer_pretty(&mut w, &report)
            .map_err(|e| Error::Parse(format!("json: {e}")))?;
        writeln!(w)?;
    } else {
        let report = contagious_lower_bound(args.r, n, args.vartheta, args.delta)?;
        serde_json::to_writer_pretty(&mut w, &report)
            .map_err(|e| Error::Parse(format!("json: {e}")))?;
        writeln!(w)?;
    }
    Ok(ExitCode::SUCCESS)
}
