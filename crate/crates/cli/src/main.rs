//! Command-line front end: instance generation, tuning bounds, solving,
//! verification and pilot-length sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cran_mud::admm::{self, Beta, SolverConfig, DEFAULT_MAX_COUNT, DEFAULT_MAX_INNER_ITERS, DEFAULT_TOL_PRIMAL};
use cran_mud::functional::{
    objective, preset, tuning_bounds, PresetKind, Regularization, Weights, DEFAULT_EPSILON, DEFAULT_FRACTION,
};
use cran_mud::harness::{parse_sweep_config, run_sweep, write_sweep_outputs, NmseAveraging};
use cran_mud::metrics::{detect_active, detection_errors, nmse, DEFAULT_REL_THRESHOLD};
use cran_mud::oracle::{kkt_residual, prox_grad_solve_detailed, OracleConfig};
use cran_mud::scenario::{generate_instance, PathLossModel, ProblemInstance, ScenarioSpec};
use cran_mud::scenario::{DEFAULT_AREA, DEFAULT_PATH_LOSS_EXPONENT};
use cran_mud::textio::{read_matrix_file, write_matrix_file, KeyValues};
use cran_mud::ChunkLayout;

/// Problems up to this many unknowns (`KN · GM`) get an oracle check in `verify`.
const ORACLE_MAX_ENTRIES: usize = 4096;

#[derive(Parser)]
#[command(
    name = "cran-mud",
    version,
    about = "Joint channel estimation and multi-user detection for C-RAN"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance directory.
    Gen(GenArgs),
    /// Print the zero-solution thresholds and a preset (α1, α2).
    Bounds(BoundsArgs),
    /// Run the re-weighted ADMM solver on an instance.
    Solve(SolveArgs),
    /// Check a solution against the optimality conditions.
    Verify(VerifyArgs),
    /// Run a pilot-length sweep.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of users.
    #[arg(long = "K")]
    users: usize,
    /// Number of RRHs.
    #[arg(long = "G")]
    rrhs: usize,
    /// Antennas per RRH.
    #[arg(long = "M")]
    rrh_antennas: usize,
    /// Antennas per user.
    #[arg(long = "N")]
    user_antennas: usize,
    /// Pilot length.
    #[arg(long = "L")]
    pilot_len: usize,
    /// Number of active users.
    #[arg(long)]
    active: usize,
    /// Signal-to-noise ratio in dB (`inf` for noiseless).
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale channels by distance-based path loss.
    #[arg(long)]
    path_loss: bool,
    /// Side length of the square deployment area.
    #[arg(long, default_value_t = DEFAULT_AREA, requires = "path_loss")]
    area: f64,
    /// Path-loss exponent.
    #[arg(long, default_value_t = DEFAULT_PATH_LOSS_EXPONENT, requires = "path_loss")]
    exponent: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    /// Instance directory; its `a.mat`, `b.mat` and `instance.meta` are read.
    #[arg(long)]
    instance: PathBuf,
    /// Real KN × GM weight matrix (defaults to all ones).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FRACTION)]
    fraction: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, requires = "alpha2", conflicts_with = "preset")]
    alpha1: Option<f64>,
    #[arg(long, requires = "alpha1")]
    alpha2: Option<f64>,
    /// Preset family: full, row or element.
    #[arg(long, default_value = "full")]
    preset: PresetKind,
    #[arg(long, default_value_t = DEFAULT_FRACTION)]
    fraction: f64,
    /// Fixed penalty parameter (default: 1.5 × the mean diagonal of A^H A).
    #[arg(long)]
    beta: Option<f64>,
    /// Number of re-weighting passes.
    #[arg(long, default_value_t = DEFAULT_MAX_COUNT)]
    max_count: usize,
    #[arg(long, default_value_t = DEFAULT_TOL_PRIMAL)]
    tol_primal: f64,
    /// Inner iteration cap per pass.
    #[arg(long, default_value_t = DEFAULT_MAX_INNER_ITERS)]
    max_inner: usize,
    /// Relative row-chunk energy threshold for the detected active set.
    #[arg(long, default_value_t = DEFAULT_REL_THRESHOLD)]
    rel_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    alpha1: f64,
    #[arg(long)]
    alpha2: f64,
    /// Real KN × GM weight matrix (defaults to all ones).
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration (`key = value` lines); missing keys take the
    /// desk-scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Average NMSE over linear ratios instead of dB values.
    #[arg(long)]
    linear_average: bool,
    /// Override `sweep.rel_threshold` of the configuration.
    #[arg(long)]
    rel_threshold: Option<f64>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => gen(args)?,
        Command::Bounds(args) => bounds(args)?,
        Command::Solve(args) => solve(args)?,
        Command::Verify(args) => verify(args)?,
        Command::Sweep(args) => return sweep(args),
    }
    Ok(ExitCode::SUCCESS)
}

fn read_instance(dir: &Path) -> Result<ProblemInstance> {
    ProblemInstance::read_dir(dir).with_context(|| format!("reading instance {}", dir.display()))
}

fn read_weights(path: Option<&Path>, layout: &ChunkLayout) -> Result<Weights> {
    let Some(path) = path else {
        return Ok(Weights::ones_for(layout));
    };
    let m = read_matrix_file(path).with_context(|| format!("reading weights {}", path.display()))?;
    layout.check_x(&m, "weights")?;
    Ok(Weights::from_matrix(&m, DEFAULT_EPSILON)?)
}

fn gen(args: GenArgs) -> Result<()> {
    let spec = ScenarioSpec {
        layout: ChunkLayout::new(
            args.users,
            args.rrhs,
            args.rrh_antennas,
            args.user_antennas,
            args.pilot_len,
        )?,
        active_count: args.active,
        snr_db: args.snr_db,
        path_loss: args.path_loss.then_some(PathLossModel {
            area: args.area,
            exponent: args.exponent,
        }),
        seed: args.seed,
    };
    let instance = generate_instance(&spec)?;
    instance.write_dir(&args.out, Some(&spec))?;
    println!("wrote instance to {}", args.out.display());
    Ok(())
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let weights = read_weights(args.weights.as_deref(), &inst.layout)?;
    let tb = tuning_bounds(&inst.a, &inst.b, &weights, &inst.layout)?;
    println!("alpha1_star = {}", tb.alpha1_star);
    println!("alpha2_star = {}", tb.alpha2_star);
    for kind in [PresetKind::Full, PresetKind::RowLasso, PresetKind::ElementLasso] {
        let reg = preset(kind, &tb, args.fraction)?;
        println!("{kind} = {}, {}", reg.alpha1, reg.alpha2);
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let layout = inst.layout;
    let reg = match (args.alpha1, args.alpha2) {
        (Some(a1), Some(a2)) => Regularization::new(a1, a2)?,
        _ => {
            let tb = tuning_bounds(&inst.a, &inst.b, &Weights::ones_for(&layout), &layout)?;
            preset(args.preset, &tb, args.fraction)?
        }
    };
    let mut config = SolverConfig::new(reg);
    if let Some(beta) = args.beta {
        config.beta = Beta::Fixed(beta);
    }
    config.max_count = args.max_count;
    config.tol_primal = args.tol_primal;
    config.max_inner_iters = args.max_inner;
    let report = admm::solve(&inst.a, &inst.b, &config, &layout)?;

    fs::create_dir_all(&args.out)?;
    write_matrix_file(&args.out.join("x_hat.mat"), &report.x_hat)?;
    let mut csv = String::from("outer_pass,inner_iter,objective,primal_residual_z,primal_residual_q,dx_rel\n");
    for r in &report.records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.outer_pass, r.inner_iter, r.objective, r.primal_residual_z, r.primal_residual_q, r.dx_rel
        );
    }
    fs::write(args.out.join("report.csv"), csv)?;

    let mut meta = KeyValues::new();
    meta.insert("alpha1", reg.alpha1);
    meta.insert("alpha2", reg.alpha2);
    meta.insert(
        "beta",
        match config.beta {
            Beta::Fixed(v) => v.to_string(),
            Beta::Scaled(c) => format!("{c} * mean diag(A^H A)"),
        },
    );
    meta.insert("epsilon", config.epsilon);
    meta.insert("max_count", config.max_count);
    meta.insert("max_inner_iters", config.max_inner_iters);
    meta.insert("tol_primal", config.tol_primal);
    meta.insert("tol_change", config.tol_change);
    let used: Vec<String> = report.inner_iterations_used.iter().map(usize::to_string).collect();
    meta.insert("inner_iterations", used.join(","));
    let converged: Vec<String> = report.converged.iter().map(bool::to_string).collect();
    meta.insert("converged", converged.join(","));
    meta.insert("wall_time_s", report.wall_time);
    let detected = detect_active(&report.x_hat, &layout, args.rel_threshold)?;
    let active: Vec<String> = detected.estimated_active.iter().map(usize::to_string).collect();
    meta.insert("detected_active_set", active.join(","));
    if let Some(truth) = &inst.truth_x {
        meta.insert("nmse_db", nmse(&report.x_hat, truth)?);
    }
    if let Some(truth) = &inst.active_set {
        meta.insert("detection_errors", detection_errors(&detected.estimated_active, truth));
    }
    fs::write(args.out.join("solve.meta"), meta.render())?;
    print!("{}", meta.render());
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let layout = inst.layout;
    let x = read_matrix_file(&args.solution).with_context(|| format!("reading {}", args.solution.display()))?;
    layout.check_x(&x, "solution")?;
    let weights = read_weights(args.weights.as_deref(), &layout)?;
    let reg = Regularization::new(args.alpha1, args.alpha2)?;
    let kkt = kkt_residual(&x, &inst.a, &inst.b, &weights, &reg, &layout)?;
    let f = objective(&x, &inst.a, &inst.b, &weights, &reg, &layout)?;
    println!("kkt_residual = {kkt}");
    println!("objective = {f}");
    if layout.x_rows() * layout.x_cols() <= ORACLE_MAX_ENTRIES {
        let oracle = prox_grad_solve_detailed(&inst.a, &inst.b, &weights, &reg, &layout, &OracleConfig::default())?;
        println!("oracle_objective = {}", oracle.objective);
        println!(
            "relative_gap = {}",
            (f - oracle.objective) / oracle.objective.max(f64::MIN_POSITIVE)
        );
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    let mut spec = parse_sweep_config(&text)?;
    if let Some(rel) = args.rel_threshold {
        spec.rel_threshold = rel;
        spec.validate()?;
    }
    let jobs = match args.jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let rows = run_sweep(&spec, jobs)?;
    let averaging = if args.linear_average {
        NmseAveraging::Linear
    } else {
        NmseAveraging::Decibel
    };
    let aggregated = write_sweep_outputs(&args.out, &rows, averaging)?;
    for row in &aggregated {
        println!(
            "{:<20} L={:<4} nmse {:>8.2} dB  detection errors {:>5.2}  diverged {}",
            row.solver, row.pilot_len, row.nmse_db_mean, row.detection_errors_mean, row.diverged
        );
    }
    let diverged = rows.iter().filter(|r| r.diverged).count();
    if diverged > 0 {
        eprintln!("{diverged} of {} cells diverged", rows.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
