//! Pilot-length sweeps: seeded Monte-Carlo trials over solver presets, CSV
//! tables and SVG line charts.
//!
//! Every `(L, trial)` cell draws its instance from the stream
//! [`RngStream::cell_id`]`(trial, L)` of `base_seed`, so results do not
//! depend on how cells are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::admm::{
    self, SolverConfig, DEFAULT_BETA_SCALE, DEFAULT_MAX_COUNT, DEFAULT_MAX_INNER_ITERS, DEFAULT_TOL_CHANGE,
    DEFAULT_TOL_PRIMAL,
};
use crate::error::{Error, Result};
use crate::functional::{preset, tuning_bounds, PresetKind, Weights, DEFAULT_EPSILON, DEFAULT_FRACTION};
use crate::matrix::ChunkLayout;
use crate::metrics::{detect_active, detection_errors, nmse, DEFAULT_REL_THRESHOLD, NMSE_FLOOR_DB};
use crate::rng::RngStream;
use crate::scenario::{generate_instance_on, PathLossModel, ScenarioSpec, DEFAULT_AREA, DEFAULT_PATH_LOSS_EXPONENT};
use crate::textio::{parse_key_values, split_list, KeyValues};

pub const ROWS_FILE: &str = "rows.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

/// A regularisation preset and the fraction of the zero-solution thresholds it uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSpec {
    pub kind: PresetKind,
    pub fraction: f64,
}

impl SolverSpec {
    pub fn new(kind: PresetKind, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Domain(format!("fraction must lie in (0, 1), got {fraction}")));
        }
        Ok(Self { kind, fraction })
    }

    /// `kind:fraction`, e.g. `full:0.03`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.fraction)
    }
}

impl FromStr for SolverSpec {
    type Err = Error;

    /// `kind[:fraction]`; the fraction defaults to [`DEFAULT_FRACTION`].
    fn from_str(s: &str) -> Result<Self> {
        let (kind, fraction) = match s.split_once(':') {
            Some((k, f)) => (
                k,
                f.trim()
                    .parse()
                    .map_err(|_| Error::Domain(format!("invalid fraction in solver `{s}`")))?,
            ),
            None => (s, DEFAULT_FRACTION),
        };
        Self::new(kind.parse()?, fraction)
    }
}

/// Solver parameters shared by every cell of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// `β = beta_scale · ‖A‖_F² / KN`.
    pub beta_scale: f64,
    pub epsilon: f64,
    pub max_count: usize,
    pub max_inner_iters: usize,
    pub tol_primal: f64,
    pub tol_change: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            beta_scale: DEFAULT_BETA_SCALE,
            epsilon: DEFAULT_EPSILON,
            max_count: DEFAULT_MAX_COUNT,
            max_inner_iters: DEFAULT_MAX_INNER_ITERS,
            tol_primal: DEFAULT_TOL_PRIMAL,
            tol_change: DEFAULT_TOL_CHANGE,
        }
    }
}

impl SolverSettings {
    pub fn config(&self, reg: crate::functional::Regularization) -> SolverConfig {
        let mut cfg = SolverConfig::new(reg);
        cfg.beta = admm::Beta::Scaled(self.beta_scale);
        cfg.epsilon = self.epsilon;
        cfg.max_count = self.max_count;
        cfg.max_inner_iters = self.max_inner_iters;
        cfg.tol_primal = self.tol_primal;
        cfg.tol_change = self.tol_change;
        cfg
    }
}

/// A full sweep description. The pilot length and seed of `scenario` are
/// replaced per cell by the swept `L` and `base_seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub scenario: ScenarioSpec,
    /// Strictly ascending.
    pub pilot_lengths: Vec<usize>,
    pub trials: usize,
    pub solvers: Vec<SolverSpec>,
    pub base_seed: u64,
    pub rel_threshold: f64,
    pub settings: SolverSettings,
}

const SWEEP_KEYS: &[&str] = &[
    "scenario.K",
    "scenario.G",
    "scenario.M",
    "scenario.N",
    "scenario.active",
    "scenario.snr_db",
    "scenario.path_loss",
    "scenario.area",
    "scenario.exponent",
    "sweep.pilot_lengths",
    "sweep.trials",
    "sweep.solvers",
    "sweep.base_seed",
    "sweep.rel_threshold",
    "solver.beta_scale",
    "solver.epsilon",
    "solver.max_count",
    "solver.max_inner_iters",
    "solver.tol_primal",
    "solver.tol_change",
];

impl SweepSpec {
    /// The large-scale setting: K = 100 users, G = 10 RRHs with M = 3
    /// antennas, N = 2 user antennas, 10 active users at 10 dB,
    /// L ∈ {30, 40, 50, 60}, 20 trials, all three presets at 3 %.
    pub fn desk_scale() -> Self {
        let layout = ChunkLayout::new(100, 10, 3, 2, 30).expect("valid layout");
        Self {
            scenario: ScenarioSpec {
                layout,
                active_count: 10,
                snr_db: 10.0,
                path_loss: None,
                seed: 1,
            },
            pilot_lengths: vec![30, 40, 50, 60],
            trials: 20,
            solvers: [PresetKind::Full, PresetKind::RowLasso, PresetKind::ElementLasso]
                .into_iter()
                .map(|kind| SolverSpec {
                    kind,
                    fraction: DEFAULT_FRACTION,
                })
                .collect(),
            base_seed: 1,
            rel_threshold: DEFAULT_REL_THRESHOLD,
            settings: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pilot_lengths.is_empty() {
            return Err(Error::Domain("pilot_lengths must be nonempty".into()));
        }
        if self.pilot_lengths.windows(2).any(|w| w[0] >= w[1]) || self.pilot_lengths[0] == 0 {
            return Err(Error::Domain(
                "pilot_lengths must be positive and strictly ascending".into(),
            ));
        }
        if self.pilot_lengths.iter().any(|&l| l > u32::MAX as usize) {
            return Err(Error::Domain("pilot lengths must fit in 32 bits".into()));
        }
        if self.trials == 0 || self.trials > u32::MAX as usize {
            return Err(Error::Domain("trials must lie in 1..2^32".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Domain("at least one solver is required".into()));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            SolverSpec::new(s.kind, s.fraction)?;
            if self.solvers[..i].contains(s) {
                return Err(Error::Domain(format!("solver `{s}` listed twice")));
            }
        }
        if !(self.rel_threshold > 0.0 && self.rel_threshold < 1.0) {
            return Err(Error::Domain("rel_threshold must lie in (0, 1)".into()));
        }
        self.cell_scenario(self.pilot_lengths[0]).validate()?;
        let reg = crate::functional::Regularization::new(1.0, 1.0)?;
        self.settings.config(reg).validate()
    }

    fn cell_scenario(&self, pilot_len: usize) -> ScenarioSpec {
        ScenarioSpec {
            layout: self.scenario.layout.with_pilot_len(pilot_len),
            seed: self.base_seed,
            ..self.scenario.clone()
        }
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        let l = &self.scenario.layout;
        kv.insert("scenario.K", l.users);
        kv.insert("scenario.G", l.rrhs);
        kv.insert("scenario.M", l.rrh_antennas);
        kv.insert("scenario.N", l.user_antennas);
        kv.insert("scenario.active", self.scenario.active_count);
        kv.insert("scenario.snr_db", self.scenario.snr_db);
        kv.insert("scenario.path_loss", self.scenario.path_loss.is_some());
        if let Some(pl) = &self.scenario.path_loss {
            kv.insert("scenario.area", pl.area);
            kv.insert("scenario.exponent", pl.exponent);
        }
        let join = |items: Vec<String>| items.join(", ");
        kv.insert(
            "sweep.pilot_lengths",
            join(self.pilot_lengths.iter().map(ToString::to_string).collect()),
        );
        kv.insert("sweep.trials", self.trials);
        kv.insert(
            "sweep.solvers",
            join(self.solvers.iter().map(SolverSpec::label).collect()),
        );
        kv.insert("sweep.base_seed", self.base_seed);
        kv.insert("sweep.rel_threshold", self.rel_threshold);
        let s = &self.settings;
        kv.insert("solver.beta_scale", s.beta_scale);
        kv.insert("solver.epsilon", s.epsilon);
        kv.insert("solver.max_count", s.max_count);
        kv.insert("solver.max_inner_iters", s.max_inner_iters);
        kv.insert("solver.tol_primal", s.tol_primal);
        kv.insert("solver.tol_change", s.tol_change);
        kv
    }

    /// Reads a config whose missing keys fall back to [`SweepSpec::desk_scale`].
    /// Unknown keys are rejected.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        if let Some(key) = kv.keys().find(|k| !SWEEP_KEYS.contains(k)) {
            return Err(Error::Domain(format!("unknown sweep key `{key}`")));
        }
        let base = Self::desk_scale();
        let bl = base.scenario.layout;
        let layout = ChunkLayout::new(
            kv.parse_opt("scenario.K")?.unwrap_or(bl.users),
            kv.parse_opt("scenario.G")?.unwrap_or(bl.rrhs),
            kv.parse_opt("scenario.M")?.unwrap_or(bl.rrh_antennas),
            kv.parse_opt("scenario.N")?.unwrap_or(bl.user_antennas),
            bl.pilot_len,
        )?;
        let path_loss = if kv.parse_opt::<bool>("scenario.path_loss")?.unwrap_or(false) {
            Some(PathLossModel {
                area: kv.parse_opt("scenario.area")?.unwrap_or(DEFAULT_AREA),
                exponent: kv.parse_opt("scenario.exponent")?.unwrap_or(DEFAULT_PATH_LOSS_EXPONENT),
            })
        } else {
            None
        };
        let pilot_lengths = match kv.get("sweep.pilot_lengths") {
            Some(v) => split_list(v)
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Domain(format!("invalid pilot length `{s}`")))
                })
                .collect::<Result<Vec<usize>>>()?,
            None => base.pilot_lengths,
        };
        let layout = layout.with_pilot_len(pilot_lengths.first().copied().unwrap_or(bl.pilot_len));
        let solvers = match kv.get("sweep.solvers") {
            Some(v) => split_list(v).map(str::parse).collect::<Result<Vec<SolverSpec>>>()?,
            None => base.solvers,
        };
        let bs = base.settings;
        let base_seed = kv.parse_opt("sweep.base_seed")?.unwrap_or(base.base_seed);
        let spec = Self {
            scenario: ScenarioSpec {
                layout,
                active_count: kv.parse_opt("scenario.active")?.unwrap_or(base.scenario.active_count),
                snr_db: kv.parse_opt("scenario.snr_db")?.unwrap_or(base.scenario.snr_db),
                path_loss,
                seed: base_seed,
            },
            pilot_lengths,
            trials: kv.parse_opt("sweep.trials")?.unwrap_or(base.trials),
            solvers,
            base_seed,
            rel_threshold: kv.parse_opt("sweep.rel_threshold")?.unwrap_or(base.rel_threshold),
            settings: SolverSettings {
                beta_scale: kv.parse_opt("solver.beta_scale")?.unwrap_or(bs.beta_scale),
                epsilon: kv.parse_opt("solver.epsilon")?.unwrap_or(bs.epsilon),
                max_count: kv.parse_opt("solver.max_count")?.unwrap_or(bs.max_count),
                max_inner_iters: kv.parse_opt("solver.max_inner_iters")?.unwrap_or(bs.max_inner_iters),
                tol_primal: kv.parse_opt("solver.tol_primal")?.unwrap_or(bs.tol_primal),
                tol_change: kv.parse_opt("solver.tol_change")?.unwrap_or(bs.tol_change),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses the `key = value` sweep configuration format.
pub fn parse_sweep_config(text: &str) -> Result<SweepSpec> {
    SweepSpec::from_key_values(&parse_key_values(text)?)
}

/// Outcome of one `(solver, L, trial)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub solver: String,
    pub pilot_len: usize,
    /// 0-based.
    pub trial: usize,
    /// `NaN` when the solve diverged.
    pub nmse_db: f64,
    /// `None` when the solve diverged.
    pub detection_errors: Option<usize>,
    /// Seconds spent in the solve call.
    pub wall_time_s: f64,
    pub inner_iterations: usize,
    pub diverged: bool,
}

fn run_cell(spec: &SweepSpec, pilot_len: usize, trial: usize) -> Result<Vec<SweepRow>> {
    let scenario = spec.cell_scenario(pilot_len);
    let instance = generate_instance_on(&scenario, RngStream::cell_id(trial as u64, pilot_len as u64))?;
    let layout = instance.layout;
    let truth_x = instance.truth_x.as_ref().expect("generated instances carry the truth");
    let truth_set = instance
        .active_set
        .as_ref()
        .expect("generated instances carry the active set");
    let bounds = tuning_bounds(&instance.a, &instance.b, &Weights::ones_for(&layout), &layout)?;
    let problem = admm::Problem::new(instance.a.clone(), instance.b.clone(), layout)?;

    let mut rows = Vec::with_capacity(spec.solvers.len());
    for solver in &spec.solvers {
        let reg = preset(solver.kind, &bounds, solver.fraction)?;
        let config = spec.settings.config(reg);
        let start = Instant::now();
        let outcome = admm::solve_problem(&problem, &config);
        let wall_time_s = start.elapsed().as_secs_f64();
        let row = match outcome {
            Ok(report) => {
                let detected = detect_active(&report.x_hat, &layout, spec.rel_threshold)?;
                SweepRow {
                    solver: solver.label(),
                    pilot_len,
                    trial,
                    nmse_db: nmse(&report.x_hat, truth_x)?,
                    detection_errors: Some(detection_errors(&detected.estimated_active, truth_set)),
                    wall_time_s,
                    inner_iterations: report.total_inner_iterations(),
                    diverged: false,
                }
            }
            Err(Error::Divergence { .. }) => SweepRow {
                solver: solver.label(),
                pilot_len,
                trial,
                nmse_db: f64::NAN,
                detection_errors: None,
                wall_time_s,
                inner_iterations: 0,
                diverged: true,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Runs every `(solver, L, trial)` cell on a pool of `jobs` threads and
/// returns the rows ordered by solver (as listed), then `L`, then trial.
/// Divergent solves become flagged rows; any other error aborts the sweep.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if jobs == 0 {
        return Err(Error::Domain("jobs must be >= 1".into()));
    }
    let cells: Vec<(usize, usize)> = spec
        .pilot_lengths
        .iter()
        .flat_map(|&l| (0..spec.trials).map(move |t| (l, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let per_cell: Vec<Vec<SweepRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(l, t)| run_cell(spec, l, t))
            .collect::<Result<_>>()
    })?;
    let mut rows = Vec::with_capacity(cells.len() * spec.solvers.len());
    for s in 0..spec.solvers.len() {
        rows.extend(per_cell.iter().map(|cell| cell[s].clone()));
    }
    Ok(rows)
}

/// Deterministic per-cell table (wall time excluded; see [`timing_csv`]).
pub fn rows_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("solver,L,trial,nmse_db,detection_errors,inner_iterations,diverged\n");
    for r in rows {
        let det = r.detection_errors.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.solver, r.pilot_len, r.trial, r.nmse_db, det, r.inner_iterations, r.diverged
        );
    }
    out
}

pub fn timing_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("solver,L,trial,wall_time_s\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.solver, r.pilot_len, r.trial, r.wall_time_s);
    }
    out
}

/// How per-trial NMSE values are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NmseAveraging {
    /// Mean of the dB values.
    #[default]
    Decibel,
    /// Mean of the linear ratios, reported in dB.
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub solver: String,
    pub pilot_len: usize,
    /// Non-divergent trials contributing to the means.
    pub trials: usize,
    pub diverged: usize,
    pub nmse_db_mean: f64,
    pub nmse_db_stderr: f64,
    pub detection_errors_mean: f64,
    pub detection_errors_stderr: f64,
    pub wall_time_s_mean: f64,
    pub wall_time_s_stderr: f64,
    pub inner_iterations_mean: f64,
}

/// Mean and standard error (sample deviation over `√n`; 0 for one value).
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per-`(solver, L)` means and standard errors over non-divergent rows.
/// Groups keep the solvers' first-appearance order, then ascending `L`.
pub fn aggregate(rows: &[SweepRow], averaging: NmseAveraging) -> Result<Vec<AggregateRow>> {
    if rows.is_empty() {
        return Err(Error::Domain("nothing to aggregate".into()));
    }
    let mut solver_order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        let s = match solver_order.iter().position(|&s| s == r.solver) {
            Some(i) => i,
            None => {
                solver_order.push(&r.solver);
                solver_order.len() - 1
            }
        };
        groups.entry((s, r.pilot_len)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((s, pilot_len), group)| {
            let ok: Vec<&SweepRow> = group.iter().copied().filter(|r| !r.diverged).collect();
            let collect = |f: fn(&SweepRow) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let nmse_values = collect(|r| r.nmse_db);
            let (nmse_db_mean, nmse_db_stderr) = match averaging {
                NmseAveraging::Decibel => mean_stderr(&nmse_values),
                NmseAveraging::Linear => {
                    let lin: Vec<f64> = nmse_values.iter().map(|db| 10f64.powf(db / 10.0)).collect();
                    let (m, se) = mean_stderr(&lin);
                    let db = if m > 0.0 {
                        (10.0 * m.log10()).max(NMSE_FLOOR_DB)
                    } else {
                        NMSE_FLOOR_DB
                    };
                    // first-order propagation of the linear standard error
                    let se_db = if m > 0.0 {
                        10.0 / std::f64::consts::LN_10 * se / m
                    } else {
                        0.0
                    };
                    (db, se_db)
                }
            };
            let (detection_errors_mean, detection_errors_stderr) =
                mean_stderr(&collect(|r| r.detection_errors.unwrap_or(0) as f64));
            let (wall_time_s_mean, wall_time_s_stderr) = mean_stderr(&collect(|r| r.wall_time_s));
            let (inner_iterations_mean, _) = mean_stderr(&collect(|r| r.inner_iterations as f64));
            AggregateRow {
                solver: solver_order[s].to_string(),
                pilot_len,
                trials: ok.len(),
                diverged: group.len() - ok.len(),
                nmse_db_mean,
                nmse_db_stderr,
                detection_errors_mean,
                detection_errors_stderr,
                wall_time_s_mean,
                wall_time_s_stderr,
                inner_iterations_mean,
            }
        })
        .collect())
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "solver,L,trials,diverged,nmse_db_mean,nmse_db_stderr,detection_errors_mean,detection_errors_stderr,\
         wall_time_s_mean,wall_time_s_stderr,inner_iterations_mean\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.solver,
            r.pilot_len,
            r.trials,
            r.diverged,
            r.nmse_db_mean,
            r.nmse_db_stderr,
            r.detection_errors_mean,
            r.detection_errors_stderr,
            r.wall_time_s_mean,
            r.wall_time_s_stderr,
            r.inner_iterations_mean
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Nmse,
    DetectionErrors,
    Runtime,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Nmse, Metric::DetectionErrors, Metric::Runtime];

    /// Base name of the chart written by [`write_sweep_outputs`].
    pub fn file_stem(&self) -> &'static str {
        match self {
            Metric::Nmse => "nmse",
            Metric::DetectionErrors => "detection",
            Metric::Runtime => "runtime",
        }
    }

    pub fn axis_label(&self) -> &'static str {
        match self {
            Metric::Nmse => "NMSE (dB)",
            Metric::DetectionErrors => "wrongly detected users",
            Metric::Runtime => "solve time (s)",
        }
    }

    fn mean_stderr(&self, r: &AggregateRow) -> (f64, f64) {
        match self {
            Metric::Nmse => (r.nmse_db_mean, r.nmse_db_stderr),
            Metric::DetectionErrors => (r.detection_errors_mean, r.detection_errors_stderr),
            Metric::Runtime => (r.wall_time_s_mean, r.wall_time_s_stderr),
        }
    }
}

type Series = Vec<(String, Vec<(f64, f64)>)>;

fn collect_series(aggregated: &[AggregateRow], metric: Metric) -> Series {
    let mut series: Series = Vec::new();
    for r in aggregated {
        let (y, _) = metric.mean_stderr(r);
        if !y.is_finite() {
            continue;
        }
        let point = (r.pilot_len as f64, y);
        match series.iter_mut().find(|(name, _)| *name == r.solver) {
            Some((_, pts)) => pts.push(point),
            None => series.push((r.solver.clone(), vec![point])),
        }
    }
    series
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn padded_range(values: impl Iterator<Item = f64>, pad: f64) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        let p = pad * (hi - lo);
        (lo - p, hi + p)
    }
}

fn render_svg(series: &Series, x_label: &str, y_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 170.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 60.0;
    let points = || series.iter().flat_map(|(_, pts)| pts.iter().copied());
    let (x0, x1) = padded_range(points().map(|p| p.0), 0.0);
    let (y0, y1) = padded_range(points().map(|p| p.1), 0.05);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );
    // ticks: every distinct x, five evenly spaced y values
    let mut xs: Vec<f64> = points().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{b5:.2}" stroke="#333"/><text x="{px:.2}" y="{t:.2}" text-anchor="middle">{x}</text>"##,
            b = TOP + plot_h,
            b5 = TOP + plot_h + 5.0,
            t = TOP + plot_h + 20.0
        );
    }
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        let py = sy(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{l5:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#333"/><text x="{t:.2}" y="{ty:.2}" text-anchor="end">{y:.4}</text>"##,
            l5 = LEFT - 5.0,
            t = LEFT - 8.0,
            ty = py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        H - 15.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + plot_h / 2.0,
        xml_escape(y_label)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 15.0 + 20.0 * i as f64;
        let lx = W - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes a line chart of `metric` against `L` (one series per solver) to
/// `out_path`, and the plotted values to `out_path` with extension `csv`.
/// Fails without writing anything when no finite value is available.
pub fn emit_plot(aggregated: &[AggregateRow], metric: Metric, out_path: &Path) -> Result<()> {
    let series = collect_series(aggregated, metric);
    if series.is_empty() {
        return Err(Error::Domain(format!(
            "no finite {} values to plot",
            metric.file_stem()
        )));
    }
    let mut csv = String::from("solver,L,mean,stderr\n");
    for r in aggregated {
        let (m, se) = metric.mean_stderr(r);
        let _ = writeln!(csv, "{},{},{},{}", r.solver, r.pilot_len, m, se);
    }
    let svg = render_svg(&series, "pilot length L", metric.axis_label());
    fs::write(out_path, svg)?;
    fs::write(out_path.with_extension("csv"), csv)?;
    Ok(())
}

/// Writes `rows.csv`, `timing.csv`, `aggregate.csv` and one chart per
/// [`Metric`] into `dir` (created if needed).
pub fn write_sweep_outputs(dir: &Path, rows: &[SweepRow], averaging: NmseAveraging) -> Result<Vec<AggregateRow>> {
    fs::create_dir_all(dir)?;
    let aggregated = aggregate(rows, averaging)?;
    fs::write(dir.join(ROWS_FILE), rows_csv(rows))?;
    fs::write(dir.join(TIMING_FILE), timing_csv(rows))?;
    fs::write(dir.join(AGGREGATE_FILE), aggregate_csv(&aggregated))?;
    for metric in Metric::ALL {
        emit_plot(&aggregated, metric, &dir.join(format!("{}.svg", metric.file_stem())))?;
    }
    Ok(aggregated)
}
