//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line and then
//! asserts, so `cargo test -p cran-mud --test acceptance -- --nocapture`
//! shows the full report.
//!
//! Criteria 6 and 7 share one desk-scale sweep (run once with 8 workers and
//! once with 1); on a single core the whole suite takes several minutes.

use std::sync::OnceLock;
use std::time::Instant;

use cran_mud::admm::{self, Problem, SolverConfig, SolverState, XPath, XSolver};
use cran_mud::functional::{objective, preset, tuning_bounds, PresetKind, Regularization, Weights};
use cran_mud::harness::{aggregate, rows_csv, run_sweep, AggregateRow, NmseAveraging, SweepRow, SweepSpec};
use cran_mud::oracle::{kkt_residual, prox_grad_solve_detailed, OracleConfig};
use cran_mud::rng::RngStream;
use cran_mud::scenario::{generate_instance_on, PathLossModel, ProblemInstance, ScenarioSpec};
use cran_mud::shrinkage::matrix_shrink;
use cran_mud::{ChunkLayout, ComplexMatrix};

fn report(criterion: &str, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn small_layout() -> ChunkLayout {
    ChunkLayout::new(20, 4, 2, 1, 12).unwrap()
}

fn small_instance(index: u64, path_loss: bool) -> ProblemInstance {
    let spec = ScenarioSpec {
        layout: small_layout(),
        active_count: 3,
        snr_db: 10.0,
        path_loss: path_loss.then(PathLossModel::default),
        seed: 2024,
    };
    generate_instance_on(&spec, index).unwrap()
}

fn random(rows: usize, cols: usize, rng: &mut RngStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian(1.0))
}

/// One fixed-weight (W = 1) ADMM solve per criterion-1 instance.
struct SmallRun {
    instance: ProblemInstance,
    reg: Regularization,
    report: admm::SolveReport,
}

fn small_runs() -> &'static (Vec<SmallRun>, f64) {
    static RUNS: OnceLock<(Vec<SmallRun>, f64)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let layout = small_layout();
        let start = Instant::now();
        let runs = (0..25)
            .map(|i| {
                let instance = small_instance(i, false);
                let bounds = tuning_bounds(&instance.a, &instance.b, &Weights::ones_for(&layout), &layout).unwrap();
                let reg = preset(PresetKind::Full, &bounds, 0.03).unwrap();
                let mut config = SolverConfig::new(reg);
                config.max_count = 1;
                config.track_stationarity = true;
                let report = admm::solve(&instance.a, &instance.b, &config, &layout).unwrap();
                SmallRun { instance, reg, report }
            })
            .collect();
        (runs, start.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_1_oracle_equivalence() {
    let layout = small_layout();
    let start = Instant::now();
    let (runs, _) = small_runs();
    let w = Weights::ones_for(&layout);
    let mut worst: f64 = 0.0;
    for run in runs {
        let inst = &run.instance;
        let f_admm = objective(&run.report.x_hat, &inst.a, &inst.b, &w, &run.reg, &layout).unwrap();
        let oracle =
            prox_grad_solve_detailed(&inst.a, &inst.b, &w, &run.reg, &layout, &OracleConfig::default()).unwrap();
        worst = worst.max((f_admm - oracle.objective).abs() / oracle.objective);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-4 && elapsed < 60.0;
    report(
        "1 oracle equivalence",
        pass,
        format!("25 instances, max relative gap {worst:.2e} <= 1e-4, {elapsed:.2} s < 60 s"),
    );
    assert!(pass);
}

/// Largest `‖X̂‖/‖B‖` above the thresholds and at the joint half point, the
/// largest KKT residual of `X = 0` at the joint half point, and the smallest
/// `‖X̂‖/‖B‖` at the two mirrored half points.
struct ThresholdProbe {
    above: f64,
    joint_half: f64,
    joint_half_zero_kkt: f64,
    mirrored_half: f64,
}

fn threshold_probe() -> &'static ThresholdProbe {
    static PROBE: OnceLock<ThresholdProbe> = OnceLock::new();
    PROBE.get_or_init(|| {
        let mut probe = ThresholdProbe {
            above: 0.0,
            joint_half: 0.0,
            joint_half_zero_kkt: 0.0,
            mirrored_half: f64::INFINITY,
        };
        let ratio = |inst: &ProblemInstance, a1: f64, a2: f64| {
            let config = SolverConfig::new(Regularization::new(a1, a2).unwrap());
            let x = admm::solve(&inst.a, &inst.b, &config, &inst.layout).unwrap().x_hat;
            x.frobenius_norm() / inst.b.frobenius_norm()
        };
        for i in 0..10u64 {
            let inst = small_instance(100 + i, i % 2 == 1);
            let layout = inst.layout;
            let w = Weights::ones_for(&layout);
            let tb = tuning_bounds(&inst.a, &inst.b, &w, &layout).unwrap();
            let (s1, s2) = (tb.alpha1_star, tb.alpha2_star);
            for (a1, a2) in [(1.01 * s1, 0.03 * s2), (0.03 * s1, 1.01 * s2)] {
                probe.above = probe.above.max(ratio(&inst, a1, a2));
            }
            probe.joint_half = probe.joint_half.max(ratio(&inst, 0.5 * s1, 0.5 * s2));
            let half = Regularization::new(0.5 * s1, 0.5 * s2).unwrap();
            let zero = ComplexMatrix::zeros(layout.x_rows(), layout.x_cols());
            let kkt = kkt_residual(&zero, &inst.a, &inst.b, &w, &half, &layout).unwrap();
            probe.joint_half_zero_kkt = probe.joint_half_zero_kkt.max(kkt);
            for (a1, a2) in [(0.5 * s1, 0.03 * s2), (0.03 * s1, 0.5 * s2)] {
                probe.mirrored_half = probe.mirrored_half.min(ratio(&inst, a1, a2));
            }
        }
        probe
    })
}

#[test]
fn criterion_2_zero_solution_thresholds() {
    let p = threshold_probe();
    let pass_above = p.above <= 1e-6;
    report(
        "2 zero solution above thresholds",
        pass_above,
        format!(
            "10 instances, max ||X||/||B|| at (1.01 a1*, 0.03 a2*) and (0.03 a1*, 1.01 a2*) {:.2e} <= 1e-6",
            p.above
        ),
    );
    report(
        "2 nonzero at (0.5 a1*, 0.5 a2*)",
        p.joint_half > 0.0,
        format!(
            "max ||X||/||B|| {:.2e}; X = 0 is the certified optimum there (max KKT residual of 0 is {:.1e})",
            p.joint_half, p.joint_half_zero_kkt
        ),
    );
    let pass_mirrored = p.mirrored_half > 0.0;
    report(
        "2 nonzero at (0.5 a1*, 0.03 a2*) and (0.03 a1*, 0.5 a2*)",
        pass_mirrored,
        format!("min ||X||/||B|| {:.2e} > 0", p.mirrored_half),
    );
    assert!(pass_above && pass_mirrored);
    // Halving both thresholds never leaves the zero-solution region.
    assert_eq!(p.joint_half_zero_kkt, 0.0);
}

/// The joint half-threshold converse as literally stated. It cannot hold:
/// `X = 0` satisfies the optimality conditions exactly at that point (see the
/// zero KKT residual printed by criterion 2), so this test fails when run.
#[test]
#[ignore = "unattainable: X = 0 is optimal at (0.5 a1*, 0.5 a2*)"]
fn criterion_2_joint_half_threshold_converse() {
    assert!(threshold_probe().joint_half > 0.0);
}

#[test]
fn criterion_3_shrinkage_exactness() {
    let mut rng = RngStream::new(3, 0);
    let mut worst_norm: f64 = 0.0;
    let mut violations = 0usize;
    for _ in 0..1000 {
        let rows = 1 + (rng.uniform() * 4.0) as usize;
        let cols = 1 + (rng.uniform() * 4.0) as usize;
        let b = random(rows, cols, &mut rng);
        let tau = rng.uniform() * 1.5 * b.frobenius_norm();
        let s = matrix_shrink(&b, tau).unwrap();
        worst_norm = worst_norm.max((s.frobenius_norm() - (b.frobenius_norm() - tau).max(0.0)).abs());
        let f = |x: &ComplexMatrix| tau * x.frobenius_norm() + 0.5 * x.sub(&b).unwrap().frobenius_norm_sqr();
        let fs = f(&s);
        for k in 0..100 {
            let step = 10f64.powi(-(k % 7));
            let y = s.add(&random(rows, cols, &mut rng).scale(step)).unwrap();
            if f(&y) < fs - 1e-14 * (1.0 + fs) {
                violations += 1;
            }
        }
    }
    let pass = worst_norm <= 1e-12 && violations == 0;
    report(
        "3 shrinkage exactness",
        pass,
        format!("1000 pairs, max norm-law error {worst_norm:.2e} <= 1e-12, {violations} prox-minimality violations in 100000 perturbations"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_x_update_stationarity() {
    let (runs, _) = small_runs();
    let worst_stationarity = runs
        .iter()
        .flat_map(|r| r.report.records.iter())
        .map(|rec| rec.stationarity.expect("tracked"))
        .fold(0.0, f64::max);
    let iterations: usize = runs.iter().map(|r| r.report.records.len()).sum();

    let mut worst_path_gap: f64 = 0.0;
    for i in 0..10u64 {
        let mut rng = RngStream::new(40 + i, 0);
        let layout = ChunkLayout::new(6 + i as usize, 3, 2, 1 + (i % 2) as usize, 5).unwrap();
        let (l, (kn, gm)) = (layout.pilot_len, layout.x_shape());
        let problem = Problem::new(random(l, kn, &mut rng), random(l, gm, &mut rng), layout).unwrap();
        let w: Vec<f64> = (0..kn * gm).map(|_| 0.2 + 3.0 * rng.uniform()).collect();
        let weights = Weights::from_values(kn, gm, w, 1e-8).unwrap();
        let mut state = SolverState::initial(&layout, weights.clone());
        state.z = random(kn, gm, &mut rng);
        state.q = random(kn, gm, &mut rng);
        state.lambda1 = random(kn, gm, &mut rng);
        state.lambda2 = random(kn, gm, &mut rng);
        let beta = 0.1 + rng.uniform();
        let wood = XSolver::new(&problem, &weights, beta, XPath::Woodbury)
            .unwrap()
            .solve(&state, &problem);
        let direct = XSolver::new(&problem, &weights, beta, XPath::Direct)
            .unwrap()
            .solve(&state, &problem);
        worst_path_gap = worst_path_gap.max(wood.sub(&direct).unwrap().frobenius_norm() / direct.frobenius_norm());
    }
    let pass = worst_stationarity <= 1e-8 && worst_path_gap <= 1e-10;
    report(
        "4 x-update stationarity",
        pass,
        format!(
            "max per-column residual {worst_stationarity:.2e} <= 1e-8 over {iterations} iterations; \
             Woodbury vs direct {worst_path_gap:.2e} <= 1e-10 on 10 instances"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_convergence() {
    let layout = small_layout();
    let (runs, _) = small_runs();
    let w = Weights::ones_for(&layout);
    let mut worst_residual: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut max_iters = 0;
    for run in runs {
        let last = run.report.records.last().unwrap();
        worst_residual = worst_residual.max(last.primal_residual());
        max_iters = max_iters.max(run.report.records.len());
        let inst = &run.instance;
        worst_kkt = worst_kkt.max(kkt_residual(&run.report.x_hat, &inst.a, &inst.b, &w, &run.reg, &layout).unwrap());
    }
    let pass = worst_residual <= 1e-6 && max_iters <= 500 && worst_kkt <= 1e-4;
    report(
        "5 convergence",
        pass,
        format!(
            "final primal residual max {worst_residual:.2e} <= 1e-6 with at most {max_iters} of 500 iterations; \
             max KKT residual {worst_kkt:.2e} <= 1e-4"
        ),
    );
    assert!(pass);
}

fn desk_sweep() -> &'static Vec<SweepRow> {
    static ROWS: OnceLock<Vec<SweepRow>> = OnceLock::new();
    ROWS.get_or_init(|| run_sweep(&SweepSpec::desk_scale(), 8).unwrap())
}

fn find(agg: &[AggregateRow], kind: PresetKind, l: usize) -> &AggregateRow {
    agg.iter()
        .find(|r| r.solver.starts_with(&format!("{}:", kind.label())) && r.pilot_len == l)
        .unwrap()
}

#[test]
fn criterion_6_trend_reproduction() {
    let start = Instant::now();
    let rows = desk_sweep();
    let agg = aggregate(rows, NmseAveraging::Decibel).unwrap();
    let full: Vec<f64> = [30, 40, 50, 60]
        .iter()
        .map(|&l| find(&agg, PresetKind::Full, l).nmse_db_mean)
        .collect();
    let decreasing = full.windows(2).all(|w| w[1] < w[0]);
    let det60 = find(&agg, PresetKind::Full, 60).detection_errors_mean;
    let exact60 = rows
        .iter()
        .filter(|r| r.solver.starts_with("full:") && r.pilot_len == 60 && r.detection_errors == Some(0))
        .count();
    let diverged = rows.iter().filter(|r| r.diverged).count();

    let mut spec = SweepSpec::desk_scale();
    spec.scenario.path_loss = Some(PathLossModel::default());
    spec.pilot_lengths = vec![40];
    let pl = aggregate(&run_sweep(&spec, 8).unwrap(), NmseAveraging::Decibel).unwrap();
    let (f, r, e) = (
        find(&pl, PresetKind::Full, 40).nmse_db_mean,
        find(&pl, PresetKind::RowLasso, 40).nmse_db_mean,
        find(&pl, PresetKind::ElementLasso, 40).nmse_db_mean,
    );
    let elapsed = start.elapsed().as_secs_f64();

    let pass_a = decreasing;
    let pass_b = det60 <= 1.0;
    let pass_c = f <= r && f <= e;
    report(
        "6a NMSE decreases with L",
        pass_a,
        format!(
            "full preset mean NMSE at L=30,40,50,60: {:.2}, {:.2}, {:.2}, {:.2} dB",
            full[0], full[1], full[2], full[3]
        ),
    );
    report(
        "6b detection at L=60",
        pass_b,
        format!("full preset mean detection errors {det60:.2} <= 1.0; exact support in {exact60}/20 trials"),
    );
    report(
        "6c full preset best with path loss",
        pass_c,
        format!("L=40 mean NMSE full {f:.2} dB, row_lasso {r:.2} dB, element_lasso {e:.2} dB"),
    );
    println!("criterion 6 info: {diverged} diverged cells, {elapsed:.0} s");
    assert!(pass_a && pass_b && pass_c);
}

#[test]
fn criterion_7_determinism() {
    let parallel = rows_csv(desk_sweep());
    let serial = rows_csv(&run_sweep(&SweepSpec::desk_scale(), 1).unwrap());
    let pass = parallel == serial;
    report(
        "7 determinism",
        pass,
        format!(
            "rows.csv with 8 jobs vs 1 job: {} bytes, identical = {pass}",
            parallel.len()
        ),
    );
    assert!(pass);
}
