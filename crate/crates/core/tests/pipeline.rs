mod common;

use rfcs::harness::{
    emit_report, read_json_report, run_phase_transition, run_trial, trial_seed, Cell, ExperimentConfig, Instance,
    ReportFormat,
};
use rfcs::stats::Frequency;
use rfcs::{solve_bp, BasisKind, BpSettings};

#[test]
fn certified_instance_is_recovered_and_matches_exhaustive_search() {
    let cfg = ExperimentConfig {
        n: 32,
        ..Default::default()
    };
    let cell = Cell { sparsity: 2, m: 16 };
    let inst = (0..200)
        .map(|t| Instance::sample(&cfg, cell, trial_seed(11, t)).unwrap())
        .find(|inst| inst.certificate(0.5).unwrap().certified)
        .expect("some seed yields a certificate");
    let sol = solve_bp(&inst.sensing_map().unwrap(), &inst.measurements, &BpSettings::default(), None).unwrap();
    let err: f64 = sol
        .solution
        .iter()
        .zip(&inst.signal.coefficients)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(sol.converged && err <= 1e-6, "error {err}");

    let a = common::explicit_composite_rows(inst.op.filter().taps(), inst.op.mask().kept())
        * inst.basis.to_dense().unwrap();
    let opt = common::exhaustive_sparse_l1(&a, &inst.measurements, 2).unwrap();
    assert!(opt.unique);
    for (p, q) in opt.solution.iter().zip(&inst.signal.coefficients) {
        assert!((p - q).abs() <= 1e-8);
    }
}

#[test]
fn dense_and_matrix_free_pipelines_agree() {
    let fast = ExperimentConfig {
        n: 64,
        ..Default::default()
    };
    let dense = ExperimentConfig {
        dense_path: true,
        ..fast.clone()
    };
    let cell = Cell { sparsity: 2, m: 32 };
    let count = |cfg: &ExperimentConfig| {
        let hits = (0..200).filter(|&t| run_trial(cfg, cell, t, trial_seed(21, t)).recovered).count();
        Frequency {
            trials: 200,
            hits: hits as u64,
        }
    };
    let (a, b) = (count(&fast), count(&dense));
    let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
    assert!((a.rate() - b.rate()).abs() <= 3.0 * se.max(1.0 / 200.0), "{a:?} vs {b:?}");
}

#[test]
fn csv_rows_match_grid_and_json_round_trips() {
    let cfg = ExperimentConfig {
        n: 16,
        sparsity_grid: vec![1, 2, 3],
        m_grid: vec![6, 12, 24, 32],
        trials_per_cell: 4,
        root_seed: 3,
        ..Default::default()
    };
    let report = run_phase_transition(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    emit_report(&report, ReportFormat::Csv, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 4);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 9));

    let json = dir.path().join("grid.json");
    emit_report(&report, ReportFormat::Json, &json).unwrap();
    assert_eq!(read_json_report(&json).unwrap(), report);
}

#[test]
fn sweeps_do_not_depend_on_thread_count() {
    let cfg = ExperimentConfig {
        n: 32,
        sparsity_grid: vec![2, 3],
        m_grid: vec![10, 20],
        trials_per_cell: 300,
        root_seed: 8,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_phase_transition(&cfg).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn success_threshold_tracks_sparsity_times_log() {
    let cfg = ExperimentConfig {
        n: 256,
        sparsity_grid: vec![4],
        m_grid: (0..=20).map(|k| (8.0 * 2f64.powf(k as f64 / 4.0)).round() as usize).collect(),
        trials_per_cell: 50,
        basis: BasisKind::Dct,
        root_seed: 4,
        ..Default::default()
    };
    let report = run_phase_transition(&cfg).unwrap();
    let reference = 4.0 * cfg.log_ratio();
    let m_star = report.threshold_m(4, 0.9).expect("threshold reached") as f64;
    assert!(m_star >= reference / 4.0 && m_star <= reference * 4.0, "m* = {m_star}");
    assert!(report.monotone_within(4, 2.0));
}
