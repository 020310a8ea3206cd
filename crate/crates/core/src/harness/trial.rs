use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::filter::sample_filter;
use crate::linop::{norm2, LinearMap};
use crate::measurement::MeasurementOperator;
use crate::recovery::{
    build_basis, dual_certificate, sample_sparse_signal, solve_bp, Basis, CertificateReport, RecoveryResult,
    SensingMap, SparseSignal,
};
use crate::seed::{self, TAG_FILTER, TAG_MASK, TAG_SIGNAL};

/// Relative coefficient error allowed for a trial to count as recovered.
pub const RECOVERY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "S")]
    pub sparsity: usize,
    pub m: usize,
}

/// One sampled problem: operator, basis, ground truth and its measurements.
pub struct Instance {
    pub op: MeasurementOperator,
    pub basis: Basis,
    pub signal: SparseSignal,
    pub measurements: Vec<f64>,
}

impl Instance {
    pub fn sample(config: &ExperimentConfig, cell: Cell, trial_seed: u64) -> Result<Self> {
        let filter = sample_filter(config.n, config.distribution(), seed::derive(trial_seed, TAG_FILTER))?;
        let mask = config.sample_mask(cell.m, seed::derive(trial_seed, TAG_MASK))?;
        let op = MeasurementOperator::new(filter, config.branch_mode, mask)?;
        let basis = build_basis(config.basis, config.n)?;
        let signal = sample_sparse_signal(
            &basis,
            cell.sparsity,
            config.magnitude_law,
            seed::derive(trial_seed, TAG_SIGNAL),
        )?;
        let measurements = op.apply_forward(&signal.signal)?;
        Ok(Self {
            op,
            basis,
            signal,
            measurements,
        })
    }

    pub fn sensing_map(&self) -> Result<SensingMap<'_>> {
        SensingMap::new(&self.op, &self.basis)
    }

    /// `R_Ω H_c Ψ` as an explicit matrix.
    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        Ok(self.op.to_dense()? * self.basis.to_dense()?)
    }

    pub fn solve(&self, config: &ExperimentConfig) -> Result<RecoveryResult> {
        let truth = Some(self.signal.coefficients.as_slice());
        if config.dense_path {
            let a = self.dense_matrix()?;
            solve_bp(&a as &dyn LinearMap, &self.measurements, &config.solver, truth)
        } else {
            solve_bp(&self.sensing_map()?, &self.measurements, &config.solver, truth)
        }
    }

    pub fn certificate(&self, alpha: f64) -> Result<CertificateReport> {
        dual_certificate(&self.op, &self.basis, &self.signal, alpha)
    }

    /// `‖α# - α0‖₂ / ‖α0‖₂`.
    pub fn coefficient_error(&self, solution: &[f64]) -> f64 {
        let truth = &self.signal.coefficients;
        let diff: Vec<f64> = solution.iter().zip(truth).map(|(a, b)| a - b).collect();
        norm2(&diff) / norm2(truth)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub cell: Cell,
    pub trial: u64,
    pub seed: u64,
    pub realized_m: usize,
    pub recovered: bool,
    pub certified: bool,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub coefficient_error: f64,
    pub error: Option<String>,
    /// Seconds; not covered by determinism.
    pub wall_time: f64,
}

impl TrialResult {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
    }
}

/// Samples, measures, solves and certifies one instance. Failures of any
/// stage are recorded in the result rather than returned.
pub fn run_trial(config: &ExperimentConfig, cell: Cell, trial: u64, trial_seed: u64) -> TrialResult {
    let start = Instant::now();
    let mut result = TrialResult {
        cell,
        trial,
        seed: trial_seed,
        realized_m: 0,
        recovered: false,
        certified: false,
        converged: false,
        iterations: 0,
        residual_norm: f64::NAN,
        coefficient_error: f64::NAN,
        error: None,
        wall_time: 0.0,
    };
    if let Err(e) = fill_trial(config, &mut result) {
        result.error = Some(e.to_string());
    }
    result.wall_time = start.elapsed().as_secs_f64();
    result
}

fn fill_trial(config: &ExperimentConfig, r: &mut TrialResult) -> Result<()> {
    let inst = Instance::sample(config, r.cell, r.seed)?;
    r.realized_m = inst.op.m();
    let sol = inst.solve(config)?;
    r.converged = sol.converged;
    r.iterations = sol.iterations;
    r.residual_norm = sol.residual_norm;
    r.coefficient_error = inst.coefficient_error(&sol.solution);
    r.recovered = sol.converged && sol.support_exact == Some(true) && r.coefficient_error <= RECOVERY_TOLERANCE;
    r.certified = inst.certificate(config.alpha_threshold)?.certified;
    Ok(())
}

/// Seed of trial `t`. It depends only on the root and `t`, so every cell
/// shares the filter, mask permutation and support ordering of trial `t`.
pub fn trial_seed(root: u64, trial: u64) -> u64 {
    seed::derive(root, trial)
}
