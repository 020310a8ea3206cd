use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::trial::{run_trial, trial_seed, Cell, TrialResult};
use crate::error::Result;
use crate::stats::Frequency;

/// Per-cell aggregate; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    #[serde(rename = "S")]
    pub sparsity: usize,
    pub m: usize,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub cert_rate: f64,
    pub mean_iterations: f64,
    pub gate_m: f64,
    pub root_seed: u64,
}

impl CellSummary {
    pub fn success(&self) -> Frequency {
        Frequency {
            trials: self.trials,
            hits: self.successes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
    /// `c0_prime · log³(n/δ)`, recorded without conclusion.
    pub cubic_gate: f64,
}

pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    config
        .sparsity_grid
        .iter()
        .flat_map(|&sparsity| config.m_grid.iter().map(move |&m| Cell { sparsity, m }))
        .collect()
}

/// Every trial of every cell, cell-major in grid order.
pub fn run_phase_trials(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let grid = cells(config);
    let t = config.trials_per_cell;
    Ok((0..grid.len() as u64 * t)
        .into_par_iter()
        .map(|k| {
            let trial = k % t;
            run_trial(config, grid[(k / t) as usize], trial, trial_seed(config.root_seed, trial))
        })
        .collect())
}

pub fn summarize(config: &ExperimentConfig, trials: &[TrialResult]) -> PhaseReport {
    let cells = cells(config)
        .into_iter()
        .map(|cell| {
            let rs: Vec<&TrialResult> = trials.iter().filter(|r| r.cell == cell).collect();
            let n = rs.len() as u64;
            let successes = rs.iter().filter(|r| r.recovered).count() as u64;
            let certified = rs.iter().filter(|r| r.certified).count() as u64;
            let iters: usize = rs.iter().map(|r| r.iterations).sum();
            CellSummary {
                sparsity: cell.sparsity,
                m: cell.m,
                trials: n,
                successes,
                success_rate: successes as f64 / n as f64,
                cert_rate: certified as f64 / n as f64,
                mean_iterations: iters as f64 / n as f64,
                gate_m: config.gate_m(cell.sparsity),
                root_seed: config.root_seed,
            }
        })
        .collect();
    PhaseReport {
        config: config.clone(),
        cells,
        cubic_gate: config.cubic_gate(),
    }
}

pub fn run_phase_transition(config: &ExperimentConfig) -> Result<PhaseReport> {
    let trials = run_phase_trials(config)?;
    Ok(summarize(config, &trials))
}

impl PhaseReport {
    /// Cells with sparsity `s`, in increasing `m`.
    pub fn row(&self, s: usize) -> Vec<&CellSummary> {
        let mut row: Vec<&CellSummary> = self.cells.iter().filter(|c| c.sparsity == s).collect();
        row.sort_by_key(|c| c.m);
        row
    }

    /// Smallest grid `m` whose success rate reaches `level`.
    pub fn threshold_m(&self, s: usize, level: f64) -> Option<usize> {
        self.row(s).into_iter().find(|c| c.success_rate >= level).map(|c| c.m)
    }

    /// No drop in success rate between consecutive `m` larger than `k`
    /// standard errors of the difference.
    pub fn monotone_within(&self, s: usize, k: f64) -> bool {
        self.row(s).windows(2).all(|w| {
            let (a, b) = (w[0].success(), w[1].success());
            let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
            b.rate() >= a.rate() - k * se
        })
    }

    /// Empirical `C0`: the largest `m*(S) / (S log(n/δ))` over the grid, or
    /// `None` if some `S` never reaches `level`.
    pub fn calibrated_c0(&self, level: f64) -> Option<f64> {
        let lr = self.config.log_ratio();
        self.config
            .sparsity_grid
            .iter()
            .map(|&s| self.threshold_m(s, level).map(|m| m as f64 / (s as f64 * lr)))
            .try_fold(0.0f64, |acc, c| c.map(|c| acc.max(c)))
    }
}
