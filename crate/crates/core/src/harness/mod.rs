//! Experiment engine: configuration, single trials, phase-transition sweeps,
//! diagnostic batches and report emission.

mod config;
mod phase;
mod report;
mod trial;

pub use config::ExperimentConfig;
pub use phase::{cells, run_phase_transition, run_phase_trials, summarize, CellSummary, PhaseReport};
pub use report::{emit_report, read_json_report, write_report, FilterDump, ReportFormat};
pub use trial::{run_trial, trial_seed, Cell, Instance, TrialResult, RECOVERY_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    coherence_sweep, conditioning_sweep, row_norm_regime, row_norm_sweep, ConditioningSetup, ConditioningTrend,
    ViolationSummary,
};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub coherence: ViolationSummary,
    pub row_norm: ViolationSummary,
    /// Whether `S >= row_norm_c · log(n/δ)` for the row-norm sparsity.
    pub row_norm_regime: bool,
    pub conditioning: ConditioningTrend,
}

/// Coherence, row-norm and conditioning batches with `trials_per_cell`
/// seeds each, at the first sparsity of the grid and every `m` of the grid.
pub fn run_diagnostics(config: &ExperimentConfig) -> Result<DiagnosticsReport> {
    config.validate()?;
    let s = config.sparsity_grid[0];
    let dist = config.distribution();
    let root = config.root_seed;
    let t = config.trials_per_cell;
    Ok(DiagnosticsReport {
        coherence: coherence_sweep(config.n, config.basis, dist, config.delta, config.coherence_mode, t, root)?,
        row_norm: row_norm_sweep(config.n, s, config.basis, dist, config.delta, t, root)?,
        row_norm_regime: row_norm_regime(config.n, s, config.delta, config.row_norm_c),
        conditioning: conditioning_sweep(
            &ConditioningSetup {
                n: config.n,
                sparsity: s,
                basis: config.basis,
                distribution: dist,
                branch_mode: config.branch_mode,
                mask_model: config.mask_model,
            },
            &config.m_grid,
            t,
            root,
        )?,
    })
}
