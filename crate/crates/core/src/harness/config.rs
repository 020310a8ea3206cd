use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::CoherenceMode;
use crate::error::{check_pow2, CsError, Result};
use crate::filter::{FilterDistribution, FilterKind};
use crate::measurement::{BranchMode, MaskModel, SamplingMask};
use crate::recovery::{BasisKind, BpSettings, MagnitudeLaw};

/// Experiment description. Every field has a default, so a config file only
/// needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub sparsity_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub trials_per_cell: u64,
    pub basis: BasisKind,
    pub filter_distribution: FilterKind,
    /// Tap scale; `1/√n` when absent.
    pub filter_scale: Option<f64>,
    pub branch_mode: BranchMode,
    pub mask_model: MaskModel,
    /// Dual branch only: fraction of each `m` drawn from the convolution
    /// rows, the rest from the identity rows. Absent means `Ω` is drawn over
    /// the whole stack.
    pub convolution_share: Option<f64>,
    pub magnitude_law: MagnitudeLaw,
    pub delta: f64,
    pub alpha_threshold: f64,
    /// Gate `m >= c0 · S · log(n/δ)`.
    pub c0: f64,
    /// Gates `m >= c0_prime · log³(n/δ)` and `m >= c0_prime · μ² · log²(n/δ)`.
    pub c0_prime: f64,
    /// Row-norm regime `S >= row_norm_c · log(n/δ)`.
    pub row_norm_c: f64,
    pub coherence_mode: CoherenceMode,
    pub root_seed: u64,
    pub solver: BpSettings,
    /// Solve against an explicit dense matrix instead of the fast operator.
    pub dense_path: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 64,
            sparsity_grid: vec![2],
            m_grid: vec![32],
            trials_per_cell: 20,
            basis: BasisKind::Identity,
            filter_distribution: FilterKind::Gaussian,
            filter_scale: None,
            branch_mode: BranchMode::DualBranch,
            mask_model: MaskModel::UniformSet,
            convolution_share: None,
            magnitude_law: MagnitudeLaw::Unit,
            delta: 0.1,
            alpha_threshold: 0.5,
            c0: 1.0,
            c0_prime: 1.0,
            row_norm_c: 2.0,
            coherence_mode: CoherenceMode::ConvolutionOnly,
            root_seed: 0,
            solver: BpSettings::default(),
            dense_path: false,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn total_rows(&self) -> usize {
        self.branch_mode.total_rows(self.n)
    }

    pub fn distribution(&self) -> FilterDistribution {
        match self.filter_scale {
            Some(scale) => FilterDistribution {
                kind: self.filter_distribution,
                scale,
            },
            None => FilterDistribution::standard(self.filter_distribution, self.n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CsError::Config(msg));
        check_pow2(self.n, "n").map_err(|e| CsError::Config(e.to_string()))?;
        if self.sparsity_grid.is_empty() || self.m_grid.is_empty() {
            return bad("sparsity_grid and m_grid must be nonempty".into());
        }
        if let Some(&s) = self.sparsity_grid.iter().find(|&&s| s == 0 || s > self.n) {
            return bad(format!("sparsity {s} outside 1..={}", self.n));
        }
        let rows = self.total_rows();
        if let Some(&m) = self.m_grid.iter().find(|&&m| m == 0 || m > rows) {
            return bad(format!("m = {m} outside 1..={rows}"));
        }
        if self.trials_per_cell == 0 {
            return bad("trials_per_cell must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.alpha_threshold > 0.0 && self.alpha_threshold <= 1.0) {
            return bad(format!("alpha_threshold must lie in (0, 1], got {}", self.alpha_threshold));
        }
        if !(self.c0 >= 0.0 && self.c0_prime >= 0.0 && self.row_norm_c >= 0.0) {
            return bad("gate constants must be nonnegative".into());
        }
        if let Some(share) = self.convolution_share {
            if self.branch_mode != BranchMode::DualBranch || !(0.0..=1.0).contains(&share) {
                return bad("convolution_share needs the dual branch and a value in [0, 1]".into());
            }
            if let Some(&m) = self.m_grid.iter().find(|&&m| self.quota(m).iter().any(|&q| q > self.n)) {
                return bad(format!("m = {m} cannot be split as {:?} over {} rows per branch", self.quota(m), self.n));
            }
        }
        let s = &self.solver;
        if !(s.feasibility_tol > 0.0 && s.gap_tol > 0.0) || s.max_iterations == 0 {
            return bad("solver tolerances must be positive and max_iterations at least 1".into());
        }
        self.distribution().validate().map_err(|e| CsError::Config(e.to_string()))
    }

    /// Per-branch split of `m` under `convolution_share`.
    pub fn quota(&self, m: usize) -> [usize; 2] {
        let conv = (self.convolution_share.unwrap_or(0.5) * m as f64).round() as usize;
        [conv, m - conv]
    }

    pub fn sample_mask(&self, m: usize, seed: u64) -> Result<SamplingMask> {
        match self.convolution_share {
            Some(_) => SamplingMask::sample_with_quota(self.mask_model, self.n, self.quota(m), seed),
            None => SamplingMask::sample(self.mask_model, self.total_rows(), m, seed),
        }
    }

    /// `log(n/δ)`.
    pub fn log_ratio(&self) -> f64 {
        (self.n as f64 / self.delta).ln()
    }

    /// `c0 · S · log(n/δ)`.
    pub fn gate_m(&self, sparsity: usize) -> f64 {
        self.c0 * sparsity as f64 * self.log_ratio()
    }

    /// `c0_prime · log³(n/δ)`, logged only.
    pub fn cubic_gate(&self) -> f64 {
        self.c0_prime * self.log_ratio().powi(3)
    }

    /// `c0_prime · μ² · log²(n/δ)`, logged only.
    pub fn coherence_gate(&self, mu: f64) -> f64 {
        self.c0_prime * mu * mu * self.log_ratio().powi(2)
    }
}
