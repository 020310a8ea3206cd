//! The random-convolution branch `H = n^{-1/2} F* Σ F`, the stacked
//! `[H; √n I]` operator and row subsampling.

mod mask;
mod moments;

pub use mask::{MaskModel, SamplingMask};
pub use moments::{
    composite_gram, entry_correlation_check, gram_expectation_check, CorrelationReport,
    FrequencyEstimate, GramReport, GRAM_CHECK_MAX_N, MIN_CORRELATION_TRIALS, MIN_GRAM_TRIALS,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, CsError, Result};
use crate::filter::RandomFilter;
use crate::linop::{LinearMap, DENSE_LIMIT};
use crate::spectral::{dft_inverse, CirculantKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchMode {
    /// Rows of `H` only (`n` rows).
    ConvolutionOnly,
    /// `H` stacked over `√n I` (`2n` rows, convolution rows first).
    DualBranch,
}

impl BranchMode {
    pub fn total_rows(self, n: usize) -> usize {
        match self {
            Self::ConvolutionOnly => n,
            Self::DualBranch => 2 * n,
        }
    }
}

/// `R_Ω H_c`: the masked measurement stack, applied matrix-free.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    filter: RandomFilter,
    branch_mode: BranchMode,
    mask: SamplingMask,
    kernel: CirculantKernel,
    sqrt_n: f64,
}

pub fn build_operator(
    filter: RandomFilter,
    branch_mode: BranchMode,
    mask: SamplingMask,
) -> Result<MeasurementOperator> {
    MeasurementOperator::new(filter, branch_mode, mask)
}

impl MeasurementOperator {
    pub fn new(filter: RandomFilter, branch_mode: BranchMode, mask: SamplingMask) -> Result<Self> {
        let n = filter.n();
        let rows = branch_mode.total_rows(n);
        if mask.total_rows() != rows {
            return Err(CsError::Config(format!(
                "mask spans {} rows but {branch_mode:?} at n = {n} has {rows}",
                mask.total_rows()
            )));
        }
        let sqrt_n = (n as f64).sqrt();
        // First column of n^{-1/2} F* Σ F is n^{-1/2} F* σ̃ = √n · (1/n) F* σ̃.
        let first_col = dft_inverse(filter.spectrum())?.to_real()?;
        let first_row: Vec<f64> = (0..n).map(|j| sqrt_n * first_col[(n - j) % n]).collect();
        let kernel = CirculantKernel::new(first_row)?;
        Ok(Self {
            filter,
            branch_mode,
            mask,
            kernel,
            sqrt_n,
        })
    }

    pub fn n(&self) -> usize {
        self.filter.n()
    }

    pub fn filter(&self) -> &RandomFilter {
        &self.filter
    }

    pub fn branch_mode(&self) -> BranchMode {
        self.branch_mode
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    /// Circulant kernel of `H`; its first row holds `a_1..a_n`.
    pub fn kernel(&self) -> &CirculantKernel {
        &self.kernel
    }

    /// Realized number of measurements `|Ω|`.
    pub fn m(&self) -> usize {
        self.mask.len()
    }

    /// Same filter and branch mode with a different mask.
    pub fn with_mask(&self, mask: SamplingMask) -> Result<Self> {
        if mask.total_rows() != self.branch_mode.total_rows(self.n()) {
            return Err(CsError::Config("mask does not match the branch mode".into()));
        }
        Ok(Self {
            mask,
            ..self.clone()
        })
    }

    /// All rows of `H_c x` before subsampling.
    pub fn apply_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x.len(), self.n(), "signal")?;
        let mut out = self.kernel.apply(x)?;
        if self.branch_mode == BranchMode::DualBranch {
            out.extend(x.iter().map(|v| self.sqrt_n * v));
        }
        Ok(out)
    }

    pub fn apply_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let full = self.apply_full(x)?;
        Ok(self.mask.kept().iter().map(|&k| full[k]).collect())
    }

    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(y.len(), self.m(), "measurement vector")?;
        let n = self.n();
        let mut full = vec![0.0; self.branch_mode.total_rows(n)];
        for (&k, &v) in self.mask.kept().iter().zip(y) {
            full[k] = v;
        }
        let mut out = self.kernel.apply_transpose(&full[..n])?;
        if self.branch_mode == BranchMode::DualBranch {
            for (o, v) in out.iter_mut().zip(&full[n..]) {
                *o += self.sqrt_n * v;
            }
        }
        Ok(out)
    }

    /// Dense `|Ω| × n` matrix of the masked operator, assembled from the
    /// circulant's first row and the identity rows.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let h = self.convolution_dense()?;
        let n = self.n();
        let kept = self.mask.kept();
        Ok(DMatrix::from_fn(kept.len(), n, |r, j| {
            let i = kept[r];
            if i < n {
                h[(i, j)]
            } else if i - n == j {
                self.sqrt_n
            } else {
                0.0
            }
        }))
    }

    /// Dense `n × n` convolution branch `H`, unmasked.
    pub fn convolution_dense(&self) -> Result<DMatrix<f64>> {
        if self.n() > DENSE_LIMIT {
            return Err(CsError::ResourceLimit(format!(
                "dense path limited to n <= {DENSE_LIMIT}, got {}",
                self.n()
            )));
        }
        Ok(self.kernel.to_dense())
    }
}

impl LinearMap for MeasurementOperator {
    fn rows(&self) -> usize {
        self.m()
    }

    fn cols(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_forward(x)
    }

    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        MeasurementOperator::apply_adjoint(self, y)
    }

    fn to_dense(&self) -> Result<DMatrix<f64>> {
        MeasurementOperator::to_dense(self)
    }
}
