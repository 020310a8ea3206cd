use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsError, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskModel {
    /// Each row kept independently with probability `target_m / total_rows`.
    Bernoulli,
    /// Exactly `target_m` rows, uniformly among all subsets of that size.
    UniformSet,
}

/// Retained row indices `Ω` of a measurement stack.
///
/// For a fixed seed the draws are nested in `target_m`: the uniform-set model
/// keeps a prefix of one random permutation and the Bernoulli model compares
/// one uniform variate per row against the keep probability, so growing
/// `target_m` only ever adds rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingMask {
    model: MaskModel,
    total_rows: usize,
    kept: Vec<usize>,
    target_m: usize,
    seed: u64,
    /// Per-branch targets `[convolution rows, identity rows]` when the split is fixed.
    quota: Option<[usize; 2]>,
}

impl SamplingMask {
    pub fn full(total_rows: usize) -> Self {
        Self {
            model: MaskModel::UniformSet,
            total_rows,
            kept: (0..total_rows).collect(),
            target_m: total_rows,
            seed: 0,
            quota: None,
        }
    }

    pub fn from_indices(total_rows: usize, kept: Vec<usize>) -> Result<Self> {
        if kept.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CsError::Config("mask indices must be strictly increasing".into()));
        }
        if kept.last().is_some_and(|&k| k >= total_rows) {
            return Err(CsError::Config(format!(
                "mask index out of range for {total_rows} rows"
            )));
        }
        Ok(Self {
            model: MaskModel::UniformSet,
            total_rows,
            target_m: kept.len(),
            kept,
            seed: 0,
            quota: None,
        })
    }

    pub fn sample(model: MaskModel, total_rows: usize, target_m: usize, seed: u64) -> Result<Self> {
        if target_m > total_rows {
            return Err(CsError::Config(format!(
                "cannot keep {target_m} of {total_rows} rows"
            )));
        }
        let kept = draw_rows(model, 0, total_rows, target_m, seed);
        Ok(Self {
            model,
            total_rows,
            kept,
            target_m,
            seed,
            quota: None,
        })
    }

    /// Mask over a `2n`-row stack with separate targets for the convolution
    /// rows `0..n` and the identity rows `n..2n`.
    pub fn sample_with_quota(model: MaskModel, n: usize, quota: [usize; 2], seed: u64) -> Result<Self> {
        if quota.iter().any(|&q| q > n) {
            return Err(CsError::Config(format!(
                "branch quota {quota:?} exceeds {n} rows per branch"
            )));
        }
        let mut kept = draw_rows(model, 0, n, quota[0], seed::derive(seed, 0));
        kept.extend(draw_rows(model, n, n, quota[1], seed::derive(seed, 1)));
        Ok(Self {
            model,
            total_rows: 2 * n,
            kept,
            target_m: quota[0] + quota[1],
            seed,
            quota: Some(quota),
        })
    }

    pub fn model(&self) -> MaskModel {
        self.model
    }

    pub fn total_rows(&self) -> usize {
        self.total_rows
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Realized `|Ω|`; differs from `target_m` under the Bernoulli model.
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn target_m(&self) -> usize {
        self.target_m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn quota(&self) -> Option<[usize; 2]> {
        self.quota
    }
}

fn draw_rows(model: MaskModel, offset: usize, rows: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    match model {
        MaskModel::UniformSet => {
            let mut perm: Vec<usize> = (0..rows).collect();
            perm.shuffle(&mut rng);
            let mut kept: Vec<usize> = perm[..m].iter().map(|i| i + offset).collect();
            kept.sort_unstable();
            kept
        }
        MaskModel::Bernoulli => {
            let p = if rows == 0 { 0.0 } else { m as f64 / rows as f64 };
            (0..rows)
                .filter(|_| rng.gen::<f64>() < p)
                .map(|i| i + offset)
                .collect()
        }
    }
}
