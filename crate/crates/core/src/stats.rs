//! Small Monte Carlo accumulators.

use serde::{Deserialize, Serialize};

/// Running sum and sum of squares of a scalar sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean(),
            std_error: self.std_error(),
        }
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }

    /// Deviation from `target` in units of standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// Empirical frequency of an event with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub trials: u64,
    pub hits: u64,
}

impl Frequency {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.hits as f64 / self.trials as f64
    }

    /// Standard error of the rate estimate, using `p` as the reference probability.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn std_error(&self) -> f64 {
        self.std_error_at(self.rate())
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    ols_slope(&lx, &ly)
}


/// Square grid of estimates, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateGrid {
    pub size: usize,
    pub cells: Vec<Estimate>,
}

impl EstimateGrid {
    pub fn from_accumulators(size: usize, accs: &[MeanAccumulator]) -> Self {
        assert_eq!(accs.len(), size * size);
        Self {
            size,
            cells: accs.iter().map(MeanAccumulator::estimate).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Estimate {
        self.cells[i * self.size + j]
    }
}

pub(crate) fn merge_all(a: &mut [MeanAccumulator], b: &[MeanAccumulator]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = x.merge(y);
    }
}

const BLOCK: u64 = 256;

/// Runs `step` for every trial index in `0..trials`, in fixed-size blocks that
/// may execute on any thread, and merges the block accumulators in block
/// order so the result does not depend on scheduling.
pub(crate) fn monte_carlo<A, I, S, M>(trials: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) + Sync,
    M: Fn(A, A) -> A,
{
    use rayon::prelude::*;
    let blocks = trials.div_ceil(BLOCK);
    let parts: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                step(&mut acc, t);
            }
            acc
        })
        .collect();
    parts.into_iter().fold(init(), merge)
}
