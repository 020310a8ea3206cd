//! Monte Carlo checks of second-order structure: the averaged Gram matrix of
//! the stacked operator and the correlations of the circulant entries.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BranchMode, MeasurementOperator, SamplingMask};
use crate::error::{check_pow2, CsError, Result};
use crate::filter::{sample_filter, FilterDistribution, SpectrumMoments};
use crate::seed;
use crate::stats::{merge_all, monte_carlo, Estimate, EstimateGrid, MeanAccumulator};

pub const MIN_GRAM_TRIALS: u64 = 1000;
pub const GRAM_CHECK_MAX_N: usize = 64;
pub const MIN_CORRELATION_TRIALS: u64 = 10_000;

/// `H_c* H_c` of the unmasked dual-branch stack.
pub fn composite_gram(op: &MeasurementOperator) -> Result<DMatrix<f64>> {
    let h = op.convolution_dense()?;
    let n = op.n();
    Ok(h.tr_mul(&h) + DMatrix::identity(n, n) * n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub bin: usize,
    pub special: bool,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub n: usize,
    pub trials: u64,
    /// Claimed value of every diagonal entry of `E(H_c* H_c)`.
    pub claimed_diagonal: f64,
    pub composite: EstimateGrid,
    pub convolution: EstimateGrid,
    /// `H* (√n I)`, claimed to vanish in expectation.
    pub cross_term: EstimateGrid,
    /// Diagonal of `(1/n) F (H_c* H_c) F*`, one entry per 0-based frequency bin.
    pub spectral_diagonal: Vec<FrequencyEstimate>,
    pub max_diag_deviation: f64,
    pub max_offdiag_magnitude: f64,
    /// Largest |z| of a diagonal entry against `claimed_diagonal`.
    pub max_diag_z: f64,
    pub max_offdiag_z: f64,
    /// Set when some diagonal entry sits more than 3 standard errors from the claim.
    pub discrepancy: bool,
}

impl GramReport {
    fn diag(g: &EstimateGrid) -> impl Iterator<Item = Estimate> + '_ {
        (0..g.size).map(move |i| g.get(i, i))
    }

    fn offdiag(g: &EstimateGrid) -> impl Iterator<Item = Estimate> + '_ {
        (0..g.size).flat_map(move |i| (0..g.size).filter(move |&j| j != i).map(move |j| g.get(i, j)))
    }

    pub fn diagonal_within(&self, target: f64, k: f64) -> bool {
        Self::diag(&self.composite).all(|e| e.within(target, k))
    }

    pub fn offdiagonal_within(&self, k: f64) -> bool {
        Self::offdiag(&self.composite).all(|e| e.within(0.0, k))
    }

    pub fn cross_term_within(&self, k: f64) -> bool {
        self.cross_term.cells.iter().all(|e| e.within(0.0, k))
    }

    pub fn composite_diagonal(&self) -> Vec<Estimate> {
        Self::diag(&self.composite).collect()
    }
}

struct GramAcc {
    composite: Vec<MeanAccumulator>,
    convolution: Vec<MeanAccumulator>,
    cross: Vec<MeanAccumulator>,
    spectral: Vec<MeanAccumulator>,
}

impl GramAcc {
    fn new(n: usize) -> Self {
        Self {
            composite: vec![MeanAccumulator::default(); n * n],
            convolution: vec![MeanAccumulator::default(); n * n],
            cross: vec![MeanAccumulator::default(); n * n],
            spectral: vec![MeanAccumulator::default(); n],
        }
    }

    fn merge(mut self, o: Self) -> Self {
        merge_all(&mut self.composite, &o.composite);
        merge_all(&mut self.convolution, &o.convolution);
        merge_all(&mut self.cross, &o.cross);
        merge_all(&mut self.spectral, &o.spectral);
        self
    }
}

fn fourier_matrix(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |w, t| {
        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((w * t) % n) as f64 / n as f64)
    })
}

/// Monte Carlo average of `H_c* H_c` over independent filters.
pub fn gram_expectation_check(
    dist: FilterDistribution,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<GramReport> {
    if trials < MIN_GRAM_TRIALS {
        return Err(CsError::Config(format!(
            "gram check needs at least {MIN_GRAM_TRIALS} trials, got {trials}"
        )));
    }
    check_pow2(n, "filter")?;
    if n > GRAM_CHECK_MAX_N {
        return Err(CsError::ResourceLimit(format!(
            "gram check forms dense Gram matrices; n = {n} exceeds {GRAM_CHECK_MAX_N}"
        )));
    }
    dist.validate()?;
    let fm = fourier_matrix(n);
    let sqrt_n = (n as f64).sqrt();

    let acc = monte_carlo(
        trials,
        || GramAcc::new(n),
        |acc, t| {
            let filter = sample_filter(n, dist, seed::derive(seed, t)).expect("validated");
            let op = MeasurementOperator::new(filter, BranchMode::DualBranch, SamplingMask::full(2 * n))
                .expect("row counts agree");
            let h = op.convolution_dense().expect("n is small");
            let hh = h.tr_mul(&h);
            let gram = &hh + DMatrix::identity(n, n) * n as f64;
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    acc.composite[k].push(gram[(i, j)]);
                    acc.convolution[k].push(hh[(i, j)]);
                    acc.cross[k].push(sqrt_n * h[(j, i)]);
                }
            }
            let gc = gram.map(|v| Complex64::new(v, 0.0));
            let spec = &fm * gc * fm.adjoint();
            for w in 0..n {
                acc.spectral[w].push(spec[(w, w)].re / n as f64);
            }
        },
        GramAcc::merge,
    );

    let composite = EstimateGrid::from_accumulators(n, &acc.composite);
    let claimed = n as f64;
    let mut max_diag_deviation = 0.0f64;
    let mut max_diag_z = 0.0f64;
    let mut max_offdiag_magnitude = 0.0f64;
    let mut max_offdiag_z = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let e = composite.get(i, j);
            if i == j {
                max_diag_deviation = max_diag_deviation.max((e.mean - claimed).abs());
                max_diag_z = max_diag_z.max(e.z_score(claimed).abs());
            } else {
                max_offdiag_magnitude = max_offdiag_magnitude.max(e.mean.abs());
                max_offdiag_z = max_offdiag_z.max(e.z_score(0.0).abs());
            }
        }
    }

    Ok(GramReport {
        n,
        trials,
        claimed_diagonal: claimed,
        convolution: EstimateGrid::from_accumulators(n, &acc.convolution),
        cross_term: EstimateGrid::from_accumulators(n, &acc.cross),
        spectral_diagonal: acc
            .spectral
            .iter()
            .enumerate()
            .map(|(bin, a)| FrequencyEstimate {
                bin,
                special: SpectrumMoments::is_special(n, bin),
                estimate: a.estimate(),
            })
            .collect(),
        composite,
        max_diag_deviation,
        max_offdiag_magnitude,
        max_diag_z,
        max_offdiag_z,
        discrepancy: max_diag_z > 3.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub trials: u64,
    /// `E{a_j a_j'}` for every ordered pair of first-row indices.
    pub pairwise: EstimateGrid,
    /// `E{a_j a_(j+g mod n)}` pooled over `j`, indexed by gap `g`.
    pub by_gap: Vec<Estimate>,
    /// Claimed diagonal value `1 - 1/n`.
    pub claimed_diagonal: f64,
    /// Claimed off-diagonal envelope `1/n`.
    pub envelope: f64,
}

impl CorrelationReport {
    pub fn diagonal(&self) -> Estimate {
        self.by_gap[0]
    }

    pub fn diagonal_within(&self, target: f64, k: f64) -> bool {
        self.diagonal().within(target, k)
    }

    /// Every off-diagonal gap satisfies `|mean| <= envelope + k·se`.
    pub fn offdiagonal_within_envelope(&self, k: f64) -> bool {
        self.by_gap[1..]
            .iter()
            .all(|e| e.mean.abs() <= self.envelope + k * e.std_error)
    }

    pub fn max_offdiagonal(&self) -> f64 {
        self.by_gap[1..].iter().fold(0.0, |m, e| m.max(e.mean.abs()))
    }
}

struct CorrAcc {
    pairwise: Vec<MeanAccumulator>,
    by_gap: Vec<MeanAccumulator>,
}

/// Monte Carlo second moments of the circulant first row `a_1..a_n`.
pub fn entry_correlation_check(
    dist: FilterDistribution,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<CorrelationReport> {
    if trials < MIN_CORRELATION_TRIALS {
        return Err(CsError::Config(format!(
            "entry correlation check needs at least {MIN_CORRELATION_TRIALS} trials, got {trials}"
        )));
    }
    check_pow2(n, "filter")?;
    dist.validate()?;

    let acc = monte_carlo(
        trials,
        || CorrAcc {
            pairwise: vec![MeanAccumulator::default(); n * n],
            by_gap: vec![MeanAccumulator::default(); n],
        },
        |acc, t| {
            let filter = sample_filter(n, dist, seed::derive(seed, t)).expect("validated");
            let op = MeasurementOperator::new(filter, BranchMode::ConvolutionOnly, SamplingMask::full(n))
                .expect("row counts agree");
            let a = op.kernel().first_row();
            let mut gap_sums = vec![0.0; n];
            for j in 0..n {
                for jp in 0..n {
                    let p = a[j] * a[jp];
                    acc.pairwise[j * n + jp].push(p);
                    gap_sums[(jp + n - j) % n] += p;
                }
            }
            for (g, s) in gap_sums.iter().enumerate() {
                acc.by_gap[g].push(s / n as f64);
            }
        },
        |mut a, b| {
            merge_all(&mut a.pairwise, &b.pairwise);
            merge_all(&mut a.by_gap, &b.by_gap);
            a
        },
    );

    Ok(CorrelationReport {
        n,
        trials,
        pairwise: EstimateGrid::from_accumulators(n, &acc.pairwise),
        by_gap: acc.by_gap.iter().map(MeanAccumulator::estimate).collect(),
        claimed_diagonal: 1.0 - 1.0 / n as f64,
        envelope: 1.0 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{FilterKind, RandomFilter};

    fn gaussian(n: usize) -> FilterDistribution {
        FilterDistribution::standard(FilterKind::Gaussian, n)
    }

    #[test]
    fn impulse_filter_gram_is_two_n_identity() {
        let n = 8;
        let mut taps = vec![0.0; n];
        taps[0] = 1.0;
        let f = RandomFilter::from_taps(taps, gaussian(n), 0).unwrap();
        let op = MeasurementOperator::new(f, BranchMode::DualBranch, SamplingMask::full(2 * n)).unwrap();
        let g = composite_gram(&op).unwrap();
        assert!((g - DMatrix::identity(n, n) * (2 * n) as f64).abs().max() < 1e-12);
    }

    #[test]
    fn guards() {
        assert!(matches!(gram_expectation_check(gaussian(16), 16, 10, 0), Err(CsError::Config(_))));
        assert!(matches!(
            gram_expectation_check(gaussian(128), 128, 1000, 0),
            Err(CsError::ResourceLimit(_))
        ));
        assert!(matches!(entry_correlation_check(gaussian(16), 16, 100, 0), Err(CsError::Config(_))));
    }

    #[test]
    fn gram_average_is_two_n_identity_with_vanishing_cross_term() {
        // E(H*H) = nI and the identity branch adds nI, so the stack averages to 2nI.
        let n = 16;
        let r = gram_expectation_check(gaussian(n), n, 20_000, 31).unwrap();
        assert!(r.diagonal_within(2.0 * n as f64, 3.0), "{:?}", r.composite_diagonal());
        assert!(r.offdiagonal_within(3.0));
        assert!(r.cross_term_within(4.0));
        assert!(r.discrepancy);
        for f in &r.spectral_diagonal {
            assert!(f.estimate.within(2.0 * n as f64, 4.0), "{f:?}");
        }
    }

    #[test]
    fn first_row_second_moment_is_unit() {
        // a_j = √n σ(-j mod n) with Var σ = 1/n, so E a_j² = 1 and distinct entries are uncorrelated.
        let n = 32;
        let r = entry_correlation_check(gaussian(n), n, 20_000, 5).unwrap();
        assert!(r.diagonal_within(1.0, 3.0), "{:?}", r.diagonal());
        assert!(r.offdiagonal_within_envelope(3.0));
    }

    #[test]
    fn first_row_repeats_along_wrapped_diagonals() {
        let n = 16;
        let f = sample_filter(n, gaussian(n), 4).unwrap();
        let op = MeasurementOperator::new(f, BranchMode::ConvolutionOnly, SamplingMask::full(n)).unwrap();
        let h = op.convolution_dense().unwrap();
        let a = op.kernel().first_row();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(h[(i, j)], a[(j + n - i) % n]);
            }
        }
    }
}
