//! Measured coherence, row norms and Gram conditioning, each paired with the
//! bound it is expected to satisfy with high probability.
//!
//! Single checks are deterministic given their inputs. The sweeps report
//! violation frequencies with binomial standard errors; one violating seed
//! says nothing on its own.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{CsError, Result};
use crate::filter::{sample_filter, FilterDistribution};
use crate::linop::LinearMap;
use crate::measurement::{BranchMode, MaskModel, MeasurementOperator, SamplingMask};
use crate::recovery::{build_basis, sample_sparse_signal, Basis, BasisKind, MagnitudeLaw, SensingMap};
use crate::seed::{self, TAG_FILTER, TAG_MASK, TAG_SUPPORT};
use crate::stats::{log_log_slope, monte_carlo, Estimate, Frequency, MeanAccumulator};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckContext {
    pub n: usize,
    pub m: Option<usize>,
    pub sparsity: Option<usize>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub holds: bool,
    pub context: CheckContext,
}

impl BoundCheck {
    pub fn new(name: &str, measured: f64, bound: f64, context: CheckContext) -> Self {
        Self {
            name: name.to_string(),
            measured,
            bound,
            holds: measured <= bound,
            context,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CsError::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `sqrt(2 log(√2 n / (√π δ)))`.
pub fn coherence_bound(n: usize, delta: f64) -> f64 {
    let arg = 2f64.sqrt() * n as f64 / (std::f64::consts::PI.sqrt() * delta);
    (2.0 * arg.ln()).sqrt()
}

/// `√(8S)`.
pub fn row_norm_limit(sparsity: usize) -> f64 {
    (8.0 * sparsity as f64).sqrt()
}

/// Largest magnitude entry of `H Ψ`.
pub fn coherence(h: &DMatrix<f64>, psi: &DMatrix<f64>, delta: f64) -> Result<BoundCheck> {
    check_delta(delta)?;
    if h.ncols() != psi.nrows() {
        return Err(CsError::InvalidDimension(format!(
            "H has {} columns but Ψ has {} rows",
            h.ncols(),
            psi.nrows()
        )));
    }
    let n = psi.nrows();
    let measured = (h * psi).amax();
    Ok(BoundCheck::new(
        "coherence",
        measured,
        coherence_bound(n, delta),
        CheckContext {
            n,
            delta: Some(delta),
            ..Default::default()
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceMode {
    /// `H` alone.
    ConvolutionOnly,
    /// The full stack `[H; √n I]`.
    Composite,
}

/// Coherence of an operator's unmasked rows with a basis.
pub fn operator_coherence(
    op: &MeasurementOperator,
    basis: &Basis,
    delta: f64,
    mode: CoherenceMode,
) -> Result<BoundCheck> {
    let h = op.convolution_dense()?;
    let psi = basis.to_dense()?;
    let mut check = match mode {
        CoherenceMode::ConvolutionOnly => coherence(&h, &psi, delta)?,
        CoherenceMode::Composite => {
            let n = op.n();
            let stacked = DMatrix::from_fn(2 * n, n, |i, j| {
                if i < n {
                    h[(i, j)]
                } else if i - n == j {
                    (n as f64).sqrt()
                } else {
                    0.0
                }
            });
            coherence(&stacked, &psi, delta)?
        }
    };
    check.context.seed = Some(op.filter().seed());
    Ok(check)
}

/// Columns `H ψ_γ` for `γ ∈ Γ`, as an `n × S` matrix.
fn convolved_columns(op: &MeasurementOperator, basis: &Basis, support: &[usize]) -> Result<DMatrix<f64>> {
    let n = op.n();
    let mut cols = DMatrix::zeros(n, support.len());
    for (c, &g) in support.iter().enumerate() {
        let col = op.kernel().apply(&basis.column(g)?)?;
        cols.set_column(c, &DVector::from_vec(col));
    }
    Ok(cols)
}

/// `v(Γ)`: largest row norm of `H Ψ_Γ`.
pub fn row_norm_bound(op: &MeasurementOperator, basis: &Basis, support: &[usize]) -> Result<BoundCheck> {
    if support.is_empty() {
        return Err(CsError::Config("row-norm check needs a nonempty support".into()));
    }
    let cols = convolved_columns(op, basis, support)?;
    let measured = cols.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    Ok(BoundCheck::new(
        "row_norm",
        measured,
        row_norm_limit(support.len()),
        CheckContext {
            n: op.n(),
            sparsity: Some(support.len()),
            seed: Some(op.filter().seed()),
            ..Default::default()
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    /// `‖(1/|Ω|) Φ_Γ* Φ_Γ - I‖` against 1/2.
    pub check: BoundCheck,
    /// `sqrt(log|Γ|) / sqrt(|Ω|) · v(Γ)`, the expectation-side scale without its constant.
    pub expectation_scale: f64,
}

/// Spectral deviation of the normalized restricted Gram matrix from identity.
pub fn gram_conditioning(op: &MeasurementOperator, basis: &Basis, support: &[usize]) -> Result<Conditioning> {
    let s = support.len();
    let m = op.m();
    let context = CheckContext {
        n: op.n(),
        m: Some(m),
        sparsity: Some(s),
        seed: Some(op.filter().seed()),
        ..Default::default()
    };
    if s == 0 {
        return Err(CsError::Config("conditioning check needs a nonempty support".into()));
    }
    if m == 0 {
        let mut check = BoundCheck::new("gram_conditioning", f64::INFINITY, 0.5, context);
        check.holds = false;
        return Ok(Conditioning {
            check,
            expectation_scale: f64::INFINITY,
        });
    }
    let map = SensingMap::new(op, basis)?;
    let mut phi = DMatrix::zeros(m, s);
    for (c, &g) in support.iter().enumerate() {
        phi.set_column(c, &DVector::from_vec(map.column(g)?));
    }
    let dev = phi.tr_mul(&phi) / m as f64 - DMatrix::identity(s, s);
    let measured = SymmetricEigen::new(dev).eigenvalues.amax();
    let v = row_norm_bound(op, basis, support)?.measured;
    Ok(Conditioning {
        check: BoundCheck::new("gram_conditioning", measured, 0.5, context),
        expectation_scale: (s as f64).ln().sqrt() / (m as f64).sqrt() * v,
    })
}

/// Side conditions of the off-support correlation tail bound, logged only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideConditions {
    /// `√m <= v²/μ`.
    pub sqrt_m_below_v2_over_mu: bool,
    /// Largest admissible `a²` under the `√m/μ` reading.
    pub a2_limit: f64,
    /// Largest admissible `a²` under the `4√m/μ` reading.
    pub a2_limit_relaxed: f64,
}

pub fn side_conditions(m: usize, mu: f64, v: f64) -> SideConditions {
    let sm = (m as f64).sqrt();
    SideConditions {
        sqrt_m_below_v2_over_mu: sm <= v * v / mu,
        a2_limit: sm / mu,
        a2_limit_relaxed: 4.0 * sm / mu,
    }
}

/// Violation frequency of a probabilistic bound over seeded trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSummary {
    pub name: String,
    pub n: usize,
    pub delta: f64,
    pub bound: f64,
    pub violations: Frequency,
    pub measured: Estimate,
    /// `δ + 3·sqrt(δ(1-δ)/trials)`.
    pub allowed_rate: f64,
    pub within_allowance: bool,
}

impl ViolationSummary {
    fn new(name: &str, n: usize, delta: f64, bound: f64, violations: Frequency, measured: Estimate) -> Self {
        let allowed_rate = delta + 3.0 * violations.std_error_at(delta);
        Self {
            name: name.to_string(),
            n,
            delta,
            bound,
            measured,
            allowed_rate,
            within_allowance: violations.rate() <= allowed_rate,
            violations,
        }
    }
}

#[derive(Default, Clone)]
struct SweepAcc {
    hits: u64,
    trials: u64,
    measured: MeanAccumulator,
}

impl SweepAcc {
    fn push(&mut self, c: &BoundCheck) {
        self.trials += 1;
        self.hits += u64::from(!c.holds);
        self.measured.push(c.measured);
    }

    fn merge(mut self, o: Self) -> Self {
        self.hits += o.hits;
        self.trials += o.trials;
        self.measured = self.measured.merge(&o.measured);
        self
    }
}

fn trial_filter(n: usize, dist: FilterDistribution, root: u64, t: u64) -> Result<crate::filter::RandomFilter> {
    sample_filter(n, dist, seed::derive_path(root, &[t, TAG_FILTER]))
}

/// Coherence violation rate over `trials` independent filters.
pub fn coherence_sweep(
    n: usize,
    basis_kind: BasisKind,
    dist: FilterDistribution,
    delta: f64,
    mode: CoherenceMode,
    trials: u64,
    root: u64,
) -> Result<ViolationSummary> {
    check_delta(delta)?;
    let basis = build_basis(basis_kind, n)?;
    let psi = basis.to_dense()?;
    dist.validate()?;
    let acc = monte_carlo(
        trials,
        SweepAcc::default,
        |acc, t| {
            let f = trial_filter(n, dist, root, t).expect("validated");
            let op = MeasurementOperator::new(f, BranchMode::DualBranch, SamplingMask::full(2 * n)).expect("full mask");
            let h = op.convolution_dense().expect("dense within limit");
            let h = match mode {
                CoherenceMode::ConvolutionOnly => h,
                CoherenceMode::Composite => {
                    let mut s = DMatrix::zeros(2 * n, n);
                    s.view_mut((0, 0), (n, n)).copy_from(&h);
                    s.view_mut((n, 0), (n, n)).fill_diagonal((n as f64).sqrt());
                    s
                }
            };
            acc.push(&coherence(&h, &psi, delta).expect("dimensions agree"));
        },
        SweepAcc::merge,
    );
    Ok(ViolationSummary::new(
        "coherence",
        n,
        delta,
        coherence_bound(n, delta),
        Frequency {
            trials: acc.trials,
            hits: acc.hits,
        },
        acc.measured.estimate(),
    ))
}

/// Row-norm violation rate; supports are drawn uniformly per trial.
pub fn row_norm_sweep(
    n: usize,
    sparsity: usize,
    basis_kind: BasisKind,
    dist: FilterDistribution,
    delta: f64,
    trials: u64,
    root: u64,
) -> Result<ViolationSummary> {
    check_delta(delta)?;
    let basis = build_basis(basis_kind, n)?;
    dist.validate()?;
    sample_sparse_signal(&basis, sparsity, MagnitudeLaw::Unit, 0)?;
    let acc = monte_carlo(
        trials,
        SweepAcc::default,
        |acc, t| {
            let f = trial_filter(n, dist, root, t).expect("validated");
            let op = MeasurementOperator::new(f, BranchMode::ConvolutionOnly, SamplingMask::full(n)).expect("full mask");
            let sig = sample_sparse_signal(&basis, sparsity, MagnitudeLaw::Unit, seed::derive_path(root, &[t, TAG_SUPPORT]))
                .expect("validated");
            acc.push(&row_norm_bound(&op, &basis, &sig.support).expect("valid support"));
        },
        SweepAcc::merge,
    );
    Ok(ViolationSummary::new(
        "row_norm",
        n,
        delta,
        row_norm_limit(sparsity),
        Frequency {
            trials: acc.trials,
            hits: acc.hits,
        },
        acc.measured.estimate(),
    ))
}

/// Whether `S >= C log(n/δ)`, the sparsity regime of the row-norm bound.
pub fn row_norm_regime(n: usize, sparsity: usize, delta: f64, c: f64) -> bool {
    sparsity as f64 >= c * (n as f64 / delta).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningCell {
    pub m: usize,
    pub deviation: Estimate,
    /// Trials with deviation `>= 1/2`.
    pub exceed: Frequency,
    pub expectation_scale: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningTrend {
    pub n: usize,
    pub sparsity: usize,
    pub cells: Vec<ConditioningCell>,
    /// Least-squares slope of ln(mean deviation) on ln m.
    pub log_log_slope: f64,
}

impl ConditioningTrend {
    /// The exceedance fraction never rises by more than `k` standard errors from one `m` to the next.
    pub fn exceedance_non_increasing(&self, k: f64) -> bool {
        self.cells.windows(2).all(|w| {
            let (a, b) = (&w[0].exceed, &w[1].exceed);
            let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
            b.rate() <= a.rate() + k * se
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSetup {
    pub n: usize,
    pub sparsity: usize,
    pub basis: BasisKind,
    pub distribution: FilterDistribution,
    pub branch_mode: BranchMode,
    pub mask_model: MaskModel,
}

/// Conditioning statistics at each `m`. Filter, support and mask seed are
/// shared across `m` within a trial, so masks are nested.
pub fn conditioning_sweep(setup: &ConditioningSetup, m_values: &[usize], trials: u64, root: u64) -> Result<ConditioningTrend> {
    let ConditioningSetup {
        n,
        sparsity,
        basis,
        distribution,
        branch_mode,
        mask_model,
    } = *setup;
    let basis = build_basis(basis, n)?;
    distribution.validate()?;
    let rows = branch_mode.total_rows(n);
    if m_values.iter().any(|&m| m == 0 || m > rows) {
        return Err(CsError::Config(format!("m values must lie in 1..={rows}")));
    }
    sample_sparse_signal(&basis, sparsity, MagnitudeLaw::Unit, 0)?;
    let k = m_values.len();
    let acc = monte_carlo(
        trials,
        || vec![(SweepAcc::default(), MeanAccumulator::default()); k],
        |acc, t| {
            let f = trial_filter(n, distribution, root, t).expect("validated");
            let sig = sample_sparse_signal(&basis, sparsity, MagnitudeLaw::Unit, seed::derive_path(root, &[t, TAG_SUPPORT]))
                .expect("validated");
            let mask_seed = seed::derive_path(root, &[t, TAG_MASK]);
            let base = MeasurementOperator::new(f, branch_mode, SamplingMask::full(rows)).expect("full mask");
            for (i, &m) in m_values.iter().enumerate() {
                let mask = SamplingMask::sample(mask_model, rows, m, mask_seed).expect("m validated");
                let op = base.with_mask(mask).expect("rows agree");
                let c = gram_conditioning(&op, &basis, &sig.support).expect("valid inputs");
                acc[i].0.push(&c.check);
                acc[i].1.push(c.expectation_scale);
            }
        },
        |a, b| {
            a.into_iter()
                .zip(b)
                .map(|((s1, e1), (s2, e2))| (s1.merge(s2), e1.merge(&e2)))
                .collect()
        },
    );
    let cells: Vec<ConditioningCell> = m_values
        .iter()
        .zip(&acc)
        .map(|(&m, (s, e))| ConditioningCell {
            m,
            deviation: s.measured.estimate(),
            exceed: Frequency {
                trials: s.trials,
                hits: s.hits,
            },
            expectation_scale: e.estimate(),
        })
        .collect();
    let xs: Vec<f64> = cells.iter().map(|c| c.m as f64).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.deviation.mean).collect();
    Ok(ConditioningTrend {
        n,
        sparsity,
        log_log_slope: if cells.len() >= 2 { log_log_slope(&xs, &ys) } else { f64::NAN },
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{FilterKind, RandomFilter};

    fn impulse_op(n: usize) -> MeasurementOperator {
        let mut taps = vec![0.0; n];
        taps[0] = 1.0;
        let f = RandomFilter::from_taps(taps, FilterDistribution::standard(FilterKind::Gaussian, n), 0).unwrap();
        MeasurementOperator::new(f, BranchMode::ConvolutionOnly, SamplingMask::full(n)).unwrap()
    }

    fn gaussian_op(n: usize, s: u64, mode: BranchMode, mask: SamplingMask) -> MeasurementOperator {
        let f = sample_filter(n, FilterDistribution::standard(FilterKind::Gaussian, n), s).unwrap();
        MeasurementOperator::new(f, mode, mask).unwrap()
    }

    #[test]
    fn coherence_bound_at_256() {
        // sqrt(2 ln(√2·256 / (√π·0.1)))
        let b = coherence_bound(256, 0.1);
        assert!((b - 3.904).abs() < 5e-4, "{b}");
    }

    #[test]
    fn row_norm_limit_at_eight() {
        assert_eq!(row_norm_limit(8), 8.0);
    }

    #[test]
    fn degenerate_filter_checks() {
        let op = impulse_op(4);
        let id = build_basis(BasisKind::Identity, 4).unwrap();
        let c = operator_coherence(&op, &id, 0.1, CoherenceMode::ConvolutionOnly).unwrap();
        assert!((c.measured - 2.0).abs() < 1e-12);
        let r = row_norm_bound(&op, &id, &[1]).unwrap();
        assert!((r.measured - 2.0).abs() < 1e-12);
        let g = gram_conditioning(&op, &id, &[0, 2, 3]).unwrap();
        assert!(g.check.measured < 1e-12 && g.check.holds);
    }

    #[test]
    fn scaled_isometry_has_zero_deviation() {
        let n = 8;
        let mask = SamplingMask::from_indices(2 * n, (n..2 * n).collect()).unwrap();
        let f = sample_filter(n, FilterDistribution::standard(FilterKind::Gaussian, n), 1).unwrap();
        let op = MeasurementOperator::new(f, BranchMode::DualBranch, mask).unwrap();
        let dct = build_basis(BasisKind::Dct, n).unwrap();
        let g = gram_conditioning(&op, &dct, &[1, 5]).unwrap();
        // Φ_Γ = √n·Ψ_Γ has orthogonal columns of norm √m with m = n.
        assert!(g.check.measured < 1e-12);
    }

    #[test]
    fn empty_mask_fails_conditioning() {
        let op = gaussian_op(8, 1, BranchMode::ConvolutionOnly, SamplingMask::from_indices(8, vec![]).unwrap());
        let id = build_basis(BasisKind::Identity, 8).unwrap();
        let g = gram_conditioning(&op, &id, &[0]).unwrap();
        assert!(!g.check.holds);
    }

    #[test]
    fn delta_guard() {
        let h = DMatrix::<f64>::identity(4, 4);
        assert!(matches!(coherence(&h, &h, 1.0), Err(CsError::Config(_))));
        assert!(matches!(coherence(&h, &h, 0.0), Err(CsError::Config(_))));
    }

    #[test]
    fn coherence_ignores_column_order() {
        let n = 16;
        let op = gaussian_op(n, 3, BranchMode::ConvolutionOnly, SamplingMask::full(n));
        let h = op.convolution_dense().unwrap();
        let psi = build_basis(BasisKind::Dct, n).unwrap().to_dense().unwrap();
        let mut perm = psi.clone();
        for j in 0..n {
            perm.set_column(j, &psi.column((j * 5 + 3) % n));
        }
        assert_eq!(coherence(&h, &psi, 0.1).unwrap().measured, coherence(&h, &perm, 0.1).unwrap().measured);
    }

    #[test]
    fn conditioning_invariant_under_sign_flip() {
        let n = 32;
        let mask = SamplingMask::from_indices(n, (0..n).step_by(3).collect()).unwrap();
        let op = gaussian_op(n, 9, BranchMode::ConvolutionOnly, mask.clone());
        let flipped = MeasurementOperator::new(op.filter().negated(), BranchMode::ConvolutionOnly, mask).unwrap();
        let b = build_basis(BasisKind::Haar, n).unwrap();
        let g1 = gram_conditioning(&op, &b, &[2, 7, 20]).unwrap().check.measured;
        let g2 = gram_conditioning(&flipped, &b, &[2, 7, 20]).unwrap().check.measured;
        assert!((g1 - g2).abs() <= 1e-12 * g1.max(1.0));
    }

    #[test]
    fn row_norms_grow_with_support() {
        let n = 64;
        let op = gaussian_op(n, 4, BranchMode::ConvolutionOnly, SamplingMask::full(n));
        let b = build_basis(BasisKind::Dct, n).unwrap();
        let small = row_norm_bound(&op, &b, &[3, 10]).unwrap().measured;
        let big = row_norm_bound(&op, &b, &[3, 10, 11, 40]).unwrap().measured;
        assert!(small <= big);
    }

    #[test]
    fn reports_are_reproducible() {
        let d = FilterDistribution::standard(FilterKind::Gaussian, 32);
        let a = coherence_sweep(32, BasisKind::Identity, d, 0.1, CoherenceMode::ConvolutionOnly, 50, 1).unwrap();
        let b = coherence_sweep(32, BasisKind::Identity, d, 0.1, CoherenceMode::ConvolutionOnly, 50, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn side_condition_flags() {
        let s = side_conditions(16, 2.0, 4.0);
        assert!(s.sqrt_m_below_v2_over_mu);
        assert_eq!(s.a2_limit, 2.0);
        assert_eq!(s.a2_limit_relaxed, 8.0);
        assert!(!side_conditions(10_000, 4.0, 2.0).sqrt_m_below_v2_over_mu);
    }
}
