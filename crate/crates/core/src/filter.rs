//! Random filters with i.i.d. zero-mean taps and their frequency responses.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{check_pow2, CsError, Result};
use crate::seed;
use crate::spectral::{dft_forward, ComplexVector};
use crate::stats::{merge_all, monte_carlo, Estimate, EstimateGrid, MeanAccumulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Gaussian,
    /// Symmetric ±scale.
    Bernoulli,
    /// Uniform on `[-√3·scale, √3·scale]`.
    Uniform,
}

impl FromStr for FilterKind {
    type Err = CsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "bernoulli" | "rademacher" => Ok(Self::Bernoulli),
            "uniform" => Ok(Self::Uniform),
            other => Err(CsError::Config(format!("unsupported filter distribution '{other}'"))),
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Gaussian => "gaussian",
            Self::Bernoulli => "bernoulli",
            Self::Uniform => "uniform",
        };
        f.write_str(s)
    }
}

/// Tap law: i.i.d., zero mean, standard deviation `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDistribution {
    pub kind: FilterKind,
    pub scale: f64,
}

impl FilterDistribution {
    pub fn new(kind: FilterKind, scale: f64) -> Result<Self> {
        let d = Self { kind, scale };
        d.validate()?;
        Ok(d)
    }

    /// Scale `1/√n`, so the spectrum has unit mean power per frequency.
    pub fn standard(kind: FilterKind, n: usize) -> Self {
        Self {
            kind,
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(CsError::Config(format!(
                "filter scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.kind {
            FilterKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.scale * z
            }
            FilterKind::Bernoulli => {
                if rng.gen::<bool>() {
                    self.scale
                } else {
                    -self.scale
                }
            }
            FilterKind::Uniform => {
                let half_width = 3f64.sqrt() * self.scale;
                Uniform::new_inclusive(-half_width, half_width).sample(rng)
            }
        }
    }
}

/// Filter taps together with their spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFilter {
    taps: Vec<f64>,
    spectrum: ComplexVector,
    seed: u64,
    distribution: FilterDistribution,
}

impl RandomFilter {
    /// Builds a filter from explicit taps; used for deterministic kernels.
    pub fn from_taps(taps: Vec<f64>, distribution: FilterDistribution, seed: u64) -> Result<Self> {
        let spectrum = dft_forward(&ComplexVector::from_real(&taps)?)?;
        Ok(Self {
            taps,
            spectrum,
            seed,
            distribution,
        })
    }

    pub fn n(&self) -> usize {
        self.taps.len()
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn spectrum(&self) -> &ComplexVector {
        &self.spectrum
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> FilterDistribution {
        self.distribution
    }

    /// Largest violation of the real-signal spectral symmetry: the DC and
    /// Nyquist bins are real and bin `w` is the conjugate of bin `n - w`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n();
        let s = &self.spectrum;
        let mut defect = s[0].im.abs().max(s[n / 2].im.abs());
        for w in 1..n / 2 {
            defect = defect.max((s[n - w] - s[w].conj()).norm());
        }
        defect
    }

    /// Same taps with every sign flipped.
    pub fn negated(&self) -> Self {
        Self {
            taps: self.taps.iter().map(|t| -t).collect(),
            spectrum: ComplexVector::new(self.spectrum.iter().map(|c| -c).collect())
                .expect("length already validated"),
            seed: self.seed,
            distribution: self.distribution,
        }
    }
}

pub fn sample_filter(n: usize, dist: FilterDistribution, seed: u64) -> Result<RandomFilter> {
    check_pow2(n, "filter")?;
    dist.validate()?;
    let mut rng = seed::rng(seed);
    let taps: Vec<f64> = (0..n).map(|_| dist.draw(&mut rng)).collect();
    RandomFilter::from_taps(taps, dist, seed)
}

pub fn frequency_response(filter: &RandomFilter) -> &ComplexVector {
    filter.spectrum()
}

/// Per-frequency moments of the spectrum. `bin` is 0-based, so bin 0 is DC and
/// bin `n/2` is the Nyquist frequency; both are real for real taps and are
/// marked `special`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMoments {
    pub bin: usize,
    pub special: bool,
    pub power: Estimate,
    pub real_mean: Estimate,
    pub imag_mean: Estimate,
    pub real_sq: Estimate,
    pub imag_sq: Estimate,
    pub real_imag: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMoments {
    pub n: usize,
    pub trials: u64,
    pub distribution: FilterDistribution,
    pub per_frequency: Vec<FrequencyMoments>,
    /// Real and imaginary parts of `E[s(w1) conj(s(w2))]`.
    pub cross_re: EstimateGrid,
    pub cross_im: EstimateGrid,
    /// `E[Re s(w1) Re s(w2)]`, `E[Im s(w1) Im s(w2)]`, `E[Re s(w1) Im s(w2)]`.
    pub real_real: EstimateGrid,
    pub imag_imag: EstimateGrid,
    pub real_imag: EstimateGrid,
}

impl SpectrumMoments {
    pub fn is_special(n: usize, bin: usize) -> bool {
        bin == 0 || bin == n / 2
    }
}

pub const MIN_SPECTRUM_TRIALS: u64 = 1000;

struct SpectrumAcc {
    // power, re, im, re², im², re·im
    single: Vec<[MeanAccumulator; 6]>,
    cross_re: Vec<MeanAccumulator>,
    cross_im: Vec<MeanAccumulator>,
    rr: Vec<MeanAccumulator>,
    ii: Vec<MeanAccumulator>,
    ri: Vec<MeanAccumulator>,
}

impl SpectrumAcc {
    fn new(n: usize) -> Self {
        let grid = || vec![MeanAccumulator::default(); n * n];
        Self {
            single: vec![[MeanAccumulator::default(); 6]; n],
            cross_re: grid(),
            cross_im: grid(),
            rr: grid(),
            ii: grid(),
            ri: grid(),
        }
    }

    fn push(&mut self, s: &[Complex64]) {
        let n = s.len();
        for (w, c) in s.iter().enumerate() {
            let acc = &mut self.single[w];
            acc[0].push(c.norm_sqr());
            acc[1].push(c.re);
            acc[2].push(c.im);
            acc[3].push(c.re * c.re);
            acc[4].push(c.im * c.im);
            acc[5].push(c.re * c.im);
        }
        for (w1, a) in s.iter().enumerate() {
            for (w2, b) in s.iter().enumerate() {
                let k = w1 * n + w2;
                let p = a * b.conj();
                self.cross_re[k].push(p.re);
                self.cross_im[k].push(p.im);
                self.rr[k].push(a.re * b.re);
                self.ii[k].push(a.im * b.im);
                self.ri[k].push(a.re * b.im);
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (x, y) in self.single.iter_mut().zip(&other.single) {
            merge_all(x, y);
        }
        merge_all(&mut self.cross_re, &other.cross_re);
        merge_all(&mut self.cross_im, &other.cross_im);
        merge_all(&mut self.rr, &other.rr);
        merge_all(&mut self.ii, &other.ii);
        merge_all(&mut self.ri, &other.ri);
        self
    }
}

/// Monte Carlo moments of the filter spectrum over `trials` independent filters.
pub fn spectrum_statistics(
    dist: FilterDistribution,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<SpectrumMoments> {
    if trials < MIN_SPECTRUM_TRIALS {
        return Err(CsError::Config(format!(
            "spectrum statistics need at least {MIN_SPECTRUM_TRIALS} trials, got {trials}"
        )));
    }
    check_pow2(n, "filter")?;
    dist.validate()?;

    let acc = monte_carlo(
        trials,
        || SpectrumAcc::new(n),
        |acc, t| {
            let f = sample_filter(n, dist, seed::derive(seed, t)).expect("validated above");
            acc.push(f.spectrum());
        },
        SpectrumAcc::merge,
    );

    let per_frequency = acc
        .single
        .iter()
        .enumerate()
        .map(|(bin, a)| FrequencyMoments {
            bin,
            special: SpectrumMoments::is_special(n, bin),
            power: a[0].estimate(),
            real_mean: a[1].estimate(),
            imag_mean: a[2].estimate(),
            real_sq: a[3].estimate(),
            imag_sq: a[4].estimate(),
            real_imag: a[5].estimate(),
        })
        .collect();

    Ok(SpectrumMoments {
        n,
        trials,
        distribution: dist,
        per_frequency,
        cross_re: EstimateGrid::from_accumulators(n, &acc.cross_re),
        cross_im: EstimateGrid::from_accumulators(n, &acc.cross_im),
        real_real: EstimateGrid::from_accumulators(n, &acc.rr),
        imag_imag: EstimateGrid::from_accumulators(n, &acc.ii),
        real_imag: EstimateGrid::from_accumulators(n, &acc.ri),
    })
}
