use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Basis;
use crate::error::{check_len, CsError, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagnitudeLaw {
    /// All nonzero coefficients have magnitude 1.
    Unit,
    /// Magnitudes uniform on `[0.5, 1.5]`.
    Uniform,
}

/// `S`-sparse coefficient vector `α0` on support `Γ` with sign pattern `z`,
/// and the synthesized signal `x0 = Ψ α0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    /// Sorted support `Γ`.
    pub support: Vec<usize>,
    /// Signs `z`, aligned with `support`.
    pub signs: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub signal: Vec<f64>,
    pub seed: u64,
}

impl SparseSignal {
    /// Builds the signal from explicit coefficients; the support is their nonzero set.
    pub fn from_coefficients(basis: &Basis, coefficients: Vec<f64>) -> Result<Self> {
        check_len(coefficients.len(), basis.n(), "coefficient vector")?;
        let support: Vec<usize> = (0..coefficients.len()).filter(|&i| coefficients[i] != 0.0).collect();
        let signs = support.iter().map(|&i| coefficients[i].signum()).collect();
        let signal = basis.synthesis(&coefficients)?;
        Ok(Self {
            support,
            signs,
            coefficients,
            signal,
            seed: 0,
        })
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// Complement of the support in `0..n`.
    pub fn off_support(&self) -> Vec<usize> {
        let n = self.coefficients.len();
        let mut on = vec![false; n];
        self.support.iter().for_each(|&i| on[i] = true);
        (0..n).filter(|&i| !on[i]).collect()
    }
}

/// Uniformly random support of size `s`, i.i.d. uniform signs, magnitudes per `law`.
pub fn sample_sparse_signal(basis: &Basis, s: usize, law: MagnitudeLaw, seed: u64) -> Result<SparseSignal> {
    let n = basis.n();
    if s == 0 || s > n {
        return Err(CsError::Config(format!("sparsity {s} outside 1..={n}")));
    }
    let mut rng = seed::rng(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut entries: Vec<(usize, f64, f64)> = perm[..s]
        .iter()
        .map(|&i| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let mag = match law {
                MagnitudeLaw::Unit => 1.0,
                MagnitudeLaw::Uniform => rng.gen_range(0.5..=1.5),
            };
            (i, sign, mag)
        })
        .collect();
    entries.sort_unstable_by_key(|e| e.0);

    let mut coefficients = vec![0.0; n];
    for &(i, sign, mag) in &entries {
        coefficients[i] = sign * mag;
    }
    let signal = basis.synthesis(&coefficients)?;
    Ok(SparseSignal {
        support: entries.iter().map(|e| e.0).collect(),
        signs: entries.iter().map(|e| e.1).collect(),
        coefficients,
        signal,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::{build_basis, BasisKind};

    #[test]
    fn full_support_unit_magnitudes() {
        let b = build_basis(BasisKind::Identity, 16).unwrap();
        let s = sample_sparse_signal(&b, 16, MagnitudeLaw::Unit, 3).unwrap();
        assert!(s.coefficients.iter().all(|c| c.abs() == 1.0));
        assert_eq!(s.signal, s.coefficients);
        assert!(s.off_support().is_empty());
    }

    #[test]
    fn deterministic_and_consistent() {
        let b = build_basis(BasisKind::Dct, 16).unwrap();
        let a = sample_sparse_signal(&b, 1, MagnitudeLaw::Uniform, 8).unwrap();
        assert_eq!(a, sample_sparse_signal(&b, 1, MagnitudeLaw::Uniform, 8).unwrap());
        let s = sample_sparse_signal(&b, 5, MagnitudeLaw::Uniform, 2).unwrap();
        assert_eq!(s.sparsity(), 5);
        assert!(s.support.windows(2).all(|w| w[0] < w[1]));
        for (k, &i) in s.support.iter().enumerate() {
            assert_eq!(s.coefficients[i].signum(), s.signs[k]);
            assert!((0.5..=1.5).contains(&s.coefficients[i].abs()));
        }
        assert_eq!(s.coefficients.iter().filter(|c| **c != 0.0).count(), 5);
    }

    #[test]
    fn out_of_range_sparsity() {
        let b = build_basis(BasisKind::Identity, 8).unwrap();
        assert!(matches!(sample_sparse_signal(&b, 0, MagnitudeLaw::Unit, 0), Err(CsError::Config(_))));
        assert!(sample_sparse_signal(&b, 9, MagnitudeLaw::Unit, 0).is_err());
    }

    #[test]
    fn support_is_uniform() {
        let n = 16;
        let b = build_basis(BasisKind::Identity, n).unwrap();
        let draws = 10_000;
        let mut counts = vec![0u32; n];
        for t in 0..draws {
            let s = sample_sparse_signal(&b, 2, MagnitudeLaw::Unit, seed::derive(77, t)).unwrap();
            s.support.iter().for_each(|&i| counts[i] += 1);
        }
        let p = 2.0 / n as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - p).abs() <= 3.0 * se);
        }
    }
}
