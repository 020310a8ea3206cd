//! Discrete Fourier transform in the unnormalized convention
//! `F[t, w] = exp(-2πi·t·w/n)` (0-based) and FFT-backed circulant products.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, check_pow2, CsError, Result};

/// Largest imaginary magnitude tolerated when a transform result is known to be real.
pub const REAL_TOLERANCE: f64 = 1e-10;

/// Complex vector whose length is a power of two, at least 4.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        check_pow2(values.len(), "complex vector")?;
        Ok(Self(values))
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Real parts, rejecting the vector if any imaginary part exceeds [`REAL_TOLERANCE`].
    pub fn to_real(&self) -> Result<Vec<f64>> {
        take_real(&self.0)
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

/// Drop imaginary parts after checking they are negligible relative to the
/// magnitude of the data.
pub fn take_real(values: &[Complex64]) -> Result<Vec<f64>> {
    let scale = values.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
    let residue = values.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    let tolerance = REAL_TOLERANCE * scale;
    if residue > tolerance {
        return Err(CsError::NonReal { residue, tolerance });
    }
    Ok(values.iter().map(|c| c.re).collect())
}

/// Planned forward/inverse transforms for one length.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Result<Self> {
        check_pow2(n, "transform")?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `buf <- F buf`, no normalization.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        check_len(buf.len(), self.n, "transform input")?;
        self.forward.process(buf);
        Ok(())
    }

    /// `buf <- (1/n) F* buf`.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        check_len(buf.len(), self.n, "transform input")?;
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        Ok(())
    }

    pub fn forward_real(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        check_len(x.len(), self.n, "transform input")?;
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        Ok(buf)
    }
}

pub fn dft_forward(x: &[Complex64]) -> Result<ComplexVector> {
    let dft = Dft::new(x.len())?;
    let mut buf = x.to_vec();
    dft.forward_in_place(&mut buf)?;
    Ok(ComplexVector(buf))
}

pub fn dft_inverse(x: &[Complex64]) -> Result<ComplexVector> {
    let dft = Dft::new(x.len())?;
    let mut buf = x.to_vec();
    dft.inverse_in_place(&mut buf)?;
    Ok(ComplexVector(buf))
}

/// Real circulant matrix given by its first row; row `r` is the first row
/// rotated right by `r`, so entry `(i, j)` is `first_row[(j - i) mod n]`.
#[derive(Debug, Clone)]
pub struct CirculantKernel {
    first_row: Vec<f64>,
    // DFT of the first column.
    eigenvalues: Vec<Complex64>,
    dft: Dft,
}

impl CirculantKernel {
    pub fn new(first_row: Vec<f64>) -> Result<Self> {
        let n = first_row.len();
        let dft = Dft::new(n)?;
        let first_col: Vec<f64> = (0..n).map(|k| first_row[(n - k) % n]).collect();
        let eigenvalues = dft.forward_real(&first_col)?;
        Ok(Self {
            first_row,
            eigenvalues,
            dft,
        })
    }

    pub fn len(&self) -> usize {
        self.first_row.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_row.is_empty()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn dft(&self) -> &Dft {
        &self.dft
    }

    fn diagonal_product(&self, x: &[f64], conjugate: bool) -> Result<Vec<f64>> {
        check_len(x.len(), self.len(), "circulant operand")?;
        let mut buf = self.dft.forward_real(x)?;
        for (b, l) in buf.iter_mut().zip(&self.eigenvalues) {
            *b *= if conjugate { l.conj() } else { *l };
        }
        self.dft.inverse_in_place(&mut buf)?;
        take_real(&buf)
    }

    /// `C x` in O(n log n).
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.diagonal_product(x, false)
    }

    /// `Cᵀ x` in O(n log n).
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.diagonal_product(x, true)
    }

    /// Explicit matrix, built entry by entry from the first row.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.first_row[(j + n - i) % n])
    }
}

pub fn circulant_apply(kernel: &CirculantKernel, x: &[f64]) -> Result<Vec<f64>> {
    kernel.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|w| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| {
                        let ang = -2.0 * std::f64::consts::PI * ((t * w) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, ang)
                    })
                    .sum()
            })
            .collect()
    }

    fn random_complex(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = crate::seed::rng(seed);
        (0..n)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn impulse_and_constant() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let f = dft_forward(&[one, zero, zero, zero]).unwrap();
        assert!(max_err(&f, &[one; 4]) < 1e-15);
        let f = dft_forward(&[one; 4]).unwrap();
        assert!(max_err(&f, &[c(4.0, 0.0), zero, zero, zero]) < 1e-15);
        let g = dft_inverse(&[c(4.0, 0.0), zero, zero, zero]).unwrap();
        assert!(max_err(&g, &[one; 4]) < 1e-15);
        let g = dft_inverse(&[one; 4]).unwrap();
        assert!(max_err(&g, &[one, zero, zero, zero]) < 1e-15);
    }

    #[test]
    fn rejects_bad_lengths() {
        let v = vec![c(1.0, 0.0); 6];
        assert!(matches!(dft_forward(&v), Err(CsError::InvalidDimension(_))));
        assert!(matches!(dft_inverse(&v[..2]), Err(CsError::InvalidDimension(_))));
        assert!(ComplexVector::new(v).is_err());
        let k = CirculantKernel::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(k.apply(&[1.0; 8]), Err(CsError::InvalidDimension(_))));
    }

    #[test]
    fn fft_matches_naive_sum() {
        let x = random_complex(16, 11);
        assert!(max_err(&dft_forward(&x).unwrap(), &naive_dft(&x)) < 1e-12);
        for n in [4, 8, 16, 32] {
            for s in 0..100 {
                let x = random_complex(n, 1000 * n as u64 + s);
                assert!(max_err(&dft_forward(&x).unwrap(), &naive_dft(&x)) < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_length_32() {
        let x = random_complex(32, 5);
        let back = dft_inverse(&dft_forward(&x).unwrap()).unwrap();
        assert!(max_err(&back, &x) <= 1e-12);
    }

    #[test]
    fn linearity_and_parseval() {
        let x = random_complex(64, 1);
        let y = random_complex(64, 2);
        let (a, b) = (c(0.3, -1.2), c(-2.0, 0.5));
        let mix: Vec<Complex64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let fx = dft_forward(&x).unwrap();
        let fy = dft_forward(&y).unwrap();
        let lhs = dft_forward(&mix).unwrap();
        let rhs: Vec<Complex64> = fx.iter().zip(fy.iter()).map(|(u, v)| a * u + b * v).collect();
        assert!(max_err(&lhs, &rhs) < 1e-12);

        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let efx: f64 = fx.iter().map(|v| v.norm_sqr()).sum();
        assert!((efx - 64.0 * ex).abs() <= 1e-12 * efx);
    }

    #[test]
    fn circulant_trivial_kernels() {
        let id = CirculantKernel::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let x = [0.5, -2.0, 3.0, 7.25];
        let out = circulant_apply(&id, &x).unwrap();
        assert!(out.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-14));

        let ones = CirculantKernel::new(vec![1.0; 4]).unwrap();
        let out = circulant_apply(&ones, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(out.iter().all(|v| (v - 10.0).abs() < 1e-13));
    }

    #[test]
    fn circulant_matches_dense_oracle() {
        let n = 64;
        let mut rng = crate::seed::rng(99);
        let row: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        // Dense matrix built directly from the rotation rule, independent of `to_dense`.
        let dense: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| row[(j + n - i) % n] * x[j]).sum())
            .collect();
        let k = CirculantKernel::new(row.clone()).unwrap();
        let fast = k.apply(&x).unwrap();
        let err = fast.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10, "err {err}");

        let dense_t: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| row[(j + n - i) % n] * x[i]).sum())
            .collect();
        let fast_t = k.apply_transpose(&x).unwrap();
        let err = fast_t.iter().zip(&dense_t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10);
    }

    #[test]
    fn circulant_commutes_with_shift() {
        let n = 32;
        let mut rng = crate::seed::rng(3);
        let row: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let k = CirculantKernel::new(row).unwrap();
        let mut shifted = x.clone();
        shifted.rotate_right(5);
        let mut expect = k.apply(&x).unwrap();
        expect.rotate_right(5);
        let got = k.apply(&shifted).unwrap();
        assert!(got.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn take_real_rejects_residue() {
        assert!(take_real(&[c(1.0, 1e-12)]).is_ok());
        assert!(matches!(take_real(&[c(1.0, 1e-6)]), Err(CsError::NonReal { .. })));
    }
}
