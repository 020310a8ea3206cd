//! Matrix-free linear maps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, CsError, Result};
use crate::seed;

/// Largest dimension for which dense assembly is allowed.
pub const DENSE_LIMIT: usize = 4096;

/// A real linear map `A: R^cols -> R^rows` with its transpose.
pub trait LinearMap: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>>;

    fn column(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.cols() {
            return Err(CsError::InvalidDimension(format!(
                "column {j} out of range for {} columns",
                self.cols()
            )));
        }
        let mut e = vec![0.0; self.cols()];
        e[j] = 1.0;
        self.apply(&e)
    }

    /// Dense matrix assembled column by column from `apply`.
    fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.cols() > DENSE_LIMIT || self.rows() > 2 * DENSE_LIMIT {
            return Err(CsError::ResourceLimit(format!(
                "dense assembly of a {}x{} map exceeds the limit n <= {DENSE_LIMIT}",
                self.rows(),
                self.cols()
            )));
        }
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for j in 0..self.cols() {
            let col = self.column(j)?;
            m.set_column(j, &DVector::from_vec(col));
        }
        Ok(m)
    }
}

impl LinearMap for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x.len(), self.ncols(), "dense operand")?;
        Ok((self * DVector::from_column_slice(x)).data.into())
    }

    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(y.len(), self.nrows(), "dense adjoint operand")?;
        Ok((self.tr_mul(&DVector::from_column_slice(y))).data.into())
    }

    fn to_dense(&self) -> Result<DMatrix<f64>> {
        Ok(self.clone())
    }
}

/// Estimate of `‖A‖²` by power iteration on `AᵀA` from a seeded start.
pub fn operator_norm_sq(a: &dyn LinearMap, iterations: usize, seed: u64) -> Result<f64> {
    let mut rng = seed::rng(seed);
    let mut v: Vec<f64> = (0..a.cols()).map(|_| rng.sample(StandardNormal)).collect();
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let norm = dot(&v, &v).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let w = a.apply_adjoint(&a.apply(&v)?)?;
        estimate = dot(&v, &w);
        v = w;
    }
    Ok(estimate)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}
