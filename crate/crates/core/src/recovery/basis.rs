use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustdct::{DctPlanner, TransformType2And3};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_pow2, CsError, Result};
use crate::linop::DENSE_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Identity,
    /// Orthonormal DCT-II; synthesis is its transpose (DCT-III).
    Dct,
    /// Orthonormal Haar wavelets, coarsest scale first.
    Haar,
}

impl FromStr for BasisKind {
    type Err = CsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "spike" => Ok(Self::Identity),
            "dct" => Ok(Self::Dct),
            "haar" => Ok(Self::Haar),
            other => Err(CsError::Config(format!("unsupported basis '{other}'"))),
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Dct => "dct",
            Self::Haar => "haar",
        })
    }
}

/// Orthonormal sparsifying basis `Ψ` with matrix-free synthesis `α ↦ Ψα`
/// and analysis `x ↦ Ψᵀx`.
#[derive(Clone)]
pub struct Basis {
    kind: BasisKind,
    n: usize,
    dct: Option<Arc<dyn TransformType2And3<f64>>>,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis").field("kind", &self.kind).field("n", &self.n).finish()
    }
}

pub fn build_basis(kind: BasisKind, n: usize) -> Result<Basis> {
    check_pow2(n, "basis")?;
    let dct = match kind {
        BasisKind::Dct => Some(DctPlanner::new().plan_dct2(n)),
        _ => None,
    };
    Ok(Basis { kind, n, dct })
}

impl Basis {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn synthesis(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len(coeffs.len(), self.n, "coefficient vector")?;
        let mut buf = coeffs.to_vec();
        match self.kind {
            BasisKind::Identity => {}
            BasisKind::Dct => {
                let n = self.n as f64;
                buf[0] *= 2.0 * (1.0 / n).sqrt();
                let s = (2.0 / n).sqrt();
                buf[1..].iter_mut().for_each(|v| *v *= s);
                self.dct.as_ref().expect("planned").process_dct3(&mut buf);
            }
            BasisKind::Haar => haar_synthesis(&mut buf),
        }
        Ok(buf)
    }

    pub fn analysis(&self, signal: &[f64]) -> Result<Vec<f64>> {
        check_len(signal.len(), self.n, "signal")?;
        let mut buf = signal.to_vec();
        match self.kind {
            BasisKind::Identity => {}
            BasisKind::Dct => {
                self.dct.as_ref().expect("planned").process_dct2(&mut buf);
                let n = self.n as f64;
                buf[0] *= (1.0 / n).sqrt();
                let s = (2.0 / n).sqrt();
                buf[1..].iter_mut().for_each(|v| *v *= s);
            }
            BasisKind::Haar => haar_analysis(&mut buf),
        }
        Ok(buf)
    }

    /// Basis vector `ψ_k`.
    pub fn column(&self, k: usize) -> Result<Vec<f64>> {
        if k >= self.n {
            return Err(CsError::InvalidDimension(format!("basis index {k} >= {}", self.n)));
        }
        let mut e = vec![0.0; self.n];
        e[k] = 1.0;
        self.synthesis(&e)
    }

    /// Dense synthesis matrix; column `k` is `ψ_k`.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_LIMIT {
            return Err(CsError::ResourceLimit(format!(
                "dense basis limited to n <= {DENSE_LIMIT}"
            )));
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for k in 0..self.n {
            m.set_column(k, &DVector::from_vec(self.column(k)?));
        }
        Ok(m)
    }
}

fn haar_analysis(buf: &mut [f64]) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut tmp = vec![0.0; buf.len()];
    let mut len = buf.len();
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (buf[2 * i], buf[2 * i + 1]);
            tmp[i] = (a + b) * r;
            tmp[half + i] = (a - b) * r;
        }
        buf[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
}

fn haar_synthesis(buf: &mut [f64]) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut tmp = vec![0.0; buf.len()];
    let mut len = 2;
    while len <= buf.len() {
        let half = len / 2;
        for i in 0..half {
            let (s, d) = (buf[i], buf[half + i]);
            tmp[2 * i] = (s + d) * r;
            tmp[2 * i + 1] = (s - d) * r;
        }
        buf[..len].copy_from_slice(&tmp[..len]);
        len *= 2;
    }
}
