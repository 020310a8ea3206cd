use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{Basis, SensingMap, SparseSignal};
use crate::error::{CsError, Result};
use crate::linop::LinearMap;
use crate::measurement::MeasurementOperator;

/// Default threshold on `max |π(γ)|`.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Relative eigenvalue floor below which `Φ_Γ* Φ_Γ` counts as singular.
const RANK_TOLERANCE: f64 = 1e-10;

/// Exact-recovery certificate for a sign pattern on a fixed support.
///
/// With `Φ = R_Ω H_c Ψ`, the vector `v = Φ_Γ (Φ_Γ* Φ_Γ)^{-1} z` satisfies
/// `Φ_Γ* v = z`; its correlations `π(γ) = ⟨φ_γ, v⟩` off the support decide
/// whether `v` is a valid dual certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub m: usize,
    pub sparsity: usize,
    pub full_rank: bool,
    /// `‖(Φ_Γ* Φ_Γ)^{-1}‖`; infinite when rank deficient.
    pub inverse_norm: f64,
    /// `inverse_norm <= 2/m`.
    pub bounded_inverse: bool,
    /// Indices of `Γᶜ`, aligned with `pi_values`.
    pub off_support: Vec<usize>,
    pub pi_values: Vec<f64>,
    pub max_pi: f64,
    pub alpha_threshold: f64,
    pub certified: bool,
}

impl CertificateReport {
    pub fn certified_at(&self, alpha: f64) -> bool {
        self.full_rank && self.max_pi < alpha
    }
}

pub fn dual_certificate(
    op: &MeasurementOperator,
    basis: &Basis,
    signal: &SparseSignal,
    alpha_threshold: f64,
) -> Result<CertificateReport> {
    let map = SensingMap::new(op, basis)?;
    certificate_for(&map, &signal.support, &signal.signs, alpha_threshold)
}

/// Certificate test against any linear map, e.g. a dense matrix.
pub fn certificate_for(
    a: &dyn LinearMap,
    support: &[usize],
    signs: &[f64],
    alpha_threshold: f64,
) -> Result<CertificateReport> {
    if !(alpha_threshold > 0.0 && alpha_threshold <= 1.0) {
        return Err(CsError::Config(format!(
            "certificate threshold must lie in (0, 1], got {alpha_threshold}"
        )));
    }
    if support.len() != signs.len() {
        return Err(CsError::InvalidDimension("support and signs differ in length".into()));
    }
    let m = a.rows();
    let s = support.len();
    let n = a.cols();
    let mut on = vec![false; n];
    for &g in support {
        if g >= n {
            return Err(CsError::InvalidDimension(format!("support index {g} >= {n}")));
        }
        on[g] = true;
    }
    let off_support: Vec<usize> = (0..n).filter(|&i| !on[i]).collect();
    let deficient = CertificateReport {
        m,
        sparsity: s,
        full_rank: false,
        inverse_norm: f64::INFINITY,
        bounded_inverse: false,
        off_support: off_support.clone(),
        pi_values: Vec::new(),
        max_pi: f64::INFINITY,
        alpha_threshold,
        certified: false,
    };
    if s == 0 || s > m {
        return Ok(deficient);
    }

    let mut phi = DMatrix::zeros(m, s);
    for (c, &g) in support.iter().enumerate() {
        phi.set_column(c, &DVector::from_vec(a.column(g)?));
    }
    let eig = SymmetricEigen::new(phi.tr_mul(&phi));
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let well_posed = lmin > RANK_TOLERANCE * lmax.max(f64::MIN_POSITIVE);
    if !well_posed {
        return Ok(deficient);
    }
    let inverse_norm = 1.0 / lmin;

    let z = DVector::from_column_slice(signs);
    let inv_diag = eig.eigenvalues.map(|l| 1.0 / l);
    let w = &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.tr_mul(&z);
    let v = &phi * w;
    let corr = a.apply_adjoint(v.as_slice())?;
    let pi_values: Vec<f64> = off_support.iter().map(|&g| corr[g].abs()).collect();
    let max_pi = pi_values.iter().fold(0.0f64, |acc, p| acc.max(*p));

    Ok(CertificateReport {
        m,
        sparsity: s,
        full_rank: true,
        inverse_norm,
        bounded_inverse: inverse_norm <= 2.0 / m as f64,
        off_support,
        pi_values,
        max_pi,
        alpha_threshold,
        certified: max_pi < alpha_threshold,
    })
}
