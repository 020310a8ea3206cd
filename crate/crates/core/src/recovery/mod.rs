//! Sparsifying bases, sparse signal models, basis pursuit and the
//! exact-recovery certificate.

mod basis;
mod certificate;
mod signal;
mod solver;

pub use basis::{build_basis, Basis, BasisKind};
pub use certificate::{certificate_for, dual_certificate, CertificateReport, DEFAULT_ALPHA};
pub use signal::{sample_sparse_signal, MagnitudeLaw, SparseSignal};
pub use solver::{solve_bp, support_matches, BpSettings, RecoveryResult, SUPPORT_RATIO};

use crate::error::{check_len, Result};
use crate::linop::LinearMap;
use crate::measurement::MeasurementOperator;

/// `A = R_Ω H_c Ψ` acting on coefficient vectors.
#[derive(Debug, Clone, Copy)]
pub struct SensingMap<'a> {
    op: &'a MeasurementOperator,
    basis: &'a Basis,
}

impl<'a> SensingMap<'a> {
    pub fn new(op: &'a MeasurementOperator, basis: &'a Basis) -> Result<Self> {
        check_len(basis.n(), op.n(), "basis dimension")?;
        Ok(Self { op, basis })
    }
}

impl LinearMap for SensingMap<'_> {
    fn rows(&self) -> usize {
        self.op.m()
    }

    fn cols(&self) -> usize {
        self.op.n()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.op.apply_forward(&self.basis.synthesis(x)?)
    }

    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.basis.analysis(&self.op.apply_adjoint(y)?)
    }
}
