//! Compressive sensing with random-filter measurements.
//!
//! A signal `x0 = Ψ α0` that is sparse in an orthonormal basis `Ψ` is observed
//! through a random circulant convolution `H` stacked over a scaled identity,
//! with rows randomly subsampled. Recovery is by ℓ1 minimization; the crate
//! also provides an exact-recovery certificate test and Monte Carlo checks of
//! coherence, row norms and Gram conditioning.
//!
//! Conventions: indices are 0-based, `log` is the natural logarithm and the DFT
//! is unnormalized, `F[t, w] = exp(-2πi·t·w/n)`.

pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod harness;
pub mod linop;
pub mod measurement;
pub mod recovery;
pub mod seed;
pub mod spectral;
pub mod stats;

pub use error::{CsError, Result};
pub use filter::{sample_filter, FilterDistribution, FilterKind, RandomFilter};
pub use linop::LinearMap;
pub use measurement::{build_operator, BranchMode, MaskModel, MeasurementOperator, SamplingMask};
pub use recovery::{
    build_basis, dual_certificate, sample_sparse_signal, solve_bp, Basis, BasisKind, BpSettings,
    CertificateReport, MagnitudeLaw, RecoveryResult, SensingMap, SparseSignal,
};
