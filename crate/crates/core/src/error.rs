//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by panel loading, linear algebra, and the transform engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A CSV cell failed to parse; locations are 1-based as in the file.
    #[error("parse error at row {row}, column {col}: {reason}")]
    Parse { row: usize, col: usize, reason: String },

    /// Rows of a CSV panel have inconsistent lengths.
    #[error("ragged matrix: row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },

    /// A series is too short for the requested operation.
    #[error("series '{label}' too short: length {len}, need at least {min}")]
    TooShort { label: String, len: usize, min: usize },

    /// A log transform met a non-positive value.
    #[error("series '{label}': log transform requires positive values, got {value} at index {index}")]
    NonPositiveLog { label: String, index: usize, value: f64 },

    /// A row has zero sample variance and cannot be standardized.
    #[error("series '{label}' is constant; cannot standardize")]
    ConstantSeries { label: String },

    /// Incompatible shapes between panels or matrices.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// Requested lag does not leave a usable overlap window.
    #[error("lag {lag} out of range for series length {len}")]
    LagOutOfRange { lag: usize, len: usize },

    /// Whitening dropped every eigenvalue.
    #[error("all {dim} eigenvalues fall below the drop threshold {threshold}")]
    AllEigenvaluesDropped { dim: usize, threshold: f64 },

    /// Matrix expected to be positive (semi-)definite is not.
    #[error("matrix not positive semi-definite: {context}")]
    NotPositiveSemiDefinite { context: String },

    /// A linear solve or inversion met a singular matrix.
    #[error("singular matrix: {context}")]
    SingularMatrix { context: String },

    /// ARMA parameters violate weak stationarity.
    #[error("non-stationary parameters: {context}")]
    NonStationary { context: String },

    /// Generic invalid argument.
    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },

    /// Polynomial root finding did not reach the residual contract.
    #[error("root finding failed for degree-{degree} polynomial: {reason}")]
    RootFinding { degree: usize, reason: String },

    /// No candidate root lies on the physical branch.
    #[error("branch selection failed at z = {z}: {reason}")]
    BranchSelection { z: String, reason: String },

    /// A transform evaluator was called at a pole or on a branch cut.
    #[error("evaluator undefined at z = {z}: {reason}")]
    EvaluatorDomain { z: String, reason: String },

    /// Quadrature failed to converge under node doubling.
    #[error("quadrature did not converge: disagreement {disagreement:e} after {nodes} nodes")]
    QuadratureNonConvergence { nodes: usize, disagreement: f64 },

    /// Secant/Newton inversion failed to converge.
    #[error("functional inversion did not converge after {iterations} iterations (residual {residual:e})")]
    InversionNonConvergence { iterations: usize, residual: f64 },

    /// Every multistart descent failed.
    #[error("all {starts} fit starts failed: {reason}")]
    AllStartsFailed { starts: usize, reason: String },

    /// A density required to be normalized is not.
    #[error("density mass {mass} departs from 1 beyond tolerance")]
    UnnormalizedDensity { mass: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of numerical procedures (as opposed to bad inputs).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::RootFinding { .. }
                | Error::BranchSelection { .. }
                | Error::EvaluatorDomain { .. }
                | Error::QuadratureNonConvergence { .. }
                | Error::InversionNonConvergence { .. }
                | Error::AllStartsFailed { .. }
                | Error::SingularMatrix { .. }
                | Error::UnnormalizedDensity { .. }
        )
    }
}
