//! Spectral analysis of large time-series panels against random-matrix
//! benchmarks.
//!
//! The crate covers two pipelines:
//!
//! 1. Eigenvalue spectra of Pearson covariance matrices compared against the
//!    Marchenko-Pastur law and against the spectral density of panels driven
//!    by a shared ARMA(1,1) shock, computed with free-probability transforms.
//! 2. Singular-value spectra of cross-correlation matrices between two
//!    whitened panels compared against the analytic no-correlation benchmark
//!    (and its unwhitened "MP squared" counterpart), flagging factors that
//!    escape the noise band.
//!
//! Everything is generic over the scalar type via [`scalar::Real`]; the
//! aliases below pin the common `f64` instantiations.

pub mod error;
pub mod scalar;

pub mod panel;

pub mod linalg;

pub mod frv;

pub mod spectra;

pub mod montecarlo;

pub mod fit;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` time panel.
pub type Panel64 = panel::TimePanel<f64>;
/// `f32` time panel.
pub type Panel32 = panel::TimePanel<f32>;
/// `f64` covariance matrix.
pub type Cov64 = linalg::CovMatrix<f64>;
/// `f64` empirical spectrum.
pub type Spectrum64 = linalg::EmpiricalSpectrum<f64>;
