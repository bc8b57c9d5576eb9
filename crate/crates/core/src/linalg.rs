//! Covariance estimation, eigendecomposition, whitening, and SVD.
//!
//! These are the estimators both pipelines share: the Pearson covariance of a
//! standardized panel, its eigensystem, the whitening rotation that turns a
//! panel into uncorrelated unit-variance components, and the cross-correlation
//! matrix between two whitened panels together with its singular values.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::panel::TimePanel;
use crate::scalar::Real;

/// Symmetric covariance/correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix<T: Real> {
    mat: DMatrix<T>,
}

impl<T: Real> CovMatrix<T> {
    /// Wraps a matrix, checking symmetry to `1e-12` relative to its scale.
    pub fn new(mat: DMatrix<T>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                context: format!("{}x{} matrix is not square", mat.nrows(), mat.ncols()),
            });
        }
        let scale = mat.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
        let tol = T::cast(1e-12) * T::one().max(scale);
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                if (mat[(i, j)] - mat[(j, i)]).abs() > tol {
                    return Err(Error::InvalidParameter {
                        context: format!("matrix not symmetric at ({i}, {j})"),
                    });
                }
            }
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.mat
    }
}

/// Panel rotated and rescaled so that its Gram matrix is the identity.
#[derive(Debug, Clone)]
pub struct WhitenedPanel<T: Real> {
    /// `K x T` matrix of whitened components.
    values: DMatrix<T>,
    /// Retained `(eigenvalue, original index)` pairs, descending by eigenvalue.
    retained: Vec<(T, usize)>,
}

impl<T: Real> WhitenedPanel<T> {
    /// Retained rank `K`.
    pub fn rank(&self) -> usize {
        self.values.nrows()
    }

    /// Observation count `T`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn retained(&self) -> &[(T, usize)] {
        &self.retained
    }

    /// Ratio `K / T` fed to the benchmark spectra.
    pub fn ratio(&self) -> T {
        T::from_count(self.rank()) / T::from_count(self.len())
    }
}

/// Rectangular cross-correlation matrix between two whitened panels.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMatrix<T: Real> {
    entries: DMatrix<T>,
}

impl<T: Real> CrossMatrix<T> {
    pub fn new(entries: DMatrix<T>) -> Self {
        Self { entries }
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }
}

/// Whether a spectrum holds eigenvalues or singular values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Eigenvalues,
    SingularValues,
}

/// Sorted empirical spectrum (descending).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectrum<T: Real> {
    values: Vec<T>,
    kind: SpectrumKind,
}

impl<T: Real> EmpiricalSpectrum<T> {
    pub fn new(mut values: Vec<T>, kind: SpectrumKind) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite spectrum"));
        Self { values, kind }
    }

    /// Values in descending order.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest value, if any.
    pub fn top(&self) -> Option<T> {
        self.values.first().copied()
    }
}

/// Pearson estimator `c = (1/T) Y Y^T` of a standardized panel.
pub fn pearson_cov<T: Real>(panel: &TimePanel<T>) -> CovMatrix<T> {
    let y = panel.values();
    let t_inv = T::one() / T::from_count(panel.len());
    let mut c = y * y.transpose();
    c.scale_mut(t_inv);
    symmetrize(&mut c);
    CovMatrix { mat: c }
}

/// Sample covariance of a (not necessarily standardized) panel, divisor `T`.
pub fn sample_cov<T: Real>(panel: &TimePanel<T>) -> CovMatrix<T> {
    pearson_cov(panel)
}

/// Time-lagged cross-covariance `C_ij = (1/(T - lag)) sum_a X_ia Y_j,a+lag`.
///
/// The overlap window has length `T - lag`, and the estimate divides by that
/// overlap length rather than `T`.
pub fn lagged_cov<T: Real>(
    panel_x: &TimePanel<T>,
    panel_y: &TimePanel<T>,
    lag: usize,
) -> Result<DMatrix<T>> {
    let t = panel_x.len();
    if panel_y.len() != t {
        return Err(Error::DimensionMismatch {
            context: format!("panels with T = {} and T = {}", t, panel_y.len()),
        });
    }
    if lag >= t {
        return Err(Error::LagOutOfRange { lag, len: t });
    }
    let window = t - lag;
    let x = panel_x.values().columns(0, window);
    let y = panel_y.values().columns(lag, window);
    let mut c = x * y.transpose();
    c.scale_mut(T::one() / T::from_count(window));
    Ok(c)
}

/// Eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns, so `A = V diag(w) V^T`.
pub fn sym_eig<T: Real>(cov: &CovMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    sym_eig_matrix(cov.matrix())
}

/// [`sym_eig`] on a raw symmetric matrix.
pub fn sym_eig_matrix<T: Real>(mat: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let eig = mat.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let values: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Whitens a standardized panel: `X_hat = L^{-1/2} V^T X / sqrt(T)`.
///
/// Eigenvalues at or below `drop_threshold` are discarded; the retained
/// components are ordered by descending eigenvalue and satisfy
/// `X_hat X_hat^T = I` to working precision.
pub fn whiten<T: Real>(panel: &TimePanel<T>, drop_threshold: T) -> Result<WhitenedPanel<T>> {
    let cov = pearson_cov(panel);
    let (eigs, vecs) = sym_eig(&cov);
    let mut retained: Vec<(T, usize)> = eigs
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > drop_threshold)
        .map(|(i, &w)| (w, i))
        .collect();
    if retained.is_empty() {
        return Err(Error::AllEigenvaluesDropped {
            dim: panel.n_series(),
            threshold: drop_threshold.to_f64().unwrap_or(f64::NAN),
        });
    }
    retained.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));

    let k = retained.len();
    let t = panel.len();
    let sqrt_t = T::from_count(t).sqrt();
    // Rows of the projector: v_k^T / sqrt(lambda_k * T).
    let mut proj = DMatrix::zeros(k, panel.n_series());
    for (row, &(w, idx)) in retained.iter().enumerate() {
        let scale = T::one() / (w.sqrt() * sqrt_t);
        for col in 0..panel.n_series() {
            proj[(row, col)] = vecs[(col, idx)] * scale;
        }
    }
    let values = proj * panel.values();
    Ok(WhitenedPanel { values, retained })
}

/// Cross-correlation matrix `G = out_hat * in_hat^T` between whitened panels.
pub fn cross_matrix<T: Real>(
    out_w: &WhitenedPanel<T>,
    in_w: &WhitenedPanel<T>,
) -> Result<CrossMatrix<T>> {
    if out_w.len() != in_w.len() {
        return Err(Error::DimensionMismatch {
            context: format!("whitened panels with T = {} and T = {}", out_w.len(), in_w.len()),
        });
    }
    Ok(CrossMatrix { entries: out_w.values() * in_w.values().transpose() })
}

/// Singular value decomposition `G = U S V^T`.
///
/// Returns singular values in descending order with matching left and right
/// singular vectors as columns of `U` and `V`.
pub fn svd<T: Real>(g: &CrossMatrix<T>) -> (Vec<T>, DMatrix<T>, DMatrix<T>) {
    let mut decomp = g.matrix().clone().svd(true, true);
    decomp.sort_by_singular_values();
    let values: Vec<T> = decomp.singular_values.iter().copied().collect();
    let u = decomp.u.expect("left singular vectors requested");
    let v_t = decomp.v_t.expect("right singular vectors requested");
    (values, u, v_t.transpose())
}

/// Singular values only, descending.
pub fn singular_values<T: Real>(g: &CrossMatrix<T>) -> EmpiricalSpectrum<T> {
    let vals = g.matrix().clone().singular_values();
    EmpiricalSpectrum::new(vals.iter().copied().collect(), SpectrumKind::SingularValues)
}

/// Eigenvalue spectrum of a covariance matrix, descending.
pub fn eigenvalue_spectrum<T: Real>(cov: &CovMatrix<T>) -> EmpiricalSpectrum<T> {
    let (eigs, _) = sym_eig(cov);
    EmpiricalSpectrum::new(eigs, SpectrumKind::Eigenvalues)
}

fn symmetrize<T: Real>(mat: &mut DMatrix<T>) {
    let half = T::cast(0.5);
    for i in 0..mat.nrows() {
        for j in (i + 1)..mat.ncols() {
            let avg = (mat[(i, j)] + mat[(j, i)]) * half;
            mat[(i, j)] = avg;
            mat[(j, i)] = avg;
        }
    }
}
