//! Closed-form and semi-closed-form benchmark spectra.
//!
//! Contents:
//!
//! - Marchenko-Pastur law for sample covariance matrices, with optional
//!   variance scale;
//! - the no-correlation singular-value benchmark for cross-correlation
//!   matrices of two whitened panels (atoms at 0 and possibly 1 plus a
//!   continuous band);
//! - the "MP squared" singular-value density for raw, unwhitened panels,
//!   solved from the cubic master equation of two free sample-Gram factors;
//! - Toeplitz autocovariance builders for MA/AR/ARMA processes, used as
//!   finite-size oracles;
//! - the ARMA(1,1) closed-form M-transform and the spectral density of a
//!   sample covariance matrix driven by a shared ARMA(1,1) shock, obtained
//!   by solving a degree-6 polynomial master equation per grid point.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frv::{
    poly_roots, poly_roots_seeded, select_physical_root, PolyCoeffs, SpectralDensity,
};
use crate::scalar::Real;

/// Rectangularity ratio `r = N / T` of a sample covariance problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpParams<T: Real> {
    pub r: T,
}

impl<T: Real> MpParams<T> {
    pub fn new(r: T) -> Result<Self> {
        if r <= T::zero() || !r.is_finite() {
            return Err(Error::InvalidParameter { context: format!("r = {r} must be positive") });
        }
        Ok(Self { r })
    }
}

/// Aspect ratios `n = N/T`, `m = M/T` of the two panels in the SVD benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SvdBenchParams<T: Real> {
    pub n: T,
    pub m: T,
}

impl<T: Real> SvdBenchParams<T> {
    pub fn new(n: T, m: T) -> Result<Self> {
        let ok = |x: T| x > T::zero() && x < T::one() && x.is_finite();
        if !ok(n) || !ok(m) {
            return Err(Error::InvalidParameter {
                context: format!("aspect ratios n = {n}, m = {m} must lie in (0, 1)"),
            });
        }
        Ok(Self { n, m })
    }
}

/// ARMA(q1, q2) shock parameters: `a` holds the MA side `a_0..a_q2`
/// (with `a_0 > 0`), `b` the AR side `b_1..b_q1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmaParams<T: Real> {
    a: Vec<T>,
    b: Vec<T>,
}

impl<T: Real> ArmaParams<T> {
    /// Validates and stores the parameters.
    ///
    /// Weak stationarity requires the AR polynomial `1 - sum b_k x^k` to
    /// have no roots on or inside the unit circle.
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self> {
        let params = Self { a, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() {
            return Err(Error::InvalidParameter { context: "MA coefficients empty".into() });
        }
        if self.a[0] <= T::zero() {
            return Err(Error::InvalidParameter {
                context: format!("a0 = {} must be positive", self.a[0]),
            });
        }
        if self.a.iter().chain(self.b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter { context: "non-finite coefficient".into() });
        }
        validate_ar_stationarity(&self.b)
    }

    pub fn ma(&self) -> &[T] {
        &self.a
    }

    pub fn ar(&self) -> &[T] {
        &self.b
    }

    /// ARMA(1,1) accessors `(a0, a1, b1)`, zero-filled when absent.
    pub fn as_arma11(&self) -> (T, T, T) {
        (
            self.a[0],
            self.a.get(1).copied().unwrap_or_else(T::zero),
            self.b.first().copied().unwrap_or_else(T::zero),
        )
    }

    /// Power spectrum `f(w) = |sum_a a_k e^{ikw}|^2 / |1 - sum_b b_k e^{ikw}|^2`.
    pub fn power_spectrum(&self, omega: T) -> T {
        let phase = |k: usize| {
            let arg = omega * T::from_count(k);
            Complex::new(arg.cos(), arg.sin())
        };
        let num: Complex<T> = self
            .a
            .iter()
            .enumerate()
            .map(|(k, &c)| phase(k) * c)
            .fold(Complex::from(T::zero()), |acc, t| acc + t);
        let den: Complex<T> = self
            .b
            .iter()
            .enumerate()
            .map(|(k, &c)| phase(k + 1) * c)
            .fold(Complex::from(T::one()), |acc, t| acc - t);
        num.norm_sqr() / den.norm_sqr()
    }

    /// Range of the power spectrum over frequencies.
    ///
    /// Exact at the endpoints for orders up to one; higher orders fall back
    /// to a dense scan.
    pub fn power_spectrum_range(&self) -> (T, T) {
        if self.a.len() <= 2 && self.b.len() <= 1 {
            let f0 = self.power_spectrum(T::zero());
            let fpi = self.power_spectrum(T::pi());
            return (f0.min(fpi), f0.max(fpi));
        }
        let scan = 2048;
        let mut lo = self.power_spectrum(T::zero());
        let mut hi = lo;
        for j in 1..=scan {
            let omega = T::pi() * T::from_count(j) / T::from_count(scan);
            let f = self.power_spectrum(omega);
            lo = lo.min(f);
            hi = hi.max(f);
        }
        (lo, hi)
    }

    /// Mean of the power spectrum, `(1/2pi) Int f(w) dw`; equals the process
    /// variance and the first spectral moment of the autocovariance.
    pub fn mean_power(&self) -> T {
        // Closed form: variance of the ARMA output. For q1 <= 1 use the exact
        // expression; otherwise integrate.
        if self.b.is_empty() {
            return self.a.iter().map(|&c| c * c).sum();
        }
        if self.b.len() == 1 && self.a.len() <= 2 {
            let (a0, a1, b1) = self.as_arma11();
            return (a0 * a0 + a1 * a1 + T::cast(2.0) * a0 * a1 * b1)
                / (T::one() - b1 * b1);
        }
        let n = 4096;
        let mut acc = T::zero();
        for j in 0..n {
            let omega = -T::pi() + T::two_pi() * T::from_count(j) / T::from_count(n);
            acc += self.power_spectrum(omega);
        }
        acc / T::from_count(n)
    }
}

/// Marchenko-Pastur support edges `(1 -+ sqrt(r))^2`.
pub fn mp_edges<T: Real>(r: T) -> (T, T) {
    let sq = r.sqrt();
    ((T::one() - sq) * (T::one() - sq), (T::one() + sq) * (T::one() + sq))
}

/// Marchenko-Pastur density at `lambda` for ratio `r` (unit variance):
/// `rho = sqrt((l+ - l)(l - l-)) / (2 pi r l)` on the support, else 0.
pub fn mp_density<T: Real>(lambda: T, r: T) -> T {
    let (lo, hi) = mp_edges(r);
    if lambda <= lo || lambda >= hi || lambda <= T::zero() {
        return T::zero();
    }
    ((hi - lambda) * (lambda - lo)).sqrt() / (T::two_pi() * r * lambda)
}

/// Marchenko-Pastur density with variance scale: the spectrum of a sample
/// covariance of variance-`scale` noise.
pub fn mp_density_scaled<T: Real>(lambda: T, r: T, scale: T) -> T {
    mp_density(lambda / scale, r) / scale
}

/// Samples the (scaled) MP law on a grid, adding the `(1 - 1/r)` zero atom
/// when `r > 1`.
pub fn mp_density_grid<T: Real>(r: T, scale: T, grid: &[T]) -> Result<SpectralDensity<T>> {
    if r <= T::zero() || scale <= T::zero() {
        return Err(Error::InvalidParameter {
            context: "MP parameters must be positive".into(),
        });
    }
    let rho: Vec<T> = grid.iter().map(|&l| mp_density_scaled(l, r, scale)).collect();
    let atoms = if r > T::one() {
        vec![(T::zero(), T::one() - T::one() / r)]
    } else {
        Vec::new()
    };
    SpectralDensity::new(grid.to_vec(), rho, atoms)
}

/// Green's function of the sample-covariance (Wishart) spectrum with ratio
/// `r`:
///
/// `G(z) = (z + r - 1 - sqrt(z - l-) sqrt(z - l+)) / (2 r z)`
///
/// with principal square-root branches. The factor cuts cancel below `l-`,
/// leaving the only branch cut on the support `[l-, l+]`, and `G ~ 1/z` at
/// infinity; real arguments inside the support return the boundary value
/// from the upper half-plane.
pub fn mp_green<T: Real>(z: Complex<T>, r: T) -> Complex<T> {
    let (lo, hi) = mp_edges(r);
    let root = (z - Complex::from(lo)).sqrt() * (z - Complex::from(hi)).sqrt();
    (z + Complex::from(r - T::one()) - root) / (z * Complex::from(T::cast(2.0) * r))
}

/// M-transform of the sample-covariance spectrum, `M(z) = z G(z) - 1`; it
/// satisfies `M z = (1 + M)(1 + r M)`.
pub fn mp_m_transform<T: Real>(z: Complex<T>, r: T) -> Complex<T> {
    z * mp_green(z, r) - Complex::from(T::one())
}

/// Support edges of the SVD benchmark in the singular-value variable.
pub fn svd_benchmark_edges<T: Real>(params: &SvdBenchParams<T>) -> (T, T) {
    let (n, m) = (params.n, params.m);
    let x = (n * (T::one() - m)).sqrt();
    let y = (m * (T::one() - n)).sqrt();
    (((x - y) * (x - y)).sqrt(), ((x + y) * (x + y)).sqrt())
}

/// Singular-value density of the cross-correlation matrix between two
/// independent whitened panels.
///
/// Atoms: `(0, 1 - min(n, m))` and, when `n + m > 1`, `(1, n + m - 1)`.
/// Continuous part on the band `[sqrt(s-), sqrt(s+)]`:
/// `rho(s) = sqrt((s^2 - s-)(s+ - s^2)) / (pi s (1 - s^2))` with
/// `s+- = n + m - 2nm +- 2 sqrt(nm(1-n)(1-m))`.
pub fn svd_benchmark_density<T: Real>(
    params: &SvdBenchParams<T>,
    grid: &[T],
) -> Result<SpectralDensity<T>> {
    let (n, m) = (params.n, params.m);
    let s_lo;
    let s_hi;
    {
        let x = (n * (T::one() - m)).sqrt();
        let y = (m * (T::one() - n)).sqrt();
        s_lo = (x - y) * (x - y);
        s_hi = (x + y) * (x + y);
    }
    let rho: Vec<T> = grid
        .iter()
        .map(|&s| {
            let s2 = s * s;
            if s <= T::zero() || s2 <= s_lo || s2 >= s_hi || s >= T::one() {
                return T::zero();
            }
            let radicand = (s2 - s_lo) * (s_hi - s2);
            radicand.sqrt() / (T::pi() * s * (T::one() - s2))
        })
        .collect();

    let mut atoms = vec![(T::zero(), T::one() - n.min(m))];
    let excess = n + m - T::one();
    if excess > T::zero() {
        atoms.push((T::one(), excess));
    }
    SpectralDensity::new(grid.to_vec(), rho, atoms)
}

/// Singular-value density of the cross-correlation matrix between two raw
/// (standardized but unwhitened) independent panels.
///
/// The squared singular values follow the free product of the two dual
/// sample-Gram spectra; each factor has N-transform `(1+z)(r+z)/z`, so the
/// product's M-transform solves the cubic `(1+M)(n+M)(m+M) = M w` per
/// squared singular value `w`. A `(0, 1 - min(n, m))` atom carries the rank
/// deficit.
pub fn mp2_density<T: Real>(
    params: &SvdBenchParams<T>,
    grid: &[T],
) -> Result<SpectralDensity<T>> {
    let (n, m) = (params.n, params.m);
    let mut rho_rev: Vec<T> = Vec::with_capacity(grid.len());
    let mut prev_g: Option<Complex<T>> = None;
    let mut prev_roots: Option<Vec<Complex<T>>> = None;
    for &s in grid.iter().rev() {
        if s <= T::cast(1e-12) {
            rho_rev.push(T::zero());
            continue;
        }
        let w = s * s;
        // (1+M)(n+M)(m+M) - Mw, ascending in M.
        let coeffs = vec![
            Complex::from(n * m),
            Complex::from(n + m + n * m - w),
            Complex::from(T::one() + n + m),
            Complex::from(T::one()),
        ];
        let poly = PolyCoeffs::new(coeffs);
        let roots = poly_roots_seeded(&poly, prev_roots.as_deref())?;
        let z = Complex::from(w);
        let candidates: Vec<Complex<T>> = roots
            .iter()
            .map(|&mm| (Complex::from(T::one()) + mm) / z)
            .collect();
        let g = select_physical_root(&candidates, z, prev_g)?;
        prev_g = Some(g);
        prev_roots = Some(roots);
        let rho_w = (-g.im / T::pi()).max(T::zero());
        // Change of variables to the singular value: rho_s(s) = 2 s rho_w(s^2).
        rho_rev.push(T::cast(2.0) * s * rho_w);
    }
    rho_rev.reverse();
    let atoms = vec![(T::zero(), T::one() - n.min(m))];
    SpectralDensity::new(grid.to_vec(), rho_rev, atoms)
}

/// Toeplitz autocovariance of an MA(q) process:
/// `A_ab = sum_k a_k a_{k + |a-b|}` (zero beyond lag `q`).
pub fn vma_autocov<T: Real>(a: &[T], t: usize) -> DMatrix<T> {
    let q = a.len().saturating_sub(1);
    let mut gamma = vec![T::zero(); q + 1];
    for (d, g) in gamma.iter_mut().enumerate() {
        for k in 0..=(q - d) {
            *g += a[k] * a[k + d];
        }
    }
    DMatrix::from_fn(t, t, |i, j| {
        let d = i.abs_diff(j);
        if d <= q {
            gamma[d]
        } else {
            T::zero()
        }
    })
}

/// Weak stationarity: `1 - sum b_k x^k` has no roots on or inside the unit
/// circle.
fn validate_ar_stationarity<T: Real>(b: &[T]) -> Result<()> {
    if b.is_empty() {
        return Ok(());
    }
    if b.len() == 1 {
        if b[0].abs() >= T::one() {
            return Err(Error::NonStationary {
                context: format!("|b1| = {} >= 1", b[0].abs()),
            });
        }
        return Ok(());
    }
    let mut coeffs = vec![T::one()];
    coeffs.extend(b.iter().map(|&bk| -bk));
    let poly = PolyCoeffs::from_real(&coeffs);
    let roots = poly_roots(&poly).map_err(|_| Error::NonStationary {
        context: "AR polynomial root finding failed".into(),
    })?;
    if roots.iter().any(|r| r.modulus() <= T::one() + T::cast(1e-9)) {
        return Err(Error::NonStationary {
            context: "AR polynomial has a root on or inside the unit circle".into(),
        });
    }
    Ok(())
}

/// Autocovariance of an AR(q) process with scale `a0`: the inverse of the
/// MA autocovariance with mapped coefficients `(1/a0, -b_1/a0, ...)`.
pub fn var_autocov<T: Real>(b: &[T], a0: T, t: usize) -> Result<DMatrix<T>> {
    if a0 <= T::zero() {
        return Err(Error::InvalidParameter { context: format!("a0 = {a0} must be positive") });
    }
    validate_ar_stationarity(b)?;
    let mut mapped = Vec::with_capacity(b.len() + 1);
    mapped.push(T::one() / a0);
    mapped.extend(b.iter().map(|&bk| -bk / a0));
    let a2 = vma_autocov(&mapped, t);
    let chol = a2.cholesky().ok_or(Error::NonStationary {
        context: "mapped Toeplitz is singular (non-stationary AR parameters)".into(),
    })?;
    Ok(chol.inverse())
}

/// Autocovariance of an ARMA(q1, q2) process: `(A4)^{-1} A1` with
/// `A4` the MA autocovariance of `(1, -b_1, ...)` and `A1` that of `a`.
///
/// The product is not symmetric, but it is similar to a symmetric
/// positive-definite matrix, so its spectrum is real and positive.
pub fn varma_autocov<T: Real>(params: &ArmaParams<T>, t: usize) -> Result<DMatrix<T>> {
    params.validate()?;
    let a1 = vma_autocov(params.ma(), t);
    if params.ar().is_empty() {
        return Ok(a1);
    }
    let mut a4_coeffs = Vec::with_capacity(params.ar().len() + 1);
    a4_coeffs.push(T::one());
    a4_coeffs.extend(params.ar().iter().map(|&bk| -bk));
    let a4 = vma_autocov(&a4_coeffs, t);
    let chol = a4.cholesky().ok_or(Error::NonStationary {
        context: "AR-side Toeplitz is singular (non-stationary parameters)".into(),
    })?;
    Ok(chol.solve(&a1))
}

/// Eigenvalues of the ARMA autocovariance via the symmetric similar form
/// `L^{-1} A1 L^{-T}` (with `A4 = L L^T`), ascending.
pub fn varma_autocov_spectrum<T: Real>(params: &ArmaParams<T>, t: usize) -> Result<Vec<T>> {
    params.validate()?;
    let a1 = vma_autocov(params.ma(), t);
    if params.ar().is_empty() {
        let (eigs, _) = crate::linalg::sym_eig_matrix(&a1);
        return Ok(eigs);
    }
    let mut a4_coeffs = Vec::with_capacity(params.ar().len() + 1);
    a4_coeffs.push(T::one());
    a4_coeffs.extend(params.ar().iter().map(|&bk| -bk));
    let a4 = vma_autocov(&a4_coeffs, t);
    let chol = a4.cholesky().ok_or(Error::NonStationary {
        context: "AR-side Toeplitz is singular".into(),
    })?;
    let l = chol.l();
    let y = l
        .clone()
        .solve_lower_triangular(&a1)
        .ok_or(Error::SingularMatrix { context: "triangular solve failed".into() })?;
    let w = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::SingularMatrix { context: "triangular solve failed".into() })?;
    let (eigs, _) = crate::linalg::sym_eig_matrix(&w);
    Ok(eigs)
}

/// Closed-form M-transform of the ARMA(1,1) autocovariance in the
/// infinite-size limit:
///
/// `M(z) = [-a0 a1 + z k / (sqrt((1-b1)^2 z - (a0+a1)^2) sqrt((1+b1)^2 z - (a0-a1)^2))] / (a0 a1 + b1 z)`
///
/// with `k = a0 a1 + (a0^2 + a1^2) b1 + a0 a1 b1^2`. Principal square-root
/// branches make `M(z) -> 0` at infinity and place the only branch cut on
/// the power-spectrum support `[f_min, f_max]`.
pub fn varma11_m_transform<T: Real>(
    z: Complex<T>,
    a0: T,
    a1: T,
    b1: T,
) -> Result<Complex<T>> {
    validate_arma11(a0, b1)?;
    if a1 == T::zero() && b1 == T::zero() {
        // White noise scaled by a0^2.
        let scale = Complex::from(a0 * a0);
        let shifted = z - scale;
        if shifted.modulus() < T::cast(1e-290) {
            return Err(Error::EvaluatorDomain {
                z: crate::frv::format_complex(z),
                reason: "pole of the white-noise M-transform".into(),
            });
        }
        return Ok(scale / shifted);
    }

    let params = ArmaParams::new(vec![a0, a1], vec![b1])?;
    let (f_min, f_max) = params.power_spectrum_range();
    if z.im == T::zero() && z.re >= f_min && z.re <= f_max {
        return Err(Error::EvaluatorDomain {
            z: crate::frv::format_complex(z),
            reason: "point lies on the branch cut [f_min, f_max]".into(),
        });
    }

    let p = a0 * a1;
    let k = p + (a0 * a0 + a1 * a1) * b1 + p * b1 * b1;
    let alpha = (T::one() - b1) * (T::one() - b1);
    let beta = (T::one() + b1) * (T::one() + b1);
    let s = (a0 + a1) * (a0 + a1);
    let t = (a0 - a1) * (a0 - a1);

    let denom = Complex::from(p) + z * Complex::from(b1);
    if denom.modulus() < T::cast(1e-12) * (T::one() + z.modulus()) {
        return Err(Error::EvaluatorDomain {
            z: crate::frv::format_complex(z),
            reason: "removable singularity a0 a1 + b1 z = 0; evaluate nearby instead".into(),
        });
    }
    let root_product =
        (z * Complex::from(alpha) - Complex::from(s)).sqrt()
            * (z * Complex::from(beta) - Complex::from(t)).sqrt();
    if root_product.modulus() < T::cast(1e-290) {
        return Err(Error::EvaluatorDomain {
            z: crate::frv::format_complex(z),
            reason: "branch point of the square-root product".into(),
        });
    }
    Ok((Complex::from(-p) + z * Complex::from(k) / root_product) / denom)
}

/// Hint for the spectral support of [`varma11_density`]: `[0, f_max (1 + sqrt(r))^2]`
/// with a small safety margin.
pub fn varma11_support_hint<T: Real>(a0: T, a1: T, b1: T, r: T) -> Result<(T, T)> {
    let params = ArmaParams::new(vec![a0, a1], vec![b1])?;
    let (_, f_max) = params.power_spectrum_range();
    let sq = r.sqrt();
    Ok((T::zero(), f_max * (T::one() + sq) * (T::one() + sq) * T::cast(1.05)))
}

/// Spectral density of the sample covariance of `N` independent series of
/// length `T = N/r` driven by a common ARMA(1,1) shock.
///
/// For each grid point the master equation `r M = M_A(z / (r (1 + M)))` is
/// rationalized into a polynomial of degree at most six in `M`, solved, and
/// the physical branch selected by sign, closed-form residual, and
/// continuity along a descending sweep. The density follows from
/// `G = (1 + M)/z`.
pub fn varma11_density<T: Real>(
    grid: &[T],
    a0: T,
    a1: T,
    b1: T,
    r: T,
) -> Result<SpectralDensity<T>> {
    validate_arma11(a0, b1)?;
    if r <= T::zero() || r >= T::one() {
        return Err(Error::InvalidParameter {
            context: format!("rectangularity ratio r = {r} must lie in (0, 1)"),
        });
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            context: "grid must be ascending with at least 2 points".into(),
        });
    }

    let p = a0 * a1;
    let k = p + (a0 * a0 + a1 * a1) * b1 + p * b1 * b1;
    let alpha = (T::one() - b1) * (T::one() - b1);
    let beta = (T::one() + b1) * (T::one() + b1);
    let s = (a0 + a1) * (a0 + a1);
    let t = (a0 - a1) * (a0 - a1);
    let mp_case = a1 == T::zero() && b1 == T::zero();

    let mut rho_rev: Vec<T> = Vec::with_capacity(grid.len());
    let mut prev_g: Option<Complex<T>> = None;
    let mut prev_roots: Option<Vec<Complex<T>>> = None;
    let mut failures = 0usize;
    for &lambda in grid.iter().rev() {
        if lambda <= T::cast(1e-12) {
            rho_rev.push(T::zero());
            continue;
        }
        let z = Complex::from(lambda);
        let poly = if mp_case {
            // Master equation with the white-noise M-transform:
            // a0^2 r M^2 + (a0^2 (1 + r) - z) M + a0^2 = 0.
            let scale = a0 * a0;
            PolyCoeffs::new(vec![
                Complex::from(scale),
                Complex::from(scale * (T::one() + r)) - z,
                Complex::from(scale * r),
            ])
        } else {
            build_varma11_master_poly(z, p, k, alpha, beta, s, t, r, b1)
        };
        let roots = match poly_roots_seeded(&poly, prev_roots.as_deref()) {
            Ok(roots) => roots,
            Err(_) => poly_roots(&poly)?,
        };

        // Reject rationalization artifacts: genuine solutions satisfy the
        // unsquared master equation through the closed-form M-transform.
        let survivors: Vec<Complex<T>> = if mp_case {
            roots.clone()
        } else {
            let passes = |mm: &Complex<T>| -> bool {
                let one_plus = Complex::from(T::one()) + *mm;
                if one_plus.modulus() < T::cast(1e-10) {
                    return false;
                }
                let u = z / (one_plus * Complex::from(r));
                match varma11_m_transform(u, a0, a1, b1) {
                    Ok(m_at_u) => {
                        let residual = (*mm * Complex::from(r) - m_at_u).modulus();
                        residual <= T::cast(1e-6) * (T::one() + (*mm * Complex::from(r)).modulus())
                    }
                    // Inconclusive near the cut; let continuity decide.
                    Err(_) => true,
                }
            };
            let kept: Vec<Complex<T>> = roots.iter().copied().filter(|mm| passes(mm)).collect();
            if kept.is_empty() {
                roots.clone()
            } else {
                kept
            }
        };

        let candidates: Vec<Complex<T>> = survivors
            .iter()
            .map(|&mm| (Complex::from(T::one()) + mm) / z)
            .collect();
        match select_physical_root(&candidates, z, prev_g) {
            Ok(g) => {
                prev_g = Some(g);
                rho_rev.push((-g.im / T::pi()).max(T::zero()));
            }
            Err(err) => {
                // Tolerate isolated selection failures (band edges) but not
                // systematic ones.
                failures += 1;
                if failures > grid.len() / 20 + 2 {
                    return Err(err);
                }
                rho_rev.push(T::zero());
            }
        }
        prev_roots = Some(roots);
    }
    rho_rev.reverse();
    SpectralDensity::new(grid.to_vec(), rho_rev, Vec::new())
}

/// Rationalized ARMA(1,1) master equation as a polynomial in `M`:
/// `P1(M)^2 B(M) C(M) - z^2 k^2 (1 + M)^2` with
/// `P1 = p (1 + M)(1 + r M) + b1 z M`, `B = alpha z - s r (1 + M)`,
/// `C = beta z - t r (1 + M)`.
#[allow(clippy::too_many_arguments)]
fn build_varma11_master_poly<T: Real>(
    z: Complex<T>,
    p: T,
    k: T,
    alpha: T,
    beta: T,
    s: T,
    t: T,
    r: T,
    b1: T,
) -> PolyCoeffs<T> {
    let p1 = PolyCoeffs::new(vec![
        Complex::from(p),
        Complex::from(p * (T::one() + r)) + z * Complex::from(b1),
        Complex::from(p * r),
    ]);
    let b_poly = PolyCoeffs::new(vec![
        z * Complex::from(alpha) - Complex::from(s * r),
        Complex::from(-(s * r)),
    ]);
    let c_poly = PolyCoeffs::new(vec![
        z * Complex::from(beta) - Complex::from(t * r),
        Complex::from(-(t * r)),
    ]);
    let zk2 = z * z * Complex::from(k * k);
    let sub = PolyCoeffs::new(vec![zk2, zk2 * Complex::from(T::cast(2.0)), zk2])
        .scale(Complex::from(T::cast(-1.0)));
    p1.mul(&p1).mul(&b_poly).mul(&c_poly).add(&sub)
}

fn validate_arma11<T: Real>(a0: T, b1: T) -> Result<()> {
    if a0 <= T::zero() || !a0.is_finite() {
        return Err(Error::InvalidParameter { context: format!("a0 = {a0} must be positive") });
    }
    if b1.abs() >= T::one() {
        return Err(Error::NonStationary { context: format!("|b1| = {} >= 1", b1.abs()) });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frv::{linspace, m_transform_stationary};
    use crate::scalar::complex;
    use approx::assert_relative_eq;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        complex(re, im)
    }

    #[test]
    fn mp_edges_values() {
        let (lo, hi) = mp_edges(0.25);
        assert_relative_eq!(lo, 0.25, epsilon = 1e-15);
        assert_relative_eq!(hi, 2.25, epsilon = 1e-15);
        let (lo1, hi1) = mp_edges(1.0);
        assert_relative_eq!(lo1, 0.0, epsilon = 1e-15);
        assert_relative_eq!(hi1, 4.0, epsilon = 1e-15);
        // Panel-sized ratio: r = 52/118.
        let r = 52.0 / 118.0;
        let (lo2, hi2) = mp_edges(r);
        let sq = r.sqrt();
        assert_relative_eq!(lo2, (1.0 - sq) * (1.0 - sq), epsilon = 1e-15);
        assert_relative_eq!(hi2, (1.0 + sq) * (1.0 + sq), epsilon = 1e-15);
        assert!((lo2 - 0.1135).abs() < 5e-4);
        assert!((hi2 - 2.7679).abs() < 5e-4);
    }

    #[test]
    fn mp_density_point_values() {
        assert_relative_eq!(
            mp_density(2.0, 1.0),
            1.0 / (2.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
        assert_eq!(mp_density(3.0, 0.25), 0.0);
        assert_eq!(mp_density(0.1, 0.25), 0.0);
    }

    #[test]
    fn mp_density_integrates_to_one() {
        for r in [0.1, 0.25, 0.5, 0.9] {
            let (lo, hi) = mp_edges(r);
            let grid = linspace(lo, hi, 20_001);
            let mass: f64 = grid
                .windows(2)
                .map(|w| 0.5 * (mp_density(w[0], r) + mp_density(w[1], r)) * (w[1] - w[0]))
                .sum();
            assert!((mass - 1.0).abs() < 1e-4, "mass {mass} at r = {r}");
        }
    }

    #[test]
    fn mp_m_transform_inverts_wishart_n_transform() {
        // N(w) = (1 + w)(1 + r w)/w must satisfy M(N(w)) = w. The identity
        // holds on the physical sheet |w| < 1/sqrt(r); beyond it N folds onto
        // the second quadratic branch (w <-> 1/(r w) give the same z).
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for &r in &[0.25, 0.5, 0.75] {
            let sheet = 0.85 / r.sqrt();
            for _ in 0..20 {
                let modulus = rng.random_range(0.1..sheet);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let w = c(modulus * angle.cos(), modulus * angle.sin());
                if w.im.abs() < 0.05 {
                    continue;
                }
                let n_w = (Complex::from(1.0) + w) * (Complex::from(1.0) + w * Complex::from(r))
                    / w;
                let m = mp_m_transform(n_w, r);
                assert!((m - w).modulus() < 1e-9, "r={r}, w={w}, m={m}");
            }
        }
    }

    #[test]
    fn mp_green_matches_density_on_the_support() {
        let r = 0.25;
        for lambda in [0.3, 0.7, 1.0, 1.5, 2.2] {
            let g = mp_green(c(lambda, 0.0), r);
            let rho = -g.im / std::f64::consts::PI;
            assert_relative_eq!(rho, mp_density(lambda, r), epsilon = 1e-12);
        }
        // Off the support: real values, asymptotically 1/z.
        let far = mp_green(c(500.0, 0.0), r);
        assert!(far.im.abs() < 1e-12);
        assert!((far.re - 1.0 / 500.0).abs() < 1e-4);
    }

    #[test]
    fn svd_benchmark_band_limits() {
        // Small-ratio limit: edges approach |sqrt(m) - sqrt(n)|, sqrt(m) + sqrt(n).
        let params = SvdBenchParams::new(1e-4f64, 4e-4).unwrap();
        let (lo, hi) = svd_benchmark_edges(&params);
        let (sn, sm) = (params.n.sqrt(), params.m.sqrt());
        assert!((lo - (sm - sn).abs()).abs() < 1e-3);
        assert!((hi - (sm + sn)).abs() < 1e-3);

        // Equal ratios: band starts at zero, tops at 2 sqrt(m (1 - m)).
        let eq = SvdBenchParams::new(0.3f64, 0.3).unwrap();
        let (lo_eq, hi_eq) = svd_benchmark_edges(&eq);
        assert!(lo_eq.abs() < 1e-12);
        assert_relative_eq!(hi_eq, 2.0 * (0.3f64 * 0.7).sqrt(), epsilon = 1e-12);

        // m -> 1 collapses the band toward sqrt(1 - n).
        let narrow = SvdBenchParams::new(0.3f64, 0.999).unwrap();
        let (lo_n, hi_n) = svd_benchmark_edges(&narrow);
        let target = (1.0f64 - 0.3).sqrt();
        assert!((lo_n - target).abs() < 0.05);
        assert!((hi_n - target).abs() < 0.05);
    }

    #[test]
    fn svd_benchmark_mass_and_atoms() {
        let params = SvdBenchParams::new(37.0 / 118.0, 15.0 / 118.0).unwrap();
        let grid = linspace(0.0, 1.0, 8_001);
        let density = svd_benchmark_density(&params, &grid).unwrap();
        assert_eq!(density.atoms().len(), 1);
        let (pos, w) = density.atoms()[0];
        assert_eq!(pos, 0.0);
        assert_relative_eq!(w, 1.0 - 15.0 / 118.0, epsilon = 1e-15);
        assert!((density.mass() - 1.0).abs() < 1e-3, "mass {}", density.mass());

        // n + m > 1 adds the unit atom with weight n + m - 1.
        let big = SvdBenchParams::new(0.7f64, 0.6).unwrap();
        let density_big = svd_benchmark_density(&big, &grid).unwrap();
        let unit_atom = density_big
            .atoms()
            .iter()
            .find(|(p, _)| (*p - 1.0).abs() < 1e-12)
            .expect("unit atom present");
        assert_relative_eq!(unit_atom.1, 0.3, epsilon = 1e-12);
        assert!((density_big.mass() - 1.0).abs() < 5e-3);
    }

    #[test]
    fn mp2_density_normalizes() {
        let params = SvdBenchParams::new(0.25f64, 0.25).unwrap();
        let grid = linspace(0.0, 1.2, 4_001);
        let density = mp2_density(&params, &grid).unwrap();
        assert!((density.mass() - 1.0).abs() < 1e-3, "mass {}", density.mass());
        assert_eq!(density.atoms(), &[(0.0, 0.75)]);
    }

    #[test]
    fn mp2_support_shrinks_with_ratios() {
        // As n, m -> 0 the band collapses toward zero; its upper edge tracks
        // sqrt(n) + sqrt(m), so quartering the ratios halves the edge.
        let grid = linspace(0.0, 1.2, 4_001);
        let upper_edge = |ratio: f64| -> f64 {
            let params = SvdBenchParams::new(ratio, ratio).unwrap();
            let density = mp2_density(&params, &grid).unwrap();
            density
                .lambdas()
                .iter()
                .zip(density.rho())
                .filter(|(_, r)| **r > 1e-6)
                .map(|(l, _)| *l)
                .fold(0.0, f64::max)
        };
        let edge_1 = upper_edge(0.01);
        let edge_2 = upper_edge(0.0025);
        assert!((edge_1 - 0.2).abs() < 0.02, "edge {edge_1} should sit near 0.2");
        assert!((edge_2 - 0.1).abs() < 0.02, "edge {edge_2} should sit near 0.1");
        assert!(edge_2 < edge_1);
    }

    #[test]
    fn vma_autocov_known_matrices() {
        let a = vma_autocov(&[2.0f64], 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 4.0 } else { 0.0 };
                assert_relative_eq!(a[(i, j)], expect, epsilon = 1e-15);
            }
        }
        // Direct expectation of <Y_a Y_b> for an MA(1) with (a0, a1).
        let (a0, a1) = (1.3f64, -0.7);
        let m = vma_autocov(&[a0, a1], 5);
        for i in 0..5usize {
            for j in 0..5usize {
                let expect = match i.abs_diff(j) {
                    0 => a0 * a0 + a1 * a1,
                    1 => a0 * a1,
                    _ => 0.0,
                };
                assert_relative_eq!(m[(i, j)], expect, epsilon = 1e-14);
            }
        }
        let ones = vma_autocov(&[1.0f64, 1.0], 3);
        let expect = [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(ones[(i, j)], expect[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn var_autocov_identity_and_inverse_property() {
        let ident = var_autocov(&[], 1.0f64, 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(ident[(i, j)], expect, epsilon = 1e-12);
            }
        }
        // var_autocov is the inverse of the mapped MA autocovariance.
        let (b1, a0) = (0.5f64, 1.0);
        let t = 128;
        let var = var_autocov(&[b1], a0, t).unwrap();
        let mapped = vma_autocov(&[1.0 / a0, -b1 / a0], t);
        let prod = &var * &mapped;
        for i in 0..t {
            for j in 0..t {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (prod[(i, j)] - expect).abs() < 1e-9,
                    "inverse check failed at ({i},{j}): {}",
                    prod[(i, j)]
                );
            }
        }
    }

    #[test]
    fn var_autocov_rejects_unit_root() {
        assert!(matches!(
            var_autocov(&[1.0f64], 1.0, 16),
            Err(Error::NonStationary { .. })
        ));
    }

    #[test]
    fn varma_autocov_reduces_to_vma() {
        let params = ArmaParams::new(vec![1.0f64, 0.4], vec![]).unwrap();
        let a = varma_autocov(&params, 8).unwrap();
        let direct = vma_autocov(&[1.0, 0.4], 8);
        for (x, y) in a.iter().zip(direct.iter()) {
            assert_relative_eq!(x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn varma_autocov_spectrum_is_real_positive() {
        let params = ArmaParams::new(vec![1.0f64, 0.3], vec![0.5]).unwrap();
        let eigs = varma_autocov_spectrum(&params, 128).unwrap();
        assert!(eigs.iter().all(|&l| l > 0.0));
        // Mean eigenvalue approaches the process variance.
        let mean: f64 = eigs.iter().sum::<f64>() / eigs.len() as f64;
        let variance = params.mean_power();
        assert!(
            (mean - variance).abs() / variance < 0.02,
            "mean {mean} vs variance {variance}"
        );
    }

    #[test]
    fn varma_spectrum_mean_matches_quadrature_at_512() {
        let params = ArmaParams::new(vec![1.0f64, 0.3], vec![0.5]).unwrap();
        let eigs = varma_autocov_spectrum(&params, 512).unwrap();
        let mean: f64 = eigs.iter().sum::<f64>() / eigs.len() as f64;
        let n = 1 << 16;
        let quad_mean: f64 = (0..n)
            .map(|j| {
                let omega = -std::f64::consts::PI
                    + 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                params.power_spectrum(omega)
            })
            .sum::<f64>()
            / n as f64;
        assert!(
            (mean - quad_mean).abs() / quad_mean < 0.01,
            "mean {mean} vs quadrature {quad_mean}"
        );
    }

    #[test]
    fn varma11_m_transform_white_noise_limit() {
        let z = c(3.0, 0.4);
        let got = varma11_m_transform(z, 1.5, 0.0, 0.0).unwrap();
        let scale = 1.5f64 * 1.5;
        let expected = Complex::from(scale) / (z - Complex::from(scale));
        assert!((got - expected).modulus() < 1e-14);
    }

    #[test]
    fn varma11_m_transform_matches_quadrature() {
        use rand::Rng;
        use rand::SeedableRng;
        let (a0, a1, b1) = (1.0f64, 0.3, 0.5);
        let params = ArmaParams::new(vec![a0, a1], vec![b1]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let z = c(
                rng.random_range(-3.0..8.0),
                rng.random_range(0.05..2.0)
                    * if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 },
            );
            let closed = varma11_m_transform(z, a0, a1, b1).unwrap();
            let quad = m_transform_stationary(&params, z, 512).unwrap();
            assert!(
                (closed - quad).modulus() < 1e-6,
                "z = {z}: closed {closed} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn varma11_m_transform_at_spec_point() {
        let closed = varma11_m_transform(c(2.0, 0.1), 1.0, 0.3, 0.5).unwrap();
        let params = ArmaParams::new(vec![1.0f64, 0.3], vec![0.5]).unwrap();
        let quad = m_transform_stationary(&params, c(2.0, 0.1), 512).unwrap();
        assert!((closed - quad).modulus() < 1e-6);
    }

    #[test]
    fn varma11_m_transform_large_z_moment() {
        // z M(z) -> first moment = mean of the power spectrum.
        let (a0, a1, b1) = (1.0f64, 0.3, 0.5);
        let params = ArmaParams::new(vec![a0, a1], vec![b1]).unwrap();
        let mean = params.mean_power();
        let z = c(5e6, 1.0);
        let m = varma11_m_transform(z, a0, a1, b1).unwrap();
        assert!(((z * m).re - mean).abs() < 1e-6 * mean.max(1.0));
    }

    #[test]
    fn varma11_m_transform_rejects_cut_points() {
        let params = ArmaParams::new(vec![1.0f64, 0.3], vec![0.5]).unwrap();
        let (f_min, f_max) = params.power_spectrum_range();
        let mid = 0.5 * (f_min + f_max);
        assert!(matches!(
            varma11_m_transform(c(mid, 0.0), 1.0, 0.3, 0.5),
            Err(Error::EvaluatorDomain { .. })
        ));
    }

    #[test]
    fn varma11_density_reduces_to_scaled_mp() {
        let r = 0.25;
        for a0 in [1.0f64, 1.5] {
            let scale = a0 * a0;
            let (lo, hi) = mp_edges(r);
            let grid = linspace(0.5 * lo * scale, 1.1 * hi * scale, 512);
            let density = varma11_density(&grid, a0, 0.0, 0.0, r).unwrap();
            for (l, rho) in grid.iter().zip(density.rho()) {
                let expect = mp_density_scaled(*l, r, scale);
                assert!(
                    (rho - expect).abs() < 1e-6,
                    "a0 = {a0}, lambda = {l}: {rho} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn varma11_density_master_equation_consistency() {
        // With white-noise shocks the master equation must reproduce the MP
        // self-consistency M z = (1 + M)(1 + r M); check the general
        // degree-6 path at a VMA(1) point against the quadrature transform
        // by re-substituting the solved M.
        let (a0, a1, b1) = (1.0f64, 0.4, 0.0);
        let r = 0.3;
        let grid = linspace(0.05, 4.0, 400);
        let density = varma11_density(&grid, a0, a1, b1, r).unwrap();
        assert!((density.mass() - 1.0).abs() < 2e-3, "mass {}", density.mass());
    }

    #[test]
    fn varma11_density_mass_for_arma11() {
        let grid = linspace(1e-3, 12.0, 2048);
        let density = varma11_density(&grid, 1.0, 0.3, 0.5, 52.0 / 118.0).unwrap();
        assert!((density.mass() - 1.0).abs() < 1e-3, "mass {}", density.mass());
        assert!(density.rho().iter().all(|&r| r >= 0.0));
        // Single band: nonzero region is contiguous.
        let nonzero: Vec<usize> = density
            .rho()
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > 1e-9)
            .map(|(i, _)| i)
            .collect();
        let (first, last) = (nonzero[0], *nonzero.last().unwrap());
        assert_eq!(nonzero.len(), last - first + 1, "support is a single band");
    }

    #[test]
    fn arma_params_reject_non_stationary() {
        assert!(matches!(
            ArmaParams::new(vec![1.0f64], vec![1.0]),
            Err(Error::NonStationary { .. })
        ));
        assert!(matches!(
            ArmaParams::new(vec![1.0f64], vec![0.6, 0.6]),
            Err(Error::NonStationary { .. })
        ));
        assert!(ArmaParams::new(vec![1.0f64], vec![0.3, 0.2]).is_ok());
        assert!(matches!(
            ArmaParams::new(vec![-1.0f64], vec![]),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn master_equation_reduction_with_identity_cross() {
        // General doubly correlated relation z = r M N_A(r M) N_C(M) with
        // C = identity (N_C(w) = 1 + 1/w) must reduce to the single-equation
        // form r M = M_A(z / (r (1 + M))). Verified numerically for a VMA(1)
        // autocovariance at random complex points.
        use rand::Rng;
        use rand::SeedableRng;
        let params = ArmaParams::new(vec![1.0f64, 0.4], vec![]).unwrap();
        let r = 0.3;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let m_eval = crate::frv::FnEvaluator::new(
            crate::frv::TransformTag::MTransform,
            |z: C| m_transform_stationary(&params, z, 512),
        );
        for _ in 0..10 {
            let m = c(rng.random_range(0.1..0.6), rng.random_range(-0.6..-0.1));
            // N_A(r m) via numeric inversion seeded from the asymptote
            // N_A(w) ~ mean_power / w for small w.
            let rm = m * Complex::from(r);
            let seed = Complex::from(params.mean_power()) / rm;
            let n_a = crate::frv::n_transform_numeric(&m_eval, rm, seed).unwrap();
            let n_c = Complex::from(1.0) + Complex::from(1.0) / m;
            let z = rm * n_a * n_c;
            // Single-equation form evaluated at that z.
            let u = z / (Complex::from(r) * (Complex::from(1.0) + m));
            let rhs = m_transform_stationary(&params, u, 512).unwrap();
            assert!(
                (rhs - rm).modulus() < 1e-8,
                "master equation mismatch: {rhs} vs {rm}"
            );
        }
    }
}
