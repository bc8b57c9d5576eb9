//! Free-probability numerics: complex polynomial roots, physical-branch
//! Green's functions, spectral densities, and moment transforms.
//!
//! The conventions used throughout:
//!
//! - Green's function `G(z) = (1/K) Tr (z - H)^{-1}`; on the upper half-plane
//!   it satisfies `Im G(z) < 0` and `z G(z) -> 1` at infinity.
//! - M-transform `M(z) = z G(z) - 1` and its functional inverse, the
//!   N-transform, with `M(N(z)) = N(M(z)) = z`.
//! - Spectral density recovered as `rho(x) = -(1/pi) Im G(x + i eps)`.

use nalgebra::ComplexField;
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectra::ArmaParams;

/// Minimum node count for the stationary-process quadrature.
pub const MIN_QUAD_POINTS: usize = 512;

/// What a [`TransformEvaluator`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformTag {
    Green,
    MTransform,
    NTransform,
}

/// A complex-analytic transform sampled pointwise.
pub trait TransformEvaluator<T: Real> {
    fn tag(&self) -> TransformTag;
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>>;
}

/// Adapts a closure to [`TransformEvaluator`].
pub struct FnEvaluator<F> {
    tag: TransformTag,
    f: F,
}

impl<F> FnEvaluator<F> {
    pub fn new(tag: TransformTag, f: F) -> Self {
        Self { tag, f }
    }
}

impl<T, F> TransformEvaluator<T> for FnEvaluator<F>
where
    T: Real,
    F: Fn(Complex<T>) -> Result<Complex<T>>,
{
    fn tag(&self) -> TransformTag {
        self.tag
    }

    fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        (self.f)(z)
    }
}

/// Dense polynomial with complex coefficients, ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs<T: Real> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> PolyCoeffs<T> {
    /// Builds a polynomial, trimming trailing coefficients that are
    /// negligible against the largest one.
    pub fn new(coeffs: Vec<Complex<T>>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real(coeffs: &[T]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex::from(c)).collect())
    }

    fn trim(&mut self) {
        let scale = self
            .coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.modulus()));
        let tol = scale * T::default_epsilon() * T::cast(16.0);
        while self.coeffs.len() > 1 {
            let last = self.coeffs.last().unwrap().modulus();
            if last > tol {
                break;
            }
            self.coeffs.pop();
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let mut acc = Complex::from(T::zero());
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Evaluates the derivative.
    pub fn eval_derivative(&self, z: Complex<T>) -> Complex<T> {
        let mut acc = Complex::from(T::zero());
        for (k, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * z + c * Complex::from(T::from_count(k));
        }
        acc
    }

    /// Polynomial sum.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex::from(T::zero()); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Self::new(out)
    }

    /// Polynomial product (plain convolution; degrees stay tiny here).
    pub fn mul(&self, other: &Self) -> Self {
        let mut out =
            vec![Complex::from(T::zero()); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }
}

/// All complex roots of `p`, with multiplicity, via the Aberth-Ehrlich
/// iteration followed by one Newton polish per root.
///
/// Each returned root satisfies
/// `|p(root)| <= 1e-8 * max|coeff| * max(1, |root|)^degree`.
pub fn poly_roots<T: Real>(p: &PolyCoeffs<T>) -> Result<Vec<Complex<T>>> {
    poly_roots_seeded(p, None)
}

/// [`poly_roots`] warm-started from a previous solution (used by density
/// sweeps where coefficients change slowly along the grid).
///
/// Falls back to fresh circle guesses if the warm start stalls, so a bad
/// seed can cost time but not correctness.
pub fn poly_roots_seeded<T: Real>(
    p: &PolyCoeffs<T>,
    seeds: Option<&[Complex<T>]>,
) -> Result<Vec<Complex<T>>> {
    let degree = p.degree();
    if degree == 0 {
        return Err(Error::RootFinding {
            degree: 0,
            reason: "degree-0 polynomial has no roots".into(),
        });
    }

    // Work on the monic normalization.
    let lead = p.coeffs[degree];
    let monic = PolyCoeffs {
        coeffs: p.coeffs.iter().map(|&c| c / lead).collect(),
    };

    let circle_guesses = || -> Vec<Complex<T>> {
        // Cauchy-bound circle with an angular offset to break symmetry.
        let bound = monic.coeffs[..degree]
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.modulus()));
        let radius = T::one() + bound;
        (0..degree)
            .map(|k| {
                let angle =
                    T::two_pi() * T::from_count(k) / T::from_count(degree) + T::cast(0.4);
                Complex::new(radius * angle.cos(), radius * angle.sin())
            })
            .collect()
    };

    let mut attempts: Vec<Vec<Complex<T>>> = Vec::with_capacity(2);
    if let Some(prev) = seeds {
        if prev.len() == degree {
            // Seeds must leave the real axis: for real coefficients the
            // iteration is closed over the reals and would never reach a
            // conjugate pair that formed between grid points. The jitter
            // also separates near-duplicate seeds.
            let jittered = prev
                .iter()
                .enumerate()
                .map(|(k, &z)| {
                    let scale = T::one() + z.modulus();
                    let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                    z + Complex::new(
                        T::cast(1e-7) * scale * T::from_count(k + 1),
                        T::cast(1e-5) * scale * sign,
                    )
                })
                .collect();
            attempts.push(jittered);
        }
    }
    attempts.push(circle_guesses());

    let mut last_failure = String::new();
    for guesses in attempts {
        match aberth_attempt(p, &monic, guesses) {
            Ok(roots) => return Ok(roots),
            Err(reason) => last_failure = reason,
        }
    }
    Err(Error::RootFinding { degree, reason: last_failure })
}

fn aberth_attempt<T: Real>(
    original: &PolyCoeffs<T>,
    monic: &PolyCoeffs<T>,
    mut roots: Vec<Complex<T>>,
) -> std::result::Result<Vec<Complex<T>>, String> {
    let degree = monic.degree();
    let tol = T::default_epsilon() * T::cast(64.0);
    let max_iter = 300;
    for _ in 0..max_iter {
        let mut max_step = T::zero();
        for k in 0..degree {
            let zk = roots[k];
            let pv = monic.eval(zk);
            let dv = monic.eval_derivative(zk);
            let newton = if dv.modulus() > T::zero() {
                pv / dv
            } else {
                // Derivative vanished (multiple-root cluster); nudge away.
                Complex::new(T::cast(1e-8), T::cast(1e-8))
            };
            let mut repulsion = Complex::from(T::zero());
            for (j, &zj) in roots.iter().enumerate() {
                if j != k {
                    let diff = zk - zj;
                    if diff.modulus() > T::cast(1e-290) {
                        repulsion += Complex::from(T::one()) / diff;
                    }
                }
            }
            let denom = Complex::from(T::one()) - newton * repulsion;
            let step = if denom.modulus() > T::cast(1e-290) {
                newton / denom
            } else {
                newton
            };
            roots[k] = zk - step;
            max_step = max_step.max(step.modulus() / (T::one() + roots[k].modulus()));
        }
        if max_step < tol {
            break;
        }
    }

    // One Newton step each to meet the residual contract cheaply.
    for root in roots.iter_mut() {
        let dv = monic.eval_derivative(*root);
        if dv.modulus() > T::zero() {
            let step = monic.eval(*root) / dv;
            if step.modulus() < T::one() + root.modulus() {
                *root -= step;
            }
        }
    }

    let coeff_scale = original
        .coeffs
        .iter()
        .fold(T::zero(), |acc, c| acc.max(c.modulus()));
    let residual_tol = T::cast(1e-8).max(T::default_epsilon() * T::cast(100.0));
    for root in &roots {
        let allowed =
            residual_tol * coeff_scale * T::one().max(root.modulus()).powi(degree as i32);
        let resid = original.eval(*root).modulus();
        if !(resid <= allowed) || !root.is_finite() {
            return Err(format!(
                "residual {:e} exceeds contract {:e}",
                resid.to_f64().unwrap_or(f64::NAN),
                allowed.to_f64().unwrap_or(f64::NAN)
            ));
        }
    }
    Ok(roots)
}

/// Picks the Green's-function branch among candidate values at `z`.
///
/// Candidates with negative imaginary part are physical; among several the
/// one closest to `previous` wins (continuity along a density sweep), and
/// without history the one closest to the `1/z` asymptote. Real candidates
/// are admitted when no negative-imaginary one exists, which happens outside
/// the spectral support.
pub fn select_physical_root<T: Real>(
    candidates: &[Complex<T>],
    z: Complex<T>,
    previous: Option<Complex<T>>,
) -> Result<Complex<T>> {
    if candidates.is_empty() {
        return Err(Error::BranchSelection {
            z: format_complex(z),
            reason: "no candidates".into(),
        });
    }
    let physical: Vec<Complex<T>> = candidates
        .iter()
        .copied()
        .filter(|c| c.im < T::zero())
        .collect();
    let pool: Vec<Complex<T>> = if physical.is_empty() {
        let near_real: Vec<Complex<T>> = candidates
            .iter()
            .copied()
            .filter(|c| c.im.abs() <= T::cast(1e-9) * (T::one() + c.modulus()))
            .collect();
        if near_real.is_empty() {
            return Err(Error::BranchSelection {
                z: format_complex(z),
                reason: format!(
                    "no candidate with negative imaginary part among {}",
                    candidates.len()
                ),
            });
        }
        near_real
    } else {
        physical
    };

    let target = match previous {
        Some(prev) => prev,
        None => Complex::from(T::one()) / z,
    };
    Ok(pool
        .into_iter()
        .min_by(|a, b| {
            (*a - target)
                .modulus()
                .partial_cmp(&(*b - target).modulus())
                .expect("finite candidates")
        })
        .expect("non-empty pool"))
}

/// Continuous density on a grid plus discrete atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDensity<T: Real> {
    lambdas: Vec<T>,
    rho: Vec<T>,
    atoms: Vec<(T, T)>,
}

impl<T: Real> SpectralDensity<T> {
    /// Builds a density, validating grid monotonicity and non-negativity.
    pub fn new(lambdas: Vec<T>, rho: Vec<T>, atoms: Vec<(T, T)>) -> Result<Self> {
        if lambdas.len() != rho.len() {
            return Err(Error::DimensionMismatch {
                context: format!("{} grid points, {} density values", lambdas.len(), rho.len()),
            });
        }
        if lambdas.len() < 2 && atoms.is_empty() {
            return Err(Error::InvalidParameter {
                context: "density needs a grid of at least 2 points or an atom".into(),
            });
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter { context: "grid must be ascending".into() });
        }
        if rho.iter().any(|r| *r < T::zero() || !r.is_finite()) {
            return Err(Error::InvalidParameter {
                context: "density values must be finite and non-negative".into(),
            });
        }
        if atoms.iter().any(|(_, w)| *w < T::zero() || !w.is_finite()) {
            return Err(Error::InvalidParameter {
                context: "atom weights must be finite and non-negative".into(),
            });
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atom positions"));
        Ok(Self { lambdas, rho, atoms })
    }

    /// Pure-atom density (empty continuous part).
    pub fn from_atoms(atoms: Vec<(T, T)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter { context: "no atoms".into() });
        }
        let lo = atoms
            .iter()
            .map(|(p, _)| *p)
            .fold(T::zero(), |a, b| a.min(b));
        let hi = atoms
            .iter()
            .map(|(p, _)| *p)
            .fold(T::zero(), |a, b| a.max(b));
        let pad = T::one().max(hi - lo);
        Self::new(
            vec![lo - pad, hi + pad],
            vec![T::zero(), T::zero()],
            atoms,
        )
    }

    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    /// Trapezoid mass of the continuous part.
    pub fn continuous_mass(&self) -> T {
        let mut mass = T::zero();
        for i in 1..self.lambdas.len() {
            mass += (self.rho[i] + self.rho[i - 1])
                * (self.lambdas[i] - self.lambdas[i - 1])
                * T::cast(0.5);
        }
        mass
    }

    /// Total mass: continuous part plus atom weights.
    pub fn mass(&self) -> T {
        self.continuous_mass() + self.atoms.iter().map(|(_, w)| *w).sum::<T>()
    }

    /// Drops atoms and rescales the continuous part to unit mass.
    pub fn continuous_normalized(&self) -> Result<Self> {
        let mass = self.continuous_mass();
        if mass <= T::zero() {
            return Err(Error::UnnormalizedDensity { mass: 0.0 });
        }
        let inv = T::one() / mass;
        Self::new(
            self.lambdas.clone(),
            self.rho.iter().map(|&r| r * inv).collect(),
            Vec::new(),
        )
    }

    /// CDF table for repeated distance evaluations.
    pub fn cdf(&self) -> CdfTable<T> {
        let mut cum = Vec::with_capacity(self.lambdas.len());
        let mut acc = T::zero();
        cum.push(T::zero());
        for i in 1..self.lambdas.len() {
            acc += (self.rho[i] + self.rho[i - 1])
                * (self.lambdas[i] - self.lambdas[i - 1])
                * T::cast(0.5);
            cum.push(acc);
        }
        CdfTable { xs: self.lambdas.clone(), cum, atoms: self.atoms.clone() }
    }

    /// Inverse of the normalized continuous CDF (piecewise-linear).
    pub fn quantile_continuous(&self, p: T) -> T {
        let table = self.cdf();
        let total = *table.cum.last().unwrap();
        let target = p.clamp(T::zero(), T::one()) * total;
        let idx = match table
            .cum
            .iter()
            .position(|&c| c >= target)
        {
            Some(0) => return table.xs[0],
            Some(i) => i,
            None => return *table.xs.last().unwrap(),
        };
        let (c0, c1) = (table.cum[idx - 1], table.cum[idx]);
        let (x0, x1) = (table.xs[idx - 1], table.xs[idx]);
        if c1 > c0 {
            x0 + (target - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x0
        }
    }
}

/// Precomputed CDF of a [`SpectralDensity`].
#[derive(Debug, Clone)]
pub struct CdfTable<T: Real> {
    xs: Vec<T>,
    cum: Vec<T>,
    atoms: Vec<(T, T)>,
}

impl<T: Real> CdfTable<T> {
    /// Total mass.
    pub fn total(&self) -> T {
        *self.cum.last().unwrap() + self.atoms.iter().map(|(_, w)| *w).sum::<T>()
    }

    /// Right-continuous CDF value at `x`.
    pub fn value(&self, x: T) -> T {
        self.continuous_value(x)
            + self
                .atoms
                .iter()
                .filter(|(p, _)| *p <= x)
                .map(|(_, w)| *w)
                .sum::<T>()
    }

    /// Left limit of the CDF at `x` (atoms strictly below `x`).
    pub fn value_left(&self, x: T) -> T {
        self.continuous_value(x)
            + self
                .atoms
                .iter()
                .filter(|(p, _)| *p < x)
                .map(|(_, w)| *w)
                .sum::<T>()
    }

    /// CDF with atoms at exactly `x` counted at half weight (mid-jump value).
    pub fn value_mid(&self, x: T) -> T {
        let mut acc = self.continuous_value(x);
        for &(p, w) in &self.atoms {
            if p < x {
                acc += w;
            } else if p == x {
                acc += w * T::cast(0.5);
            }
        }
        acc
    }

    fn continuous_value(&self, x: T) -> T {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return T::zero();
        }
        if x >= self.xs[n - 1] {
            return self.cum[n - 1];
        }
        // Grids are small (<= a few thousand); binary search keeps distance
        // loops cheap.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x0, x1) = (self.xs[lo], self.xs[hi]);
        let (r0, r1) = (rho_from_cum(&self.xs, &self.cum, lo), rho_from_cum(&self.xs, &self.cum, hi));
        let frac = (x - x0) / (x1 - x0);
        let r_at = r0 + (r1 - r0) * frac;
        self.cum[lo] + (r0 + r_at) * T::cast(0.5) * (x - x0)
    }

    /// Positions where the CDF jumps.
    pub fn atom_positions(&self) -> impl Iterator<Item = T> + '_ {
        self.atoms.iter().map(|(p, _)| *p)
    }
}

// Recovers the nodal density implied by the cumulative table; keeps CdfTable
// self-contained without storing rho twice.
fn rho_from_cum<T: Real>(xs: &[T], cum: &[T], idx: usize) -> T {
    // Derivative of the piecewise-quadratic cumulative is piecewise-linear;
    // reconstruct the node value from neighboring segment averages.
    let n = xs.len();
    let seg_mean = |a: usize, b: usize| (cum[b] - cum[a]) / (xs[b] - xs[a]);
    if idx == 0 {
        let m = seg_mean(0, 1);
        let m_next = if n > 2 { seg_mean(1, 2) } else { m };
        (m - (m_next - m) * T::cast(0.5)).max(T::zero())
    } else if idx == n - 1 {
        let m = seg_mean(n - 2, n - 1);
        let m_prev = if n > 2 { seg_mean(n - 3, n - 2) } else { m };
        (m + (m - m_prev) * T::cast(0.5)).max(T::zero())
    } else {
        let left = seg_mean(idx - 1, idx);
        let right = seg_mean(idx, idx + 1);
        (left + right) * T::cast(0.5)
    }
}

/// Extracts the spectral density from a Green's-function evaluator.
///
/// `rho(x) = -(1/pi) Im G(x + i eps)`; grid points where `eps |Im G|` spikes
/// above `0.1` are reported as atoms with the residue estimate `eps |Im G|`,
/// and the matching Lorentzian bump is removed from the continuous part.
pub fn density_from_green<T, E>(
    green: &E,
    grid: &[T],
    eps: T,
) -> Result<SpectralDensity<T>>
where
    T: Real,
    E: TransformEvaluator<T>,
{
    if green.tag() != TransformTag::Green {
        return Err(Error::InvalidParameter {
            context: "density extraction expects a Green's-function evaluator".into(),
        });
    }
    if eps <= T::zero() {
        return Err(Error::InvalidParameter { context: "eps must be positive".into() });
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            context: "grid must be ascending with at least 2 points".into(),
        });
    }

    let mut rho = Vec::with_capacity(grid.len());
    let mut pole_weight = Vec::with_capacity(grid.len());
    for &x in grid {
        let g = green.eval(Complex::new(x, eps))?;
        let density = (-g.im / T::pi()).max(T::zero());
        rho.push(density);
        pole_weight.push(eps * g.im.abs());
    }

    // Atom detection: local maxima of the residue estimate above threshold.
    let mut atoms: Vec<(T, T)> = Vec::new();
    let threshold = T::cast(0.1);
    for i in 0..grid.len() {
        let w = pole_weight[i];
        if w <= threshold {
            continue;
        }
        let left = if i > 0 { pole_weight[i - 1] } else { T::zero() };
        let right = if i + 1 < grid.len() { pole_weight[i + 1] } else { T::zero() };
        if w >= left && w >= right {
            atoms.push((grid[i], w));
        }
    }

    // Excise each detected Lorentzian so the continuous mass is not counted
    // twice.
    for &(pos, w) in &atoms {
        for (i, &x) in grid.iter().enumerate() {
            let d = x - pos;
            let lorentz = w * eps / (T::pi() * (d * d + eps * eps));
            rho[i] = (rho[i] - lorentz).max(T::zero());
        }
    }

    SpectralDensity::new(grid.to_vec(), rho, atoms)
}

/// M-transform of the identity matrix: `M(z) = 1/(z - 1)`.
pub fn m_transform_identity<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    let shifted = z - Complex::from(T::one());
    if shifted.modulus() < T::cast(1e-290) {
        return Err(Error::EvaluatorDomain {
            z: format_complex(z),
            reason: "pole of the identity M-transform".into(),
        });
    }
    Ok(Complex::from(T::one()) / shifted)
}

/// M-transform of the stationary-process autocovariance with power spectrum
/// `f`: the thermodynamic limit of the Toeplitz spectrum gives
/// `M(z) = (1/2pi) Int f(w) / (z - f(w)) dw`.
///
/// Uniform trapezoid quadrature (spectrally accurate for this periodic
/// integrand), with node doubling until successive estimates agree.
pub fn m_transform_stationary<T: Real>(
    params: &ArmaParams<T>,
    z: Complex<T>,
    quad_points: usize,
) -> Result<Complex<T>> {
    params.validate()?;
    let n0 = quad_points.max(MIN_QUAD_POINTS);
    let (f_min, f_max) = params.power_spectrum_range();
    if z.im.abs() < T::cast(1e-12) * (T::one() + z.re.abs())
        && z.re >= f_min - T::cast(1e-9)
        && z.re <= f_max + T::cast(1e-9)
    {
        return Err(Error::EvaluatorDomain {
            z: format_complex(z),
            reason: "point lies on the spectral support of the process".into(),
        });
    }

    let quad = |n: usize| -> Complex<T> {
        let mut acc = Complex::from(T::zero());
        let step = T::two_pi() / T::from_count(n);
        for j in 0..n {
            let omega = -T::pi() + step * T::from_count(j);
            let f = params.power_spectrum(omega);
            acc += Complex::from(f) / (z - Complex::from(f));
        }
        acc / Complex::from(T::from_count(n))
    };

    let mut n = n0;
    let mut prev = quad(n);
    for _ in 0..6 {
        n *= 2;
        let next = quad(n);
        let disagreement = (next - prev).modulus();
        let target = T::cast(1e-8) * (T::one().max(next.modulus()));
        if disagreement <= target {
            return Ok(next);
        }
        prev = next;
        if disagreement <= T::cast(1e-6) && n >= 16 * n0 {
            return Ok(next);
        }
    }
    let final_check = (quad(2 * n) - prev).modulus();
    if final_check <= T::cast(1e-6) {
        Ok(prev)
    } else {
        Err(Error::QuadratureNonConvergence {
            nodes: n,
            disagreement: final_check.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Functional inverse of an M-transform evaluator: finds `z` with
/// `M(z) = w` by damped secant iteration from `seed_guess`.
pub fn n_transform_numeric<T, E>(
    m: &E,
    w: Complex<T>,
    seed_guess: Complex<T>,
) -> Result<Complex<T>>
where
    T: Real,
    E: TransformEvaluator<T>,
{
    if m.tag() != TransformTag::MTransform {
        return Err(Error::InvalidParameter {
            context: "functional inversion expects an M-transform evaluator".into(),
        });
    }
    let tol = T::cast(1e-13) * (T::one() + w.modulus());
    let max_iter = 200;

    let mut z0 = seed_guess;
    let mut f0 = m.eval(z0)? - w;
    if f0.modulus() <= tol {
        return Ok(z0);
    }
    let nudge = T::cast(1e-6) * (T::one() + z0.modulus());
    let mut z1 = z0 + Complex::new(nudge, nudge * T::cast(0.5));
    let mut f1 = m.eval(z1)? - w;

    for iteration in 0..max_iter {
        if f1.modulus() <= tol {
            return Ok(z1);
        }
        let df = f1 - f0;
        if df.modulus() < T::cast(1e-290) {
            return Err(Error::InversionNonConvergence {
                iterations: iteration,
                residual: f1.modulus().to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut step = f1 * (z1 - z0) / df;
        // Damped update: halve the step until the residual improves.
        let mut accepted = None;
        for _ in 0..12 {
            let candidate = z1 - step;
            match m.eval(candidate) {
                Ok(val) => {
                    let res = val - w;
                    if res.modulus() < f1.modulus() {
                        accepted = Some((candidate, res));
                        break;
                    }
                }
                Err(_) => {}
            }
            step = step * Complex::from(T::cast(0.5));
        }
        match accepted {
            Some((z_new, f_new)) => {
                z0 = z1;
                f0 = f1;
                z1 = z_new;
                f1 = f_new;
            }
            None => {
                return Err(Error::InversionNonConvergence {
                    iterations: iteration,
                    residual: f1.modulus().to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }
    Err(Error::InversionNonConvergence {
        iterations: max_iter,
        residual: f1.modulus().to_f64().unwrap_or(f64::NAN),
    })
}

pub(crate) fn format_complex<T: Real>(z: Complex<T>) -> String {
    format!(
        "{}{}{}i",
        z.re.to_f64().unwrap_or(f64::NAN),
        if z.im >= T::zero() { "+" } else { "-" },
        z.im.abs().to_f64().unwrap_or(f64::NAN)
    )
}

/// Uniformly spaced grid of `points` values covering `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    assert!(points >= 2, "grid needs at least two points");
    let step = (hi - lo) / T::from_count(points - 1);
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + step * T::from_count(i)
            }
        })
        .collect()
}
