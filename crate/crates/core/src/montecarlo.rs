//! Seeded synthetic-data generators and empirical-statistics utilities.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed;
//! rows draw from per-row ChaCha substreams so that panels are reproducible
//! bit for bit regardless of generation order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frv::SpectralDensity;
use crate::linalg::{sym_eig_matrix, CovMatrix};
use crate::panel::TimePanel;
use crate::scalar::Real;
use crate::spectra::ArmaParams;

/// Seed for the deterministic generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

/// Histogram request: bin count plus an optional fixed range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec<T: Real> {
    pub bin_count: usize,
    pub range: Option<(T, T)>,
}

impl<T: Real> HistogramSpec<T> {
    pub fn new(bin_count: usize) -> Self {
        Self { bin_count, range: None }
    }

    pub fn with_range(bin_count: usize, lo: T, hi: T) -> Self {
        Self { bin_count, range: Some((lo, hi)) }
    }
}

fn row_rng(seed: Seed, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(row as u64);
    rng
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i:03}")).collect()
}

/// Panel of i.i.d. standard normal entries.
pub fn gen_white_panel<T>(n: usize, t: usize, seed: Seed) -> TimePanel<T>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    let rows: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut rng = row_rng(seed, i);
            (0..t).map(|_| StandardNormal.sample(&mut rng)).collect()
        })
        .collect();
    TimePanel::from_rows(default_labels(n), rows).expect("white panel construction")
}

/// Panel of `n` independent ARMA(q1, q2) paths sharing one parameter set:
/// `Y_a - sum_k b_k Y_{a-k} = sum_k a_k eps_{a-k}`.
///
/// The recursion warms up for `burn_in` steps before recording, which
/// approximates the stationary infinite-past regime; the transient decays
/// geometrically with the AR root closest to the unit circle.
pub fn gen_varma_panel<T>(
    n: usize,
    t: usize,
    params: &ArmaParams<T>,
    burn_in: usize,
    seed: Seed,
) -> Result<TimePanel<T>>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    params.validate()?;
    let a = params.ma();
    let b = params.ar();
    let q2 = a.len() - 1;
    let q1 = b.len();

    let rows: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut rng = row_rng(seed, i);
            let mut eps_hist = vec![T::zero(); q2 + 1];
            let mut y_hist = vec![T::zero(); q1.max(1)];
            let mut out = Vec::with_capacity(t);
            for step in 0..(burn_in + t) {
                let fresh: T = StandardNormal.sample(&mut rng);
                eps_hist.rotate_right(1);
                eps_hist[0] = fresh;
                let mut value = T::zero();
                for (k, &ak) in a.iter().enumerate() {
                    value += ak * eps_hist[k];
                }
                for (k, &bk) in b.iter().enumerate() {
                    value += bk * y_hist[k];
                }
                if q1 > 0 {
                    y_hist.rotate_right(1);
                    y_hist[0] = value;
                }
                if step >= burn_in {
                    out.push(value);
                }
            }
            out
        })
        .collect();
    TimePanel::from_rows(default_labels(n), rows)
}

/// Panel with prescribed spatial covariance `C` and temporal covariance `A`:
/// `Y = C^{1/2} W A^{1/2}` with `W` i.i.d. standard normal.
///
/// Matrix square roots come from the symmetric eigendecomposition; small
/// negative eigenvalues (within `-1e-10` of zero) are clamped.
pub fn gen_correlated_wishart_panel<T>(
    c: &CovMatrix<T>,
    a: &DMatrix<T>,
    seed: Seed,
) -> Result<TimePanel<T>>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    let n = c.dim();
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: format!("temporal covariance is {}x{}", a.nrows(), a.ncols()),
        });
    }
    let t = a.nrows();
    let c_half = psd_sqrt(c.matrix(), "spatial covariance")?;
    let a_half = psd_sqrt(a, "temporal covariance")?;
    let white = gen_white_panel::<T>(n, t, seed);
    let values = &c_half * white.values() * &a_half;
    TimePanel::from_matrix(default_labels(n), values)
}

fn psd_sqrt<T: Real>(mat: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    let diagonal = (0..mat.nrows())
        .all(|i| (0..mat.ncols()).all(|j| i == j || mat[(i, j)] == T::zero()));
    if diagonal {
        let mut out = DMatrix::zeros(mat.nrows(), mat.ncols());
        for i in 0..mat.nrows() {
            let d = mat[(i, i)];
            if d < -T::cast(1e-10) {
                return Err(Error::NotPositiveSemiDefinite {
                    context: format!("{what} has eigenvalue {}", d.to_f64().unwrap_or(f64::NAN)),
                });
            }
            out[(i, i)] = d.max(T::zero()).sqrt();
        }
        return Ok(out);
    }
    let (eigs, vecs) = sym_eig_matrix(mat);
    let scale = eigs.iter().fold(T::zero(), |acc, &e| acc.max(e.abs()));
    let floor = -T::cast(1e-10) * T::one().max(scale);
    let mut roots = Vec::with_capacity(eigs.len());
    for &e in &eigs {
        if e < floor {
            return Err(Error::NotPositiveSemiDefinite {
                context: format!("{what} has eigenvalue {}", e.to_f64().unwrap_or(f64::NAN)),
            });
        }
        roots.push(e.max(T::zero()).sqrt());
    }
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots));
    Ok(&vecs * lam * vecs.transpose())
}

/// Normalized histogram of `values` as a [`SpectralDensity`] (total mass 1).
///
/// Values repeated at least twice (within absolute tolerance `1e-12`) are
/// pulled out as atoms; the remainder is binned.
pub fn empirical_density<T: Real>(
    values: &[T],
    spec: &HistogramSpec<T>,
) -> Result<SpectralDensity<T>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter { context: "no values to bin".into() });
    }
    if spec.bin_count == 0 {
        return Err(Error::InvalidParameter { context: "bin_count must be >= 1".into() });
    }
    let total = T::from_count(values.len());
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));

    // Split ties (beyond tolerance) into atoms.
    let tol = T::cast(1e-12);
    let mut atoms: Vec<(T, T)> = Vec::new();
    let mut loose: Vec<T> = Vec::new();
    let mut run_start = 0usize;
    for i in 1..=sorted.len() {
        let run_over = i == sorted.len() || (sorted[i] - sorted[run_start]).abs() > tol;
        if run_over {
            let count = i - run_start;
            if count >= 2 {
                atoms.push((sorted[run_start], T::from_count(count) / total));
            } else {
                loose.push(sorted[run_start]);
            }
            run_start = i;
        }
    }

    if loose.is_empty() {
        return SpectralDensity::from_atoms(atoms);
    }

    let (lo, hi) = match spec.range {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some(_) => {
            return Err(Error::InvalidParameter { context: "empty histogram range".into() })
        }
        None => {
            let lo = loose[0];
            let hi = *loose.last().unwrap();
            if hi > lo {
                (lo, hi)
            } else {
                (lo - T::cast(0.5), lo + T::cast(0.5))
            }
        }
    };

    let bins = spec.bin_count;
    let width = (hi - lo) / T::from_count(bins);
    let mut counts = vec![T::zero(); bins];
    for &v in &loose {
        if v < lo || v > hi {
            continue;
        }
        let mut idx = ((v - lo) / width).floor().to_usize().unwrap_or(0);
        if idx >= bins {
            idx = bins - 1;
        }
        counts[idx] += T::one();
    }

    // Bin-center grid with flat-top density; edges pinned at zero keeps the
    // trapezoid mass equal to the counted fraction.
    let mut lambdas = Vec::with_capacity(bins + 2);
    let mut rho = Vec::with_capacity(bins + 2);
    let half = T::cast(0.5);
    lambdas.push(lo - width * half);
    rho.push(T::zero());
    for (i, &count) in counts.iter().enumerate() {
        lambdas.push(lo + width * (T::from_count(i) + half));
        rho.push(count / (total * width));
    }
    lambdas.push(hi + width * half);
    rho.push(T::zero());

    SpectralDensity::new(lambdas, rho, atoms)
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and a
/// theoretical density (continuous part plus atoms), which must be
/// normalized to total mass 1 within `1e-3`.
pub fn ks_distance<T: Real>(values: &[T], theoretical: &SpectralDensity<T>) -> Result<T> {
    if values.is_empty() {
        return Err(Error::InvalidParameter { context: "no sample values".into() });
    }
    let cdf = theoretical.cdf();
    let total = cdf.total();
    if (total - T::one()).abs() > T::cast(1e-3) {
        return Err(Error::UnnormalizedDensity { mass: total.to_f64().unwrap_or(f64::NAN) });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let n = T::from_count(sorted.len());

    let empirical = |x: T, from_left: bool| -> T {
        // Count of sample points <= x (or < x when approaching from the left).
        let count = if from_left {
            sorted.partition_point(|&v| v < x)
        } else {
            sorted.partition_point(|&v| v <= x)
        };
        T::from_count(count) / n
    };

    let mut gap = T::zero();
    let mut check = |x: T| {
        // Compare left limits with left limits and right values with right
        // values, so shared jump points are matched side by side.
        let left = (empirical(x, true) - cdf.value_left(x)).abs();
        let right = (empirical(x, false) - cdf.value(x)).abs();
        gap = gap.max(left).max(right);
    };
    for &x in &sorted {
        check(x);
    }
    for pos in cdf.atom_positions() {
        check(pos);
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frv::linspace;
    use crate::spectra;

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn same_seed_same_panel() {
        let a: TimePanel<f64> = gen_white_panel(4, 100, Seed(9));
        let b: TimePanel<f64> = gen_white_panel(4, 100, Seed(9));
        assert_eq!(a.values(), b.values());
        let c: TimePanel<f64> = gen_white_panel(4, 100, Seed(10));
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn white_panel_moments() {
        let p: TimePanel<f64> = gen_white_panel(1, 1_000_000, Seed(1));
        let row = p.row(0);
        let mu = mean(&row);
        let var = row.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / row.len() as f64;
        assert!(mu.abs() < 0.01, "mean {mu}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn distinct_seeds_are_uncorrelated() {
        let t = 1_000_000;
        let a: TimePanel<f64> = gen_white_panel(1, t, Seed(2));
        let b: TimePanel<f64> = gen_white_panel(1, t, Seed(3));
        let (ra, rb) = (a.row(0), b.row(0));
        let dot: f64 = ra.iter().zip(&rb).map(|(x, y)| x * y).sum::<f64>() / t as f64;
        assert!(dot.abs() < 0.01, "cross-correlation {dot}");
    }

    #[test]
    fn varma_panel_matches_known_autocorrelations() {
        let t = 1_000_000;
        // Pure noise: lag-1 autocorrelation vanishes.
        let white = ArmaParams::new(vec![1.0f64], vec![]).unwrap();
        let p = gen_varma_panel(1, t, &white, 256, Seed(5)).unwrap();
        assert!(lag1_autocorr(&p.row(0)).abs() < 0.01);

        // AR(1) with b = 0.5: lag-1 autocorrelation 0.5.
        let ar = ArmaParams::new(vec![1.0f64], vec![0.5]).unwrap();
        let p = gen_varma_panel(1, t, &ar, 1024, Seed(6)).unwrap();
        assert!((lag1_autocorr(&p.row(0)) - 0.5).abs() < 0.01);

        // MA(1) with a = (1, 0.5): lag-1 autocorrelation 0.5/1.25 = 0.4.
        let ma = ArmaParams::new(vec![1.0f64, 0.5], vec![]).unwrap();
        let p = gen_varma_panel(1, t, &ma, 256, Seed(7)).unwrap();
        assert!((lag1_autocorr(&p.row(0)) - 0.4).abs() < 0.01);
    }

    fn lag1_autocorr(xs: &[f64]) -> f64 {
        let mu = mean(xs);
        let var: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
        let cov: f64 = xs.windows(2).map(|w| (w[0] - mu) * (w[1] - mu)).sum();
        cov / var
    }

    #[test]
    fn varma_rows_are_seed_exchangeable() {
        // Row i of an N-row panel equals row 0 of a generator whose stream
        // index matches, because rows derive from per-row substreams.
        let params = ArmaParams::new(vec![1.0f64, 0.3], vec![0.5]).unwrap();
        let p = gen_varma_panel::<f64>(3, 64, &params, 128, Seed(11)).unwrap();
        let q = gen_varma_panel::<f64>(2, 64, &params, 128, Seed(11)).unwrap();
        assert_eq!(p.row(0), q.row(0));
        assert_eq!(p.row(1), q.row(1));
    }

    #[test]
    fn long_path_autocovariance_matches_toeplitz() {
        let params = ArmaParams::new(vec![1.0f64, 0.3], vec![0.5]).unwrap();
        let t = 1_000_000;
        let p = gen_varma_panel(1, t, &params, 2048, Seed(13)).unwrap();
        let xs = p.row(0);
        // Central band of a moderately sized Toeplitz, clear of the edge
        // leakage of the finite-size inverse.
        let size = 256;
        let gamma_theory = spectra::varma_autocov(&params, size).unwrap();
        let mid = size / 2;
        let mu = mean(&xs);
        for lag in 0..3usize {
            let emp: f64 = xs
                .windows(lag + 1)
                .map(|w| (w[0] - mu) * (w[lag] - mu))
                .sum::<f64>()
                / (t - lag) as f64;
            let theory = gamma_theory[(mid, mid + lag)];
            assert!(
                (emp - theory).abs() / theory.abs() < 0.02,
                "lag {lag}: empirical {emp} vs theory {theory}"
            );
        }
    }

    #[test]
    fn correlated_wishart_identity_is_white() {
        let n = 3;
        let t = 50;
        let c = CovMatrix::new(DMatrix::<f64>::identity(n, n)).unwrap();
        let a = DMatrix::<f64>::identity(t, t);
        let p = gen_correlated_wishart_panel(&c, &a, Seed(21)).unwrap();
        let w: TimePanel<f64> = gen_white_panel(n, t, Seed(21));
        for (x, y) in p.values().iter().zip(w.values().iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn correlated_wishart_planted_variance() {
        // C = diag(4, 1, ..., 1) with T >> N puts the top Pearson eigenvalue
        // near 4.
        let n = 6;
        let t = 4096;
        let mut c_mat = DMatrix::<f64>::identity(n, n);
        c_mat[(0, 0)] = 4.0;
        let c = CovMatrix::new(c_mat).unwrap();
        let a = DMatrix::<f64>::identity(t, t);
        let p = gen_correlated_wishart_panel(&c, &a, Seed(33)).unwrap();
        let cov = crate::linalg::sample_cov(&p);
        let spectrum = crate::linalg::eigenvalue_spectrum(&cov);
        let top = spectrum.top().unwrap();
        assert!((top - 4.0).abs() < 0.35, "top eigenvalue {top}");
    }

    #[test]
    fn correlated_wishart_rejects_non_psd() {
        let c = CovMatrix::new(DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]))
            .unwrap();
        let a = DMatrix::<f64>::identity(8, 8);
        assert!(matches!(
            gen_correlated_wishart_panel(&c, &a, Seed(1)),
            Err(Error::NotPositiveSemiDefinite { .. })
        ));
    }

    #[test]
    fn histogram_of_constant_list_is_one_atom() {
        let density = empirical_density(&[2.5f64; 40], &HistogramSpec::new(10)).unwrap();
        assert_eq!(density.atoms(), &[(2.5, 1.0)]);
        assert!((density.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_of_uniform_sample_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let xs: Vec<f64> = (0..1_000_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let density = empirical_density(&xs, &HistogramSpec::new(100)).unwrap();
        assert!((density.mass() - 1.0).abs() < 1e-9);
        for (l, r) in density.lambdas().iter().zip(density.rho()) {
            if *l > 0.01 && *l < 0.99 {
                assert!((r - 1.0).abs() < 0.05, "bin at {l} has height {r}");
            }
        }
    }

    #[test]
    fn histogram_mass_is_exact_for_spectra() {
        let panel: TimePanel<f64> = gen_white_panel(64, 256, Seed(77));
        let std = crate::panel::standardize(&panel).unwrap();
        let cov = crate::linalg::pearson_cov(&std);
        let spectrum = crate::linalg::eigenvalue_spectrum(&cov);
        let density = empirical_density(spectrum.values(), &HistogramSpec::new(30)).unwrap();
        assert!((density.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ks_distance_detects_matched_and_disjoint_samples() {
        // Inverse-CDF draws from the MP law itself drift below 0.02 at 1e5
        // points by Dvoretzky-Kiefer-Wolfowitz.
        let r = 0.25;
        let (lo, hi) = spectra::mp_edges(r);
        let grid = linspace(lo, hi, 4001);
        let density = spectra::mp_density_grid(r, 1.0, &grid).unwrap();
        let n = 100_000;
        let sample: Vec<f64> = (0..n)
            .map(|i| density.quantile_continuous((i as f64 + 0.5) / n as f64))
            .collect();
        let d = ks_distance(&sample, &density).unwrap();
        assert!(d < 0.02, "matched KS {d}");

        // Disjoint supports max out the distance (up to the grid-quadrature
        // normalization error of the density itself).
        let shifted: Vec<f64> = sample.iter().map(|x| x + 10.0).collect();
        let d_far = ks_distance(&shifted, &density).unwrap();
        assert!((d_far - 1.0).abs() < 1e-3, "disjoint KS {d_far}");
    }

    #[test]
    fn ks_distance_handles_atoms() {
        // Half the sample sits on an atom of weight 0.5.
        let grid = linspace(1.0, 2.0, 101);
        let uniform = vec![0.5f64; 101];
        let density = SpectralDensity::new(grid, uniform, vec![(0.0, 0.5)]).unwrap();
        let n = 10_000;
        let mut sample = vec![0.0f64; n / 2];
        for i in 0..n / 2 {
            sample.push(1.0 + (i as f64 + 0.5) / (n / 2) as f64);
        }
        let d = ks_distance(&sample, &density).unwrap();
        assert!(d < 0.01, "atom-mixture KS {d}");
    }

    #[test]
    fn ks_distance_rejects_unnormalized_density() {
        let grid = linspace(0.0, 1.0, 11);
        let density = SpectralDensity::new(grid, vec![0.1; 11], vec![]).unwrap();
        assert!(matches!(
            ks_distance(&[0.5f64], &density),
            Err(Error::UnnormalizedDensity { .. })
        ));
    }
}
