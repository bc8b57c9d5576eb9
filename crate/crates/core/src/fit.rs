//! ARMA(1,1) parameter estimation from empirical spectra and significance
//! flagging of singular values against the no-correlation benchmark.
//!
//! The fit minimizes a Cramer-von Mises distance between the empirical CDF
//! and the model density with a multistart Nelder-Mead simplex; the distance
//! is smooth in the parameters, which derivative-free descent needs, and the
//! Kolmogorov-Smirnov statistic is reported alongside for diagnostics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frv::{linspace, SpectralDensity};
use crate::linalg::{cross_matrix, singular_values, whiten, EmpiricalSpectrum};
use crate::montecarlo::{gen_white_panel, ks_distance, Seed};
use crate::panel::standardize;
use crate::scalar::Real;
use crate::spectra::{
    svd_benchmark_edges, varma11_density, varma11_support_hint, ArmaParams, SvdBenchParams,
};

/// Grid resolution used when evaluating candidate densities inside the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitGrid<T: Real> {
    /// Number of grid points per density evaluation.
    pub points: usize,
    /// Upper end of the grid; `None` derives it from the data and the
    /// candidate's support bound.
    pub lambda_max: Option<T>,
}

impl<T: Real> Default for FitGrid<T> {
    fn default() -> Self {
        Self { points: 257, lambda_max: None }
    }
}

/// One multistart descent: where it started and where it ended.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry<T: Real> {
    pub init: (T, T, T),
    /// Final objective; `None` when every evaluation from this start failed.
    pub objective: Option<T>,
    pub evaluations: usize,
}

/// Outcome of [`fit_varma11`].
#[derive(Debug, Clone, Serialize)]
pub struct FitResult<T: Real> {
    pub params: ArmaParams<T>,
    /// Cramer-von Mises distance at the optimum.
    pub objective: T,
    /// Kolmogorov-Smirnov distance at the optimum, for diagnostics.
    pub ks_statistic: T,
    pub evaluations: usize,
    pub converged: bool,
    pub multistart_trace: Vec<TraceEntry<T>>,
}

/// A singular value that escaped the benchmark band.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlaggedValue<T: Real> {
    /// 0-based rank in the descending spectrum.
    pub rank: usize,
    pub value: T,
    pub benchmark_edge: T,
    /// Amount beyond `edge + margin`.
    pub excess: T,
}

/// Report of [`flag_significant`].
#[derive(Debug, Clone, Serialize)]
pub struct SignificanceReport<T: Real> {
    pub flagged: Vec<FlaggedValue<T>>,
    pub benchmark_edge: T,
    pub margin: T,
    pub threshold_policy: String,
}

/// Cramer-von Mises distance `sqrt(Int (F_n - F)^2 dF)` between an empirical
/// spectrum and a theoretical density (continuous part plus atoms).
///
/// Both CDFs take mid-jump values at shared discontinuities, so a sample
/// drawn exactly on the theoretical atoms has distance zero. The density
/// must carry total mass 1 within `1e-3`.
pub fn spectral_distance<T: Real>(
    empirical: &EmpiricalSpectrum<T>,
    theoretical: &SpectralDensity<T>,
) -> Result<T> {
    if empirical.is_empty() {
        return Err(Error::InvalidParameter { context: "empty spectrum".into() });
    }
    let cdf = theoretical.cdf();
    let total = cdf.total();
    if (total - T::one()).abs() > T::cast(1e-3) {
        return Err(Error::UnnormalizedDensity { mass: total.to_f64().unwrap_or(f64::NAN) });
    }

    let mut sorted: Vec<T> = empirical.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite spectrum"));
    let n = T::from_count(sorted.len());

    // Breakpoints where either CDF jumps.
    let mut points: Vec<T> = sorted.clone();
    points.extend(cdf.atom_positions());
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    points.dedup();

    let emp_right = |x: T| -> T {
        T::from_count(sorted.partition_point(|&v| v <= x)) / n
    };
    let emp_mid = |x: T| -> T {
        let below = sorted.partition_point(|&v| v < x);
        let at = sorted.partition_point(|&v| v <= x) - below;
        (T::from_count(below) + T::from_count(at) * T::cast(0.5)) / n
    };

    // Continuous segments: F_n is constant, F rises continuously, so the
    // integral in u = F(x) is exact per segment.
    let segment = |fn_value: T, u_lo: T, u_hi: T| -> T {
        let a = fn_value - u_lo;
        let b = fn_value - u_hi;
        (a * a * a - b * b * b) / T::cast(3.0)
    };

    let mut omega_sq = T::zero();
    // Leading tail: F_n = 0 from mass 0 up to the first breakpoint.
    omega_sq += segment(T::zero(), T::zero(), cdf.value_left(points[0]));
    for w in points.windows(2) {
        omega_sq += segment(emp_right(w[0]), cdf.value(w[0]), cdf.value_left(w[1]));
    }
    let last = *points.last().unwrap();
    omega_sq += segment(emp_right(last), cdf.value(last), total);

    // Atom contributions with mid-jump values on both sides.
    for &(pos, weight) in theoretical.atoms() {
        let theory_mid = cdf.value_left(pos) + weight * T::cast(0.5);
        let diff = emp_mid(pos) - theory_mid;
        omega_sq += weight * diff * diff;
    }
    Ok(omega_sq.max(T::zero()).sqrt())
}

/// Estimates ARMA(1,1) shock parameters from an eigenvalue spectrum.
///
/// Runs `multistart` Nelder-Mead descents (the default 27 covers the
/// coarse grid `a0 in {0.5, 1, 2}`, `a1, b1 in {-0.5, 0, 0.5}`) in parallel
/// and keeps the best. The search box is `a0 in [1e-3, 1e3]`, `|a1| <= 1e3`,
/// `|b1| <= 0.99`.
///
/// The spectrum only identifies parameters up to the joint sign flip
/// `(a1, b1) -> (-a1, -b1)`, which shifts the shock's power spectrum by half
/// a period without moving the eigenvalue density; results are canonicalized
/// to `b1 >= 0` (and `a1 >= 0` when `b1` vanishes).
pub fn fit_varma11<T: Real>(
    empirical: &EmpiricalSpectrum<T>,
    r: T,
    grid: &FitGrid<T>,
    multistart: usize,
) -> Result<FitResult<T>> {
    if empirical.is_empty() {
        return Err(Error::InvalidParameter { context: "empty spectrum".into() });
    }
    if empirical.values().iter().any(|&v| v < T::zero()) {
        return Err(Error::InvalidParameter {
            context: "eigenvalue spectrum must be non-negative".into(),
        });
    }
    if r <= T::zero() || r >= T::one() {
        return Err(Error::InvalidParameter {
            context: format!("rectangularity ratio r = {r} must lie in (0, 1)"),
        });
    }
    if multistart == 0 {
        return Err(Error::InvalidParameter { context: "multistart must be >= 1".into() });
    }
    if grid.points < 16 {
        return Err(Error::InvalidParameter { context: "fit grid too coarse".into() });
    }

    let data_max = empirical.top().unwrap_or_else(T::one);
    let objective = |x: &[T; 3]| -> Option<T> {
        let (a0, a1, b1) = (x[0], x[1], x[2]);
        if !(a0 >= T::cast(1e-3) && a0 <= T::cast(1e3)) {
            return None;
        }
        if a1.abs() > T::cast(1e3) || b1.abs() > T::cast(0.99) {
            return None;
        }
        let hint_hi = varma11_support_hint(a0, a1, b1, r).ok()?.1;
        let hi = data_max.max(hint_hi) * T::cast(1.02);
        let lambdas = linspace(hi * T::cast(1e-6), hi, grid.points);
        let density = varma11_density(&lambdas, a0, a1, b1, r).ok()?;
        spectral_distance(empirical, &density).ok()
    };

    let starts = multistart_points::<T>(multistart);
    let runs: Vec<(TraceEntry<T>, Option<([T; 3], T, bool)>)> = starts
        .par_iter()
        .map(|&(a0, a1, b1)| {
            let outcome = nelder_mead(&objective, [a0, a1, b1]);
            let trace = TraceEntry {
                init: (a0, a1, b1),
                objective: outcome.best_f,
                evaluations: outcome.evaluations,
            };
            let best = outcome
                .best_f
                .map(|f| (outcome.best_x, f, outcome.converged));
            (trace, best)
        })
        .collect();

    let mut traces = Vec::with_capacity(runs.len());
    let mut evaluations = 0usize;
    let mut best: Option<([T; 3], T, bool)> = None;
    for (trace, candidate) in runs {
        evaluations += trace.evaluations;
        traces.push(trace);
        if let Some((x, f, conv)) = candidate {
            let better = match &best {
                Some((_, f_best, _)) => f < *f_best,
                None => true,
            };
            if better {
                best = Some((x, f, conv));
            }
        }
    }
    let (mut x, mut f, converged) = best.ok_or(Error::AllStartsFailed {
        starts: starts.len(),
        reason: "no start produced a finite objective".into(),
    })?;

    // Canonical sign: the joint flip leaves the density invariant.
    let flipped = [x[0], -x[1], -x[2]];
    let wants_flip =
        x[2] < -T::cast(1e-9) || (x[2].abs() <= T::cast(1e-9) && x[1] < -T::cast(1e-9));
    if wants_flip {
        if let Some(f_flip) = objective(&flipped) {
            if f_flip <= f + T::cast(1e-9) {
                x = flipped;
                f = f_flip;
            }
        }
    }

    let params = ArmaParams::new(vec![x[0], x[1]], vec![x[2]])?;
    let hint_hi = varma11_support_hint(x[0], x[1], x[2], r)?.1;
    let hi = data_max.max(hint_hi) * T::cast(1.02);
    let lambdas = linspace(hi * T::cast(1e-6), hi, grid.points.max(1024));
    let density = varma11_density(&lambdas, x[0], x[1], x[2], r)?;
    let ks = ks_distance(empirical.values(), &density)?;

    Ok(FitResult {
        params,
        objective: f,
        ks_statistic: ks,
        evaluations,
        converged,
        multistart_trace: traces,
    })
}

fn multistart_points<T: Real>(count: usize) -> Vec<(T, T, T)> {
    let mut points = Vec::with_capacity(count);
    for &a0 in &[1.0, 0.5, 2.0] {
        for &a1 in &[0.0, -0.5, 0.5] {
            for &b1 in &[0.0, -0.5, 0.5] {
                points.push((T::cast(a0), T::cast(a1), T::cast(b1)));
            }
        }
    }
    if count <= points.len() {
        points.truncate(count);
        return points;
    }
    // Deterministic extra starts beyond the canonical 27.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    while points.len() < count {
        points.push((
            T::cast(rng.random_range(0.25..3.0)),
            T::cast(rng.random_range(-0.9..0.9)),
            T::cast(rng.random_range(-0.9..0.9)),
        ));
    }
    points
}

struct NmOutcome<T: Real> {
    best_x: [T; 3],
    best_f: Option<T>,
    evaluations: usize,
    converged: bool,
}

/// Nelder-Mead simplex in three parameters with out-of-box evaluations
/// treated as worst.
fn nelder_mead<T, F>(objective: &F, start: [T; 3]) -> NmOutcome<T>
where
    T: Real,
    F: Fn(&[T; 3]) -> Option<T>,
{
    let alpha = T::one();
    let gamma = T::cast(2.0);
    let rho = T::cast(0.5);
    let sigma = T::cast(0.5);
    let max_iter = 400;
    let f_tol = T::cast(1e-7);

    let mut evaluations = 0usize;
    let mut eval = |x: &[T; 3]| -> Option<T> {
        evaluations += 1;
        objective(x)
    };

    // Initial simplex scaled to the parameter magnitudes.
    let steps = [
        (start[0].abs() * T::cast(0.35)).max(T::cast(0.2)),
        T::cast(0.25),
        T::cast(0.2),
    ];
    let mut simplex: Vec<([T; 3], Option<T>)> = Vec::with_capacity(4);
    let f0 = eval(&start);
    simplex.push((start, f0));
    for d in 0..3 {
        let mut x = start;
        x[d] += steps[d];
        // Keep b1 inside its box.
        if d == 2 && x[2].abs() > T::cast(0.99) {
            x[2] = start[2] - steps[2];
        }
        let f = eval(&x);
        simplex.push((x, f));
    }

    let worse = |a: &Option<T>, b: &Option<T>| -> std::cmp::Ordering {
        match (a, b) {
            (Some(x), Some(y)) => x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
    };

    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| worse(&a.1, &b.1));
        if let (Some(best), Some(worst)) = (simplex[0].1, simplex[3].1) {
            if (worst - best).abs() < f_tol {
                converged = true;
                break;
            }
        }

        // Centroid of the three best vertices.
        let mut centroid = [T::zero(); 3];
        for vertex in &simplex[..3] {
            for d in 0..3 {
                centroid[d] += vertex.0[d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= T::cast(3.0);
        }

        let worst_x = simplex[3].0;
        let reflect = |coef: T| -> [T; 3] {
            let mut x = [T::zero(); 3];
            for d in 0..3 {
                x[d] = centroid[d] + coef * (centroid[d] - worst_x[d]);
            }
            x
        };

        let xr = reflect(alpha);
        let fr = eval(&xr);
        let better_than_best = worse(&fr, &simplex[0].1) == std::cmp::Ordering::Less;
        let better_than_second = worse(&fr, &simplex[2].1) == std::cmp::Ordering::Less;
        if better_than_best {
            let xe = reflect(gamma);
            let fe = eval(&xe);
            if worse(&fe, &fr) == std::cmp::Ordering::Less {
                simplex[3] = (xe, fe);
            } else {
                simplex[3] = (xr, fr);
            }
        } else if better_than_second {
            simplex[3] = (xr, fr);
        } else {
            // Contraction (outside if the reflection helped at all).
            let use_reflected = worse(&fr, &simplex[3].1) == std::cmp::Ordering::Less;
            let base = if use_reflected { xr } else { worst_x };
            let mut xc = [T::zero(); 3];
            for d in 0..3 {
                xc[d] = centroid[d] + rho * (base[d] - centroid[d]);
            }
            let fc = eval(&xc);
            let contract_ok = if use_reflected {
                worse(&fc, &fr) != std::cmp::Ordering::Greater
            } else {
                worse(&fc, &simplex[3].1) == std::cmp::Ordering::Less
            };
            if contract_ok {
                simplex[3] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let best_x = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    for d in 0..3 {
                        vertex.0[d] = best_x[d] + sigma * (vertex.0[d] - best_x[d]);
                    }
                    vertex.1 = eval(&vertex.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| worse(&a.1, &b.1));
    NmOutcome {
        best_x: simplex[0].0,
        best_f: simplex[0].1,
        evaluations,
        converged,
    }
}

/// Flags singular values above the benchmark band edge plus a margin.
pub fn flag_significant<T: Real>(
    svals: &EmpiricalSpectrum<T>,
    params: &SvdBenchParams<T>,
    margin: T,
) -> SignificanceReport<T> {
    let (_, edge) = svd_benchmark_edges(params);
    let threshold = edge + margin;
    let flagged = svals
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(rank, &s)| FlaggedValue {
            rank,
            value: s,
            benchmark_edge: edge,
            excess: s - threshold,
        })
        .collect();
    SignificanceReport {
        flagged,
        benchmark_edge: edge,
        margin,
        threshold_policy: format!(
            "flag s > edge + margin with edge = {} and margin = {}",
            edge.to_f64().unwrap_or(f64::NAN),
            margin.to_f64().unwrap_or(f64::NAN)
        ),
    }
}

/// Finite-size margin estimate: twice the mean spacing of the top decile of
/// singular values from one whitened null replica of the given shape.
pub fn estimate_margin<T>(n_rows: usize, m_rows: usize, t: usize, seed: Seed) -> Result<T>
where
    T: Real,
    rand_distr::StandardNormal: rand_distr::Distribution<T>,
{
    if t <= n_rows.max(m_rows) + 1 {
        return Err(Error::InvalidParameter {
            context: format!("need T > max(N, M); got N = {n_rows}, M = {m_rows}, T = {t}"),
        });
    }
    let px = standardize(&gen_white_panel::<T>(n_rows, t, seed))?;
    let py = standardize(&gen_white_panel::<T>(m_rows, t, Seed(seed.0 ^ 0x9e37_79b9)))?;
    let wx = whiten(&px, T::cast(1e-10))?;
    let wy = whiten(&py, T::cast(1e-10))?;
    let g = cross_matrix(&wy, &wx)?;
    let s = singular_values(&g);
    let count = (s.len() / 10).max(2);
    let top = &s.values()[..count.min(s.len())];
    if top.len() < 2 {
        return Err(Error::InvalidParameter {
            context: "not enough singular values to estimate a margin".into(),
        });
    }
    let spacing = (top[0] - top[top.len() - 1]) / T::from_count(top.len() - 1);
    Ok(spacing * T::cast(2.0))
}
