use rmt_spectra::fit::{fit_varma11, spectral_distance, FitGrid};
use rmt_spectra::frv::linspace;
use rmt_spectra::linalg::{EmpiricalSpectrum, SpectrumKind};
use rmt_spectra::spectra::{mp_density_grid, mp_edges, varma11_density, varma11_support_hint};

#[test]
fn probe_fit_objective_landscape() {
    let r = 0.25;
    let scale = 4.0;
    let (lo, hi) = mp_edges(r);
    let grid = linspace(lo * scale, hi * scale, 4001);
    let density = mp_density_grid(r, scale, &grid).unwrap();
    let n = 256;
    let sample: Vec<f64> = (0..n)
        .map(|i| density.quantile_continuous((i as f64 + 0.5) / n as f64))
        .collect();
    let spectrum = EmpiricalSpectrum::new(sample, SpectrumKind::Eigenvalues);
    let data_max = spectrum.top().unwrap();

    let objective = |a0: f64, a1: f64, b1: f64, points: usize| -> f64 {
        let hint_hi = varma11_support_hint(a0, a1, b1, r).unwrap().1;
        let hi = data_max.max(hint_hi) * 1.02;
        let lambdas = linspace(hi * 1e-6, hi, points);
        let density = varma11_density(&lambdas, a0, a1, b1, r).unwrap();
        spectral_distance(&spectrum, &density).unwrap()
    };

    for points in [257, 1025, 4097] {
        println!(
            "points {points}: true {:.6} bad {:.6}",
            objective(2.0, 0.0, 0.0, points),
            objective(1.9071, -0.3606, 0.0969, points),
        );
    }
    let fit = fit_varma11(&spectrum, r, &FitGrid { points: 1025, lambda_max: None }, 27).unwrap();
    let (a0, a1, b1) = fit.params.as_arma11();
    println!("fit with 1025 points: a0={a0} a1={a1} b1={b1} obj={}", fit.objective);
}
