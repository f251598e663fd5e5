use std::f64::consts::PI;

use num_complex::Complex64;
use rbm_core::band_model::BandMatrixSpec;
use rbm_core::chebyshev::{estimate_moments, MomentKind};
use rbm_core::diagrams::Multigraph;
use rbm_core::fourier_emb::{emb_bound_check, EmbQuery};
use rbm_core::path_oracle::{build_table, exact_t_moment, exact_unw_moment, rational_to_f64, EnumerationCap, MomentRoute};
use rbm_core::regularizer::KernelParams;
use rbm_core::spectral_estimator::{avg_resolvent_im, ResolventQuery};

#[test]
fn monte_carlo_moments_match_exact_counts() {
    for w in 1..=3usize {
        let table = build_table(w, 8, &EnumerationCap::default()).unwrap();
        let spec = BandMatrixSpec::new(w, 8 * w, 40 + w as u64).unwrap();
        let unw = estimate_moments(&spec, MomentKind::UnW, 8, 2000).unwrap();
        let t = estimate_moments(&spec, MomentKind::T, 8, 2000).unwrap();
        for n in 0..=8 {
            let exact = exact_unw_moment(&table, n).unwrap();
            assert!((unw.values[n] - exact).abs() <= 4.0 * unw.std_errors[n] + 1e-12, "W={w} n={n}");
            let exact_t = rational_to_f64(&exact_t_moment(&table, n, MomentRoute::Strengthened).unwrap());
            assert!((t.values[n] - exact_t).abs() <= 4.0 * t.std_errors[n] + 1e-12, "W={w} n={n}");
        }
    }
}

#[test]
fn averaged_resolvent_stays_bounded() {
    for &w in &[4usize, 16] {
        let eps = (w as f64).powf(-0.9);
        for &e0 in &[-0.8, 0.0, 0.5] {
            let q = ResolventQuery::new(e0, eps, w, 40, 17).unwrap();
            let e = avg_resolvent_im(&q).unwrap();
            assert!(e.mean > 0.0 && e.mean <= 5.0, "W={w} E0={e0}: {}", e.mean);
        }
    }
}

#[test]
fn theta_ratio_stays_bounded_along_the_ladder() {
    let g = Complex64::from_polar(1.0, PI / 3.0);
    let p = KernelParams::new(2, 0.2, 0.5).unwrap();
    let ratios: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&w| {
            let mut q = EmbQuery::new(Multigraph::theta_graph(), g, p.clone(), w);
            q.tolerance = 1e-8;
            emb_bound_check(&q).unwrap().ratio()
        })
        .collect();
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 10.0, "{ratios:?}");
}

#[test]
fn loop_ratio_without_log_stays_bounded() {
    let g = Complex64::from_polar(1.0, PI / 3.0);
    let p = KernelParams::new(2, 0.05, 0.5).unwrap();
    let ratios: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&w| emb_bound_check(&EmbQuery::new(Multigraph::loop_graph(), g, p.clone(), w)).unwrap().ratio_without_log())
        .collect();
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 2.0, "{ratios:?}");
}
