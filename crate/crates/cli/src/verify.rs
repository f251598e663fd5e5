//! The invariant suite behind `rbm verify`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rbm_core::band_model::BandMatrixSpec;
use rbm_core::chebyshev::{estimate_moments, MomentKind, MomentSeries};
use rbm_core::diagrams::census;
use rbm_core::fourier_emb::{
    emb_sharp, loop_direct_sum, nb_walk_distribution, nb_walk_distribution_chebyshev, w_direct, w_eval, EmbQuery,
};
use rbm_core::diagrams::Multigraph;
use rbm_core::path_oracle::{
    build_table, exact_t_moment, exact_unw_moment, EnumerationCap, MomentRoute, PathKind,
};
use rbm_core::regularizer::{
    complete_homogeneous, delta_kernel_series, fourier_q, phi_q, poisson_m_range, poisson_rhs, simplex_moment_sum,
    DeltaKernel, KernelParams,
};
use rbm_core::spectral_estimator::{
    avg_resolvent_im, bracket_leading_term, dos_from_moments, measured_bracket, semicircle_stieltjes,
    ResolventQuery,
};

use crate::error::{CliError, CliResult};
use crate::output::{Outputs, Table};

type Check = (&'static str, fn() -> CliResult<(bool, String)>);

const FAST: &[Check] = &[
    ("path_identity", path_identity),
    ("t2_routes_agree", t2_routes_agree),
    ("poisson_summation", poisson_summation),
    ("kernel_closed_forms", kernel_closed_forms),
    ("simplex_sum", simplex_sum),
    ("symbol_forms", symbol_forms),
    ("loop_fourier_vs_lattice", loop_fourier_vs_lattice),
    ("non_backtracking_walks", non_backtracking_walks),
    ("semicircle_quadrature", semicircle_quadrature),
    ("semicircle_reconstruction", semicircle_reconstruction),
    ("single_genus_one_class", single_genus_one_class),
];

const SLOW: &[Check] = &[
    ("moments_vs_path_counts", moments_vs_path_counts),
    ("bracket_leading_term", bracket_near_leading_term),
    ("wide_resolvent", wide_resolvent),
];

pub fn run(fast: bool) -> CliResult<Outputs> {
    let mut table = Table::new("verify", vec!["check", "status", "detail"]);
    let mut out = Outputs::default();
    let mut failed = 0;
    let checks: Vec<&Check> = if fast { FAST.iter().collect() } else { FAST.iter().chain(SLOW).collect() };
    for (name, check) in checks {
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, e.to_string()),
        };
        if !ok {
            failed += 1;
        }
        let status = if ok { "PASS" } else { "FAIL" };
        out.summary.push(format!("[{status}] {name}: {detail}"));
        table.push(vec![name.to_string(), status.to_string(), detail]);
    }
    out.tables.push(table);
    if failed > 0 {
        out.summary.push(
            CliError::VerifyFailed {
                failed,
                total: out.tables[0].rows.len(),
            }
            .to_string(),
        );
    }
    Ok(out)
}

/// Number of failed rows in a verify table.
pub fn failures(out: &Outputs) -> usize {
    out.tables
        .iter()
        .filter(|t| t.name == "verify")
        .flat_map(|t| &t.rows)
        .filter(|r| r[1] != "PASS")
        .count()
}

fn path_identity() -> CliResult<(bool, String)> {
    let mut bad = 0;
    for w in 1..=3 {
        bad += build_table(w, 8, &EnumerationCap::default())?.identity_violations().len();
    }
    Ok((bad == 0, format!("W <= 3, n <= 8, {bad} violations")))
}

fn t2_routes_agree() -> CliResult<(bool, String)> {
    let mut ok = true;
    for w in 1..=3 {
        let t = build_table(w, 8, &EnumerationCap::default())?;
        for n in 0..=8 {
            ok &= exact_t_moment(&t, n, MomentRoute::Paths)? == exact_t_moment(&t, n, MomentRoute::Strengthened)?;
        }
    }
    Ok((ok, "exact T moments from both path collections".into()))
}

fn poisson_summation() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for q in [1u32, 2] {
        for eps in [0.02, 0.1] {
            let p = KernelParams::new(q, eps, 0.5)?;
            for k in 0..5 {
                let theta0 = 0.3 + 0.55 * k as f64;
                let theta = 2.9 - 0.6 * k as f64;
                let kern = DeltaKernel::new(theta0.cos(), p.clone())?;
                let lhs = delta_kernel_series(&kern, theta.cos());
                let rhs = poisson_rhs(&kern, theta, poisson_m_range(&kern))?;
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok((worst < 1e-7, format!("max difference {worst:.2e}")))
}

fn kernel_closed_forms() -> CliResult<(bool, String)> {
    let p = KernelParams::new(1, 0.1, 0.5)?;
    let mut worst: f64 = 0.0;
    for k in 0..=40 {
        let t = 0.15 * k as f64;
        worst = worst.max((phi_q(&p, t)? - (-t * t / 2.0).exp()).abs());
        let xi = 0.05 * k as f64;
        let f = fourier_q(1, Complex64::new(xi, 0.0), 1e-12)?;
        worst = worst.max((f - PI.sqrt() * (-PI * PI * xi * xi).exp()).norm());
    }
    // Γ(1/2), Γ(1/4)/2, Γ(1/8)/4
    let at_zero = [
        (1u32, PI.sqrt()),
        (2, 3.625_609_908_221_908_3 / 2.0),
        (4, 7.533_941_598_797_612 / 4.0),
    ];
    for (q, exact) in at_zero {
        worst = worst.max((fourier_q(q, Complex64::new(0.0, 0.0), 1e-12)? - exact).norm());
    }
    Ok((worst < 1e-8, format!("max deviation {worst:.2e}")))
}

fn simplex_sum() -> CliResult<(bool, String)> {
    let z = [
        Complex64::new(0.3, 0.2),
        Complex64::new(-0.5, 0.1),
        Complex64::new(0.1, -0.6),
        Complex64::new(0.7, 0.4),
    ];
    let mut worst: f64 = 0.0;
    for e in 1..=4 {
        let pts = &z[..e];
        let h = complete_homogeneous(pts, 10);
        let prod: Complex64 = pts.iter().product();
        for n in e..=10 {
            worst = worst.max((simplex_moment_sum(pts, n, 1e-12)? - prod * h[n - e]).norm());
        }
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
}

fn symbol_forms() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for w in [1usize, 2, 7, 64, 256] {
        for k in 0..1000 {
            let xi = (k as f64 + 0.37) / 1000.0;
            worst = worst.max((w_eval(w, xi) - w_direct(w, xi)).abs());
        }
    }
    Ok((worst < 1e-12, format!("max difference {worst:.2e}")))
}

fn loop_fourier_vs_lattice() -> CliResult<(bool, String)> {
    let g = Complex64::from_polar(1.0, PI / 3.0);
    let mut worst: f64 = 0.0;
    for q in [1u32, 2] {
        let p = KernelParams::new(q, 0.05, 0.5)?;
        let direct = loop_direct_sum(4, g, &p)?;
        let fourier = emb_sharp(&EmbQuery::new(Multigraph::loop_graph(), g, p, 4))?;
        worst = worst.max((direct - fourier).norm());
    }
    Ok((worst < 1e-6, format!("max difference {worst:.2e}")))
}

fn non_backtracking_walks() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for w in 1..=4 {
        for n in 0..=8 {
            let a = nb_walk_distribution(w, n);
            let b = nb_walk_distribution_chebyshev(w, n);
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    Ok((worst < 1e-12, format!("max difference {worst:.2e}")))
}

fn semicircle_quadrature() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &(e0, eps) in &[(0.0, 0.1), (0.5, 0.01), (-0.3, 0.5), (1.4, 0.05)] {
        let z = Complex64::new(e0, eps);
        let closed = -2.0 * (z - (z - 1.0).sqrt() * (z + 1.0).sqrt());
        worst = worst.max((semicircle_stieltjes(e0, eps)? - closed).norm() / closed.norm());
    }
    Ok((worst < 1e-8, format!("max relative difference {worst:.2e}")))
}

fn semicircle_reconstruction() -> CliResult<(bool, String)> {
    let p = KernelParams::new(2, 1e-4, 0.5)?;
    let n = rbm_core::spectral_estimator::moments_needed(&p, 16)?;
    let mut v = vec![0.0; n + 1];
    v[0] = 1.0;
    v[2] = -0.5;
    let m = MomentSeries::exact(MomentKind::T, 16, v);
    let mut worst: f64 = 0.0;
    for k in 0..9 {
        let e0 = -0.8 + 0.2 * k as f64;
        let r = dos_from_moments(&m, &p, e0)?;
        worst = worst.max((r.dos - 2.0 / PI * (1.0 - e0 * e0).sqrt()).abs());
    }
    Ok((worst < 1e-6, format!("max deviation from the semicircle {worst:.2e}")))
}

fn single_genus_one_class() -> CliResult<(bool, String)> {
    let mut classes = std::collections::BTreeSet::new();
    for w in 1..=2 {
        for c in census(w, 8, PathKind::Strengthened, &EnumerationCap::default())? {
            if c.genus == 1 {
                classes.insert((c.vertex_count, c.edges));
            }
        }
    }
    Ok((classes.len() == 1, format!("{} genus-1 classes", classes.len())))
}

fn moments_vs_path_counts() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for w in 1..=3usize {
        let table = build_table(w, 8, &EnumerationCap::default())?;
        let spec = BandMatrixSpec::new(w, 8 * w, 90 + w as u64)?;
        let m = estimate_moments(&spec, MomentKind::UnW, 8, 2000)?;
        for n in 0..=8 {
            let dev = (m.values[n] - exact_unw_moment(&table, n)?).abs();
            worst = worst.max(dev / (4.0 * m.std_errors[n] + 1e-12));
        }
    }
    Ok((worst <= 1.0, format!("largest deviation {worst:.3} of the 4-sigma slack")))
}

fn bracket_near_leading_term() -> CliResult<(bool, String)> {
    let p = KernelParams::new(2, 0.2, 0.5)?;
    let b = measured_bracket(8, &p, 0.3, 200, 4)?;
    let lead = bracket_leading_term(&p, 0.3)?;
    let dev = (b.estimate.mean - lead).abs();
    let slack = 4.0 * b.estimate.std_error + 10.0 / 8.0;
    Ok((dev <= slack, format!("deviation {dev:.4} against slack {slack:.4}")))
}

fn wide_resolvent() -> CliResult<(bool, String)> {
    let e = avg_resolvent_im(&ResolventQuery::new(0.0, 100.0, 8, 20, 6)?)?;
    let rel = (e.mean * 100.0 - 1.0).abs();
    Ok((rel < 0.01, format!("relative deviation from 1/epsilon {rel:.2e}")))
}
