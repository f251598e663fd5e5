use num_complex::Complex64;
use rbm_core::band_model::BandMatrixSpec;
use rbm_core::chebyshev::estimate_moments;
use rbm_core::diagrams::{census, Multigraph};
use rbm_core::fourier_emb::{emb_bound_check, EmbQuery};
use rbm_core::path_oracle::{build_table, EnumerationCap, PathKind};
use rbm_core::regularizer::{phi_hat, phi_q, KernelParams};
use rbm_core::spectral_estimator::{
    bracket_leading_term, measured_bracket, resolvent_truncation, theorem_error_for, ResolventQuery,
};
use serde_json::json;

use crate::config::{
    DosParams, EmbParams, GraphId, KernelRunParams, MomentsParams, Params, PathsParams, TheoremParams,
};
use crate::error::CliResult;
use crate::output::{num, Outputs, Table};
use crate::verify;

pub const SPECTRAL_COLUMNS: [&str; 10] = [
    "W", "E0", "epsilon", "q", "eta", "samples", "estimate", "std_error", "reference", "error",
];

pub fn dispatch(params: &Params) -> CliResult<Outputs> {
    match params {
        Params::Moments(p) => moments(p),
        Params::Paths(p) => paths(p),
        Params::Kernel(p) => kernel(p),
        Params::Dos(p) => dos(p),
        Params::Theorem(p) => theorem(p),
        Params::Emb(p) => emb(p),
        Params::Verify(p) => verify::run(p.fast),
    }
}

fn moments(p: &MomentsParams) -> CliResult<Outputs> {
    let spec = BandMatrixSpec::new(p.w, p.n, p.seed)?;
    let series = estimate_moments(&spec, p.kind, p.n_max, p.samples)?;
    let mut t = Table::new("moments", vec!["W", "kind", "n", "samples", "value", "std_error"]);
    for n in 0..=p.n_max {
        t.push(vec![
            p.w.to_string(),
            p.kind.to_string(),
            n.to_string(),
            p.samples.to_string(),
            num(series.values[n]),
            num(series.std_errors[n]),
        ]);
    }
    let mut out = Outputs::default();
    let flagged = series.soft_bound_violations();
    if !flagged.is_empty() {
        out.summary.push(format!("degrees above the 1 + 3 sigma bound: {flagged:?}"));
    }
    out.tables.push(t);
    Ok(out)
}

fn paths(p: &PathsParams) -> CliResult<Outputs> {
    let cap = EnumerationCap::default();
    let table = build_table(p.w, p.max_length, &cap)?;
    let mut t = Table::new("paths", vec!["W", "n", "paths", "paths0"]);
    for (w, n, a, b) in table.rows() {
        t.push(vec![w.to_string(), n.to_string(), a.to_string(), b.to_string()]);
    }
    let mut out = Outputs::default();
    let bad = table.identity_violations();
    out.summary.push(if bad.is_empty() {
        "path identity holds on every row".to_string()
    } else {
        format!("path identity fails at n = {:?}", bad.iter().map(|r| r.n).collect::<Vec<_>>())
    });
    out.tables.push(t);
    if p.census {
        let entries = census(p.w, p.max_length, PathKind::Strengthened, &cap)?;
        out.summary.push(format!("{} diagram classes", entries.len()));
        out.documents.push((
            "census".into(),
            json!({ "W": p.w, "max_length": p.max_length, "path_kind": "strengthened", "classes": entries }),
        ));
    }
    Ok(out)
}

fn kernel_params(q: u32, epsilon: f64, eta: f64) -> CliResult<KernelParams> {
    Ok(KernelParams::new(q, epsilon, eta)?)
}

fn kernel(p: &KernelRunParams) -> CliResult<Outputs> {
    let params = kernel_params(p.q, p.epsilon, p.eta)?;
    let mut t = Table::new("kernel", vec!["x", "phi", "phi_hat"]);
    for k in 0..p.points {
        let x = p.x_max * k as f64 / (p.points - 1) as f64;
        let hat = phi_hat(&params, Complex64::new(x, 0.0))?;
        t.push(vec![num(x), num(phi_q(&params, x)?), num(hat.re)]);
    }
    let mut out = Outputs::default();
    out.summary.push(format!("normalization {}", num(params.normalization())));
    out.tables.push(t);
    Ok(out)
}

fn dos(p: &DosParams) -> CliResult<Outputs> {
    let params = kernel_params(p.q, p.epsilon, p.eta)?;
    let b = measured_bracket(p.w, &params, p.e0, p.samples, p.seed)?;
    let reference = bracket_leading_term(&params, p.e0)?;
    let mut t = Table::new("dos", SPECTRAL_COLUMNS.to_vec());
    t.push(vec![
        p.w.to_string(),
        num(p.e0),
        num(p.epsilon),
        p.q.to_string(),
        num(p.eta),
        p.samples.to_string(),
        num(b.estimate.mean),
        num(b.estimate.std_error),
        num(reference),
        num((b.estimate.mean - reference).abs()),
    ]);
    let r = b.reconstruction;
    let mut out = Outputs::default();
    out.summary.push(format!(
        "dos {}, moments used {}, window radius {}, tail bound {} ({})",
        num(r.dos),
        r.n_used,
        b.radius,
        num(r.tail_bound),
        if r.within_tolerance { "within tolerance" } else { "above tolerance" }
    ));
    out.summary.extend(params.regime_warnings());
    out.tables.push(t);
    Ok(out)
}

fn theorem(p: &TheoremParams) -> CliResult<Outputs> {
    let mut t = Table::new("theorem", SPECTRAL_COLUMNS.to_vec());
    let mut out = Outputs::default();
    for (i, &w) in p.w.iter().enumerate() {
        let radius = resolvent_truncation(w, p.epsilon, p.truncation_tol)?;
        // each ladder rung gets its own stream
        let seed = p.seed.wrapping_add(i as u64);
        let q = ResolventQuery::new(p.e0, p.epsilon, w, p.samples, seed)?.with_radius(radius)?;
        let r = theorem_error_for(&q)?;
        t.push(vec![
            w.to_string(),
            num(p.e0),
            num(p.epsilon),
            String::new(),
            String::new(),
            p.samples.to_string(),
            num(r.estimate.mean),
            num(r.std_error),
            num(r.reference),
            num(r.error),
        ]);
        if !r.in_regime {
            out.summary.push(format!("W = {w}: epsilon is below W^-0.99"));
        }
    }
    out.tables.push(t);
    Ok(out)
}

fn emb(p: &EmbParams) -> CliResult<Outputs> {
    let params = kernel_params(p.q, p.epsilon, p.eta)?;
    let (graph, id) = match p.graph {
        GraphId::Loop => (Multigraph::loop_graph(), "loop"),
        GraphId::Theta => (Multigraph::theta_graph(), "theta"),
    };
    let g = Complex64::from_polar(1.0, p.g_phase);
    let mut t = Table::new(
        "emb",
        vec!["graph_id", "W", "g_real", "g_imag", "epsilon", "q", "emb_abs", "shape_factor", "ratio"],
    );
    for &w in &p.w {
        let mut query = EmbQuery::new(graph.clone(), g, params.clone(), w);
        query.tolerance = p.tolerance;
        let b = emb_bound_check(&query)?;
        let shape = if p.log_factor { b.rhs_shape } else { b.rhs_shape_without_log };
        t.push(vec![
            id.to_string(),
            w.to_string(),
            num(g.re),
            num(g.im),
            num(p.epsilon),
            p.q.to_string(),
            num(b.lhs),
            num(shape),
            num(b.lhs / shape),
        ]);
    }
    let mut out = Outputs::default();
    out.tables.push(t);
    Ok(out)
}
