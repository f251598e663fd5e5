//! Command-line and config-file parameters, merged and range-checked into a
//! `RunConfig`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rbm_core::band_model::truncation_radius_for_degree;
use rbm_core::chebyshev::MomentKind;
use rbm_core::path_oracle::EnumerationCap;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const OUTPUT_DIR_ENV: &str = "RBM_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "rbm", version, about = "Random band matrix moment expansion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML file with parameters; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for results and the manifest (default: $RBM_OUTPUT_DIR, then `.`).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Worker threads for sample-parallel loops.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo Chebyshev moments at the origin.
    Moments(MomentsArgs),
    /// Exact closed-path counts, optionally with the diagram census.
    Paths(PathsArgs),
    /// Regularizing kernel and its Fourier transform on a grid.
    Kernel(KernelArgs),
    /// Regularized moment reconstruction of the density of states.
    Dos(DosArgs),
    /// Averaged resolvent against the semicircle reference.
    Theorem(TheoremArgs),
    /// Embedding integrals for the loop or theta graph along a band-width ladder.
    Emb(EmbArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Moments(_) => "moments",
            Command::Paths(_) => "paths",
            Command::Kernel(_) => "kernel",
            Command::Dos(_) => "dos",
            Command::Theorem(_) => "theorem",
            Command::Emb(_) => "emb",
            Command::Verify(_) => "verify",
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<usize>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(Option::<Either>::deserialize(d)?.map(|e| match e {
        Either::One(x) => vec![x],
        Either::Many(v) => v,
    }))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsArgs {
    #[arg(long = "W")]
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    /// Truncation radius; defaults to the smallest exact one.
    #[arg(long = "N")]
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// T, U or UnW.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsArgs {
    #[arg(long = "W")]
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length: Option<usize>,
    /// Also contract every pairing and write the isomorphism-class census.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelArgs {
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Grid runs over `[0, x_max]`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosArgs {
    #[arg(long = "W")]
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[arg(long = "E0", allow_hyphen_values = true)]
    #[serde(rename = "E0", default, skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremArgs {
    /// One band width or a comma-separated ladder.
    #[arg(long = "W", value_delimiter = ',')]
    #[serde(rename = "W", default, deserialize_with = "one_or_many", skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<usize>>,
    #[arg(long = "E0", allow_hyphen_values = true)]
    #[serde(rename = "E0", default, skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Truncation tolerance for the resolvent window.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbArgs {
    /// `loop` or `theta`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[arg(long = "W", value_delimiter = ',')]
    #[serde(rename = "W", default, deserialize_with = "one_or_many", skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<usize>>,
    /// Argument of `g` on the unit circle.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_phase: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Include the `log W` factor in the shape (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_factor: Option<bool>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Skip the Monte Carlo checks.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fast: Option<bool>,
}

// ---- resolved parameters ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsParams {
    #[serde(rename = "W")]
    pub w: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: MomentKind,
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathsParams {
    #[serde(rename = "W")]
    pub w: usize,
    pub max_length: usize,
    pub census: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRunParams {
    pub q: u32,
    pub epsilon: f64,
    pub eta: f64,
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosParams {
    #[serde(rename = "W")]
    pub w: usize,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub epsilon: f64,
    pub q: u32,
    pub eta: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremParams {
    #[serde(rename = "W")]
    pub w: Vec<usize>,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub truncation_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphId {
    Loop,
    Theta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbParams {
    pub graph: GraphId,
    #[serde(rename = "W")]
    pub w: Vec<usize>,
    pub g_phase: f64,
    pub epsilon: f64,
    pub q: u32,
    pub eta: f64,
    pub log_factor: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyParams {
    pub fast: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "subcommand", content = "parameters", rename_all = "lowercase")]
pub enum Params {
    Moments(MomentsParams),
    Paths(PathsParams),
    Kernel(KernelRunParams),
    Dos(DosParams),
    Theorem(TheoremParams),
    Emb(EmbParams),
    Verify(VerifyParams),
}

impl Params {
    pub fn name(&self) -> &'static str {
        match self {
            Params::Moments(_) => "moments",
            Params::Paths(_) => "paths",
            Params::Kernel(_) => "kernel",
            Params::Dos(_) => "dos",
            Params::Theorem(_) => "theorem",
            Params::Emb(_) => "emb",
            Params::Verify(_) => "verify",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Params::Moments(p) => Some(p.seed),
            Params::Dos(p) => Some(p.seed),
            Params::Theorem(p) => Some(p.seed),
            _ => None,
        }
    }
}

/// Everything `run` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub format: Format,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
}

const GLOBAL_KEYS: [&str; 3] = ["output_dir", "workers", "format"];

fn read_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match serde_json::to_value(table) {
        Ok(Value::Object(m)) => Ok(m),
        _ => Err(CliError::Config(format!("{}: expected a table of keys", path.display()))),
    }
}

fn merge<T: Serialize + for<'de> Deserialize<'de>>(file: &Map<String, Value>, flags: &T) -> CliResult<T> {
    let mut merged = file.clone();
    if let Value::Object(m) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))? {
        merged.extend(m);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

fn need<T>(v: Option<T>, key: &'static str) -> CliResult<T> {
    v.ok_or(CliError::Missing(key))
}

fn range(cond: bool, msg: impl Into<String>) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Range(msg.into()))
    }
}

fn check_width(w: usize) -> CliResult<()> {
    range(w >= 1, "W must be at least 1")
}

fn check_epsilon(eps: f64) -> CliResult<()> {
    range(eps > 0.0 && eps.is_finite(), format!("epsilon must be positive and finite, got {eps}"))
}

fn check_kernel(q: u32, eta: f64) -> CliResult<()> {
    range(q >= 1, "q must be at least 1")?;
    range(eta > 0.0 && eta.is_finite(), format!("eta must be positive, got {eta}"))
}

fn check_samples(s: usize) -> CliResult<()> {
    range(s >= 1, "samples must be at least 1")
}

fn check_energy(e0: f64) -> CliResult<()> {
    range(e0.abs() < 1.0, format!("E0 must lie in (-1, 1), got {e0}"))
}

impl Cli {
    /// Merges the config file, the flags and the environment, then checks
    /// every value against the owning routine's preconditions.
    pub fn resolve(&self, env_output_dir: Option<PathBuf>) -> CliResult<RunConfig> {
        let mut file = match &self.config {
            Some(p) => read_file(p)?,
            None => Map::new(),
        };
        let mut globals = Map::new();
        for k in GLOBAL_KEYS {
            if let Some(v) = file.remove(k) {
                globals.insert(k.to_string(), v);
            }
        }
        let format = match self.format {
            Some(f) => f,
            None => match globals.get("format") {
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("format: {e}")))?,
                None => Format::Csv,
            },
        };
        let workers = match self.workers {
            Some(w) => Some(w),
            None => match globals.get("workers") {
                Some(v) => Some(serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("workers: {e}")))?),
                None => None,
            },
        };
        if workers == Some(0) {
            return Err(CliError::Range("workers must be at least 1".into()));
        }
        let output_dir = match &self.output_dir {
            Some(p) => p.clone(),
            None => match globals.get("output_dir") {
                Some(Value::String(s)) => PathBuf::from(s),
                Some(_) => return Err(CliError::Config("output_dir must be a string".into())),
                None => env_output_dir.unwrap_or_else(|| PathBuf::from(".")),
            },
        };
        let params = match &self.command {
            Command::Moments(a) => resolve_moments(merge(&file, a)?)?,
            Command::Paths(a) => resolve_paths(merge(&file, a)?)?,
            Command::Kernel(a) => resolve_kernel(merge(&file, a)?)?,
            Command::Dos(a) => resolve_dos(merge(&file, a)?)?,
            Command::Theorem(a) => resolve_theorem(merge(&file, a)?)?,
            Command::Emb(a) => resolve_emb(merge(&file, a)?)?,
            Command::Verify(a) => Params::Verify(VerifyParams {
                fast: merge(&file, a)?.fast.unwrap_or(false),
            }),
        };
        Ok(RunConfig {
            params,
            format,
            output_dir,
            workers,
        })
    }
}

fn resolve_moments(a: MomentsArgs) -> CliResult<Params> {
    let w = need(a.w, "W")?;
    check_width(w)?;
    let n_max = need(a.n_max, "n_max")?;
    let kind: MomentKind = match a.kind.as_deref() {
        None => MomentKind::T,
        Some(s) => s.parse().map_err(|_| CliError::Range(format!("kind must be T, U or UnW, got {s}")))?,
    };
    let samples = a.samples.unwrap_or(1000);
    check_samples(samples)?;
    let exact = truncation_radius_for_degree(n_max, w);
    let n = a.n.unwrap_or(exact);
    range(n >= n_max * w && n >= w, format!("N = {n} is below n_max * W = {}", n_max * w))?;
    Ok(Params::Moments(MomentsParams {
        w,
        n,
        kind,
        n_max,
        samples,
        seed: a.seed.unwrap_or(0),
    }))
}

fn resolve_paths(a: PathsArgs) -> CliResult<Params> {
    let w = need(a.w, "W")?;
    check_width(w)?;
    let max_length = need(a.max_length, "max_length")?;
    range(max_length % 2 == 0, "max_length must be even")?;
    let cap = EnumerationCap::default();
    range(
        max_length <= cap.max_length && w <= cap.max_band_width,
        format!(
            "enumeration is capped at max_length <= {} and W <= {}",
            cap.max_length, cap.max_band_width
        ),
    )?;
    Ok(Params::Paths(PathsParams {
        w,
        max_length,
        census: a.census.unwrap_or(false),
    }))
}

fn resolve_kernel(a: KernelArgs) -> CliResult<Params> {
    let epsilon = need(a.epsilon, "epsilon")?;
    check_epsilon(epsilon)?;
    let q = a.q.unwrap_or(2);
    let eta = a.eta.unwrap_or(0.5);
    check_kernel(q, eta)?;
    let x_max = a.x_max.unwrap_or(4.0);
    range(x_max > 0.0 && x_max.is_finite(), "x_max must be positive")?;
    let points = a.points.unwrap_or(201);
    range(points >= 2, "points must be at least 2")?;
    Ok(Params::Kernel(KernelRunParams {
        q,
        epsilon,
        eta,
        x_max,
        points,
    }))
}

fn resolve_dos(a: DosArgs) -> CliResult<Params> {
    let w = need(a.w, "W")?;
    check_width(w)?;
    let e0 = need(a.e0, "E0")?;
    check_energy(e0)?;
    let epsilon = need(a.epsilon, "epsilon")?;
    check_epsilon(epsilon)?;
    let q = a.q.unwrap_or(2);
    let eta = a.eta.unwrap_or(0.5);
    check_kernel(q, eta)?;
    let samples = a.samples.unwrap_or(1000);
    check_samples(samples)?;
    Ok(Params::Dos(DosParams {
        w,
        e0,
        epsilon,
        q,
        eta,
        samples,
        seed: a.seed.unwrap_or(0),
    }))
}

fn resolve_theorem(a: TheoremArgs) -> CliResult<Params> {
    let w = need(a.w, "W")?;
    range(!w.is_empty(), "W needs at least one value")?;
    for &x in &w {
        check_width(x)?;
    }
    let e0 = need(a.e0, "E0")?;
    range(e0.is_finite(), "E0 must be finite")?;
    let epsilon = need(a.epsilon, "epsilon")?;
    check_epsilon(epsilon)?;
    let samples = a.samples.unwrap_or(1000);
    check_samples(samples)?;
    let tol = a.truncation_tol.unwrap_or(rbm_core::spectral_estimator::DEFAULT_RESOLVENT_TOL);
    range(tol > 0.0 && tol < 1.0, "truncation_tol must lie in (0, 1)")?;
    Ok(Params::Theorem(TheoremParams {
        w,
        e0,
        epsilon,
        samples,
        seed: a.seed.unwrap_or(0),
        truncation_tol: tol,
    }))
}

fn resolve_emb(a: EmbArgs) -> CliResult<Params> {
    let graph = match need(a.graph, "graph")?.as_str() {
        "loop" => GraphId::Loop,
        "theta" => GraphId::Theta,
        other => return Err(CliError::Range(format!("graph must be loop or theta, got {other}"))),
    };
    let w = need(a.w, "W")?;
    range(!w.is_empty(), "W needs at least one value")?;
    for &x in &w {
        check_width(x)?;
    }
    let epsilon = need(a.epsilon, "epsilon")?;
    check_epsilon(epsilon)?;
    let q = a.q.unwrap_or(2);
    let eta = a.eta.unwrap_or(0.5);
    check_kernel(q, eta)?;
    let g_phase = a.g_phase.unwrap_or(PI / 3.0);
    range(
        g_phase.is_finite() && (g_phase.rem_euclid(2.0 * PI)).min(2.0 * PI - g_phase.rem_euclid(2.0 * PI)) > 1e-9,
        "g_phase must keep g away from 1",
    )?;
    let tolerance = a.tolerance.unwrap_or(1e-10);
    range(tolerance > 0.0, "tolerance must be positive")?;
    Ok(Params::Emb(EmbParams {
        graph,
        w,
        g_phase,
        epsilon,
        q,
        eta,
        log_factor: a.log_factor.unwrap_or(true),
        tolerance,
    }))
}
