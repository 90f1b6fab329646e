//! Flat key=value configuration with flag overrides and derived defaults.
//!
//! Precedence: command-line flags, then the SHUTTLESIM_OUTDIR environment
//! variable (output directory only), then the config file, then built-in
//! defaults. Derived quantities (dt, tau_c, fourier_period) follow the
//! resolved duration and step count unless pinned explicitly.

use crate::{CliError, CliResult};
use clap::Args;
use sha2::{Digest, Sha256};
use shuttlesim::quantum::MAX_EIGENSTATE;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

const KNOWN_KEYS: [&str; 19] = [
    "alpha",
    "control_samples",
    "delta_x",
    "dt",
    "duration",
    "engine",
    "fourier_harmonics",
    "fourier_period",
    "grid_points",
    "jobs",
    "models",
    "outdir",
    "p0",
    "seed",
    "state",
    "steps",
    "tau_c",
    "trace_samples",
    "x0",
];

/// Keys that place or parallelize a run without changing its physics; they
/// stay out of the config hash so identical scenarios hash identically.
const UNHASHED_KEYS: [&str; 2] = ["jobs", "outdir"];

#[derive(Args, Clone, Default)]
pub struct Overrides {
    /// Configuration file of key = value lines
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Transport distance in oscillator lengths
    #[arg(long, global = true, value_name = "X")]
    pub delta_x: Option<String>,
    /// Transport duration; accepts multiples of pi such as 2pi
    #[arg(long, global = true, value_name = "T")]
    pub duration: Option<String>,
    /// Comma list drawn from reference, derivative, piecewise, smoothed, fourier
    #[arg(long, global = true, value_name = "LIST")]
    pub models: Option<String>,
    /// Derivative feed-forward gain
    #[arg(long, global = true, value_name = "A")]
    pub alpha: Option<String>,
    /// Staircase segment count
    #[arg(long, global = true, value_name = "N")]
    pub steps: Option<String>,
    /// Exponential smoothing time constant
    #[arg(long, global = true, value_name = "TAU")]
    pub tau_c: Option<String>,
    /// Number of random Fourier harmonics
    #[arg(long, global = true, value_name = "M")]
    pub fourier_harmonics: Option<String>,
    /// Base period of the random Fourier distortion
    #[arg(long, global = true, value_name = "P")]
    pub fourier_period: Option<String>,
    /// Seed for the Fourier amplitude draw
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<String>,
    /// Spatial grid size, a power of two of at least 256
    #[arg(long, global = true, value_name = "N")]
    pub grid_points: Option<String>,
    /// Time step of the spectral solver
    #[arg(long, global = true, value_name = "DT")]
    pub dt: Option<String>,
    /// Sample count for control synthesis and output curves
    #[arg(long, global = true, value_name = "N")]
    pub control_samples: Option<String>,
    /// Initial state: n:K, super:c0,c1,..., thermal:THETA:M, or mix:w0,w1,...
    #[arg(long, global = true, value_name = "STATE")]
    pub state: Option<String>,
    /// Propagation engine: analytic or numeric
    #[arg(long, global = true, value_name = "ENGINE")]
    pub engine: Option<String>,
    /// Sample count of the fidelity trace
    #[arg(long, global = true, value_name = "N")]
    pub trace_samples: Option<String>,
    /// Classical initial position
    #[arg(long, global = true, value_name = "X")]
    pub x0: Option<String>,
    /// Classical initial momentum
    #[arg(long, global = true, value_name = "P")]
    pub p0: Option<String>,
    /// Thread bound for parallel sections, 0 for automatic
    #[arg(long, global = true, value_name = "J")]
    pub jobs: Option<String>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub outdir: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Reference,
    Derivative,
    Piecewise,
    Smoothed,
    Fourier,
}

impl ModelKind {
    pub fn parse(name: &str) -> CliResult<Self> {
        match name {
            "reference" => Ok(ModelKind::Reference),
            "derivative" => Ok(ModelKind::Derivative),
            "piecewise" => Ok(ModelKind::Piecewise),
            "smoothed" => Ok(ModelKind::Smoothed),
            "fourier" => Ok(ModelKind::Fourier),
            other => Err(CliError::Config(format!("unknown model `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Reference => "reference",
            ModelKind::Derivative => "derivative",
            ModelKind::Piecewise => "piecewise",
            ModelKind::Smoothed => "smoothed",
            ModelKind::Fourier => "fourier",
        }
    }
}

#[derive(Clone, Debug)]
pub enum StateSpec {
    Eigenstate(usize),
    Superposition(Vec<f64>),
    Thermal { theta: f64, max_level: usize },
    Mixture(Vec<f64>),
}

impl StateSpec {
    fn canonical(&self) -> String {
        match self {
            StateSpec::Eigenstate(n) => format!("n:{n}"),
            StateSpec::Superposition(coeffs) => format!("super:{}", join_floats(coeffs)),
            StateSpec::Thermal { theta, max_level } => {
                format!("thermal:{}:{max_level}", fmt_float(*theta))
            }
            StateSpec::Mixture(weights) => format!("mix:{}", join_floats(weights)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Analytic,
    Numeric,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Numeric => "numeric",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub delta_x: f64,
    pub duration: f64,
    pub models: Vec<ModelKind>,
    pub alpha: f64,
    pub steps: usize,
    pub tau_c: f64,
    pub fourier_harmonics: usize,
    pub fourier_period: f64,
    pub seed: u64,
    pub grid_points: usize,
    pub dt: f64,
    pub control_samples: usize,
    pub state: StateSpec,
    pub engine: Engine,
    pub trace_samples: usize,
    pub x0: f64,
    pub p0: f64,
    pub jobs: usize,
    pub outdir: PathBuf,
}

/// A fully resolved run: typed config, the override layer it came from,
/// the canonical key = value rendering, and the scenario hash.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ScenarioConfig,
    pub merged: BTreeMap<String, String>,
    pub canonical: String,
    pub hash: String,
}

pub fn resolve(overrides: &Overrides) -> CliResult<Resolved> {
    let mut merged = BTreeMap::new();
    if let Some(path) = &overrides.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        parse_file(&text, &mut merged)?;
    }
    if let Ok(dir) = std::env::var("SHUTTLESIM_OUTDIR") {
        merged.insert("outdir".into(), dir);
    }
    let flag_pairs: [(&str, &Option<String>); 19] = [
        ("alpha", &overrides.alpha),
        ("control_samples", &overrides.control_samples),
        ("delta_x", &overrides.delta_x),
        ("dt", &overrides.dt),
        ("duration", &overrides.duration),
        ("engine", &overrides.engine),
        ("fourier_harmonics", &overrides.fourier_harmonics),
        ("fourier_period", &overrides.fourier_period),
        ("grid_points", &overrides.grid_points),
        ("jobs", &overrides.jobs),
        ("models", &overrides.models),
        ("outdir", &overrides.outdir),
        ("p0", &overrides.p0),
        ("seed", &overrides.seed),
        ("state", &overrides.state),
        ("steps", &overrides.steps),
        ("tau_c", &overrides.tau_c),
        ("trace_samples", &overrides.trace_samples),
        ("x0", &overrides.x0),
    ];
    for (key, value) in flag_pairs {
        if let Some(v) = value {
            merged.insert(key.to_string(), v.clone());
        }
    }
    finalize(merged)
}

/// Re-resolves with one key replaced; used by parameter sweeps so derived
/// defaults follow the swept value.
pub fn resolve_with(base: &Resolved, key: &str, value: &str) -> CliResult<Resolved> {
    let mut merged = base.merged.clone();
    merged.insert(key.to_string(), value.to_string());
    finalize(merged)
}

fn parse_file(text: &str, merged: &mut BTreeMap<String, String>) -> CliResult<()> {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "config line {} is not `key = value`: `{raw}`",
                idx + 1
            )));
        };
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        }
        merged.insert(key.to_string(), value.trim().to_string());
    }
    Ok(())
}

fn finalize(merged: BTreeMap<String, String>) -> CliResult<Resolved> {
    for key in merged.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        }
    }

    let duration = positive(take_pi(&merged, "duration", 2.0 * PI)?, "duration")?;
    let delta_x = finite(take_f64(&merged, "delta_x", 10.0)?, "delta_x")?;
    let alpha = finite(take_f64(&merged, "alpha", 1.0)?, "alpha")?;
    let steps = take_usize(&merged, "steps", 8)?;
    if steps == 0 {
        return Err(CliError::Config("steps must be at least 1".into()));
    }
    let tau_c = positive(
        take_pi(&merged, "tau_c", duration / (8.0 * steps as f64))?,
        "tau_c",
    )?;
    let fourier_harmonics = take_usize(&merged, "fourier_harmonics", 4)?;
    if fourier_harmonics == 0 {
        return Err(CliError::Config("fourier_harmonics must be at least 1".into()));
    }
    let fourier_period = positive(take_pi(&merged, "fourier_period", duration / 2.0)?, "fourier_period")?;
    let seed = take_u64(&merged, "seed", 42)?;
    let grid_points = take_usize(&merged, "grid_points", 4096)?;
    if grid_points < 256 || !grid_points.is_power_of_two() {
        return Err(CliError::Config(format!(
            "grid_points must be a power of two of at least 256, got {grid_points}"
        )));
    }
    let dt = positive(take_pi(&merged, "dt", duration / 65536.0)?, "dt")?;
    if dt > duration {
        return Err(CliError::Config("dt exceeds the transport duration".into()));
    }
    let control_samples = take_usize(&merged, "control_samples", 4097)?;
    if control_samples < 5 {
        return Err(CliError::Config("control_samples must be at least 5".into()));
    }
    let trace_samples = take_usize(&merged, "trace_samples", 129)?;
    if trace_samples < 2 {
        return Err(CliError::Config("trace_samples must be at least 2".into()));
    }
    let x0 = finite(take_f64(&merged, "x0", 0.0)?, "x0")?;
    let p0 = finite(take_f64(&merged, "p0", 0.5)?, "p0")?;
    let jobs = take_usize(&merged, "jobs", 0)?;
    let models = parse_models(merged.get("models").map(String::as_str))?;
    let state = parse_state(merged.get("state").map_or("n:0", String::as_str))?;
    let engine = match merged.get("engine").map_or("analytic", String::as_str) {
        "analytic" => Engine::Analytic,
        "numeric" => Engine::Numeric,
        other => {
            return Err(CliError::Config(format!(
                "engine must be analytic or numeric, got `{other}`"
            )))
        }
    };
    let outdir = PathBuf::from(merged.get("outdir").map_or("out", String::as_str));

    let config = ScenarioConfig {
        delta_x,
        duration,
        models,
        alpha,
        steps,
        tau_c,
        fourier_harmonics,
        fourier_period,
        seed,
        grid_points,
        dt,
        control_samples,
        state,
        engine,
        trace_samples,
        x0,
        p0,
        jobs,
        outdir,
    };
    let canonical = render_canonical(&config);
    let hash = hash_canonical(&canonical);
    Ok(Resolved {
        config,
        merged,
        canonical,
        hash,
    })
}

fn render_canonical(config: &ScenarioConfig) -> String {
    let model_names: Vec<&str> = config.models.iter().map(|m| m.name()).collect();
    let entries: BTreeMap<&str, String> = BTreeMap::from([
        ("alpha", fmt_float(config.alpha)),
        ("control_samples", config.control_samples.to_string()),
        ("delta_x", fmt_float(config.delta_x)),
        ("dt", fmt_float(config.dt)),
        ("duration", fmt_float(config.duration)),
        ("engine", config.engine.name().to_string()),
        ("fourier_harmonics", config.fourier_harmonics.to_string()),
        ("fourier_period", fmt_float(config.fourier_period)),
        ("grid_points", config.grid_points.to_string()),
        ("jobs", config.jobs.to_string()),
        ("models", model_names.join(",")),
        ("outdir", config.outdir.display().to_string()),
        ("p0", fmt_float(config.p0)),
        ("seed", config.seed.to_string()),
        ("state", config.state.canonical()),
        ("steps", config.steps.to_string()),
        ("tau_c", fmt_float(config.tau_c)),
        ("trace_samples", config.trace_samples.to_string()),
        ("x0", fmt_float(config.x0)),
    ]);
    let mut text = String::new();
    for (key, value) in &entries {
        let _ = writeln!(text, "{key} = {value}");
    }
    text
}

fn hash_canonical(canonical: &str) -> String {
    let mut hasher = Sha256::new();
    for line in canonical.lines() {
        let key = line.split(" = ").next().unwrap_or("");
        if UNHASHED_KEYS.contains(&key) {
            continue;
        }
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

fn parse_models(raw: Option<&str>) -> CliResult<Vec<ModelKind>> {
    let raw = raw.unwrap_or("reference,derivative,smoothed,fourier");
    let mut models = Vec::new();
    for part in raw.split(',') {
        let name = part.trim();
        if name.is_empty() {
            continue;
        }
        let kind = ModelKind::parse(name)?;
        if models.contains(&kind) {
            return Err(CliError::Config(format!("model `{name}` listed twice")));
        }
        models.push(kind);
    }
    if models.is_empty() {
        return Err(CliError::Config("models must name at least one model".into()));
    }
    Ok(models)
}

fn parse_state(raw: &str) -> CliResult<StateSpec> {
    let bad = |msg: &str| CliError::Config(format!("state `{raw}`: {msg}"));
    if let Some(rest) = raw.strip_prefix("n:") {
        let n: usize = rest
            .trim()
            .parse()
            .map_err(|_| bad("expected n:K with integer K"))?;
        if n > MAX_EIGENSTATE {
            return Err(bad(&format!("eigenstate order exceeds {MAX_EIGENSTATE}")));
        }
        return Ok(StateSpec::Eigenstate(n));
    }
    if let Some(rest) = raw.strip_prefix("super:") {
        let coeffs = parse_float_list(rest).map_err(|m| bad(&m))?;
        if coeffs.len() > MAX_EIGENSTATE + 1 {
            return Err(bad(&format!("at most {} coefficients", MAX_EIGENSTATE + 1)));
        }
        let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(bad("coefficients must have a nonzero norm"));
        }
        let scale = norm_sq.sqrt().recip();
        return Ok(StateSpec::Superposition(
            coeffs.iter().map(|c| c * scale).collect(),
        ));
    }
    if let Some(rest) = raw.strip_prefix("thermal:") {
        let (theta_str, level_str) = rest
            .split_once(':')
            .ok_or_else(|| bad("expected thermal:THETA:M"))?;
        let theta: f64 = theta_str
            .trim()
            .parse()
            .map_err(|_| bad("THETA must be a number"))?;
        if !(theta.is_finite() && theta > 0.0) {
            return Err(bad("THETA must be positive"));
        }
        let max_level: usize = level_str
            .trim()
            .parse()
            .map_err(|_| bad("M must be an integer"))?;
        if max_level > MAX_EIGENSTATE {
            return Err(bad(&format!("M exceeds {MAX_EIGENSTATE}")));
        }
        return Ok(StateSpec::Thermal { theta, max_level });
    }
    if let Some(rest) = raw.strip_prefix("mix:") {
        let weights = parse_float_list(rest).map_err(|m| bad(&m))?;
        if weights.len() > MAX_EIGENSTATE + 1 {
            return Err(bad(&format!("at most {} weights", MAX_EIGENSTATE + 1)));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(bad("weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(bad("weights must not all vanish"));
        }
        return Ok(StateSpec::Mixture(
            weights.iter().map(|w| w / total).collect(),
        ));
    }
    Err(bad("expected n:K, super:..., thermal:THETA:M, or mix:..."))
}

fn parse_float_list(raw: &str) -> Result<Vec<f64>, String> {
    let mut values = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err("empty entry in number list".into());
        }
        values.push(
            part.parse::<f64>()
                .map_err(|_| format!("`{part}` is not a number"))?,
        );
    }
    if values.is_empty() {
        return Err("expected at least one number".into());
    }
    Ok(values)
}

/// Parses a float that may carry a trailing `pi`, e.g. `2pi`, `0.5pi`, `pi`.
pub fn parse_pi_float(raw: &str) -> Result<f64, String> {
    let trimmed = raw.trim();
    let lower = trimmed.to_ascii_lowercase();
    if let Some(head) = lower.strip_suffix("pi") {
        let factor = match head.trim_end() {
            "" => 1.0,
            "-" => -1.0,
            other => other
                .parse::<f64>()
                .map_err(|_| format!("`{trimmed}` is not a number"))?,
        };
        return Ok(factor * PI);
    }
    trimmed
        .parse::<f64>()
        .map_err(|_| format!("`{trimmed}` is not a number"))
}

fn take_pi(merged: &BTreeMap<String, String>, key: &str, default: f64) -> CliResult<f64> {
    match merged.get(key) {
        None => Ok(default),
        Some(raw) => parse_pi_float(raw).map_err(|m| CliError::Config(format!("{key}: {m}"))),
    }
}

fn take_f64(merged: &BTreeMap<String, String>, key: &str, default: f64) -> CliResult<f64> {
    match merged.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: `{raw}` is not a number"))),
    }
}

fn take_usize(merged: &BTreeMap<String, String>, key: &str, default: usize) -> CliResult<usize> {
    match merged.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: `{raw}` is not a non-negative integer"))),
    }
}

fn take_u64(merged: &BTreeMap<String, String>, key: &str, default: u64) -> CliResult<u64> {
    match merged.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: `{raw}` is not a non-negative integer"))),
    }
}

fn positive(value: f64, key: &str) -> CliResult<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Config(format!("{key} must be positive and finite")))
    }
}

fn finite(value: f64, key: &str) -> CliResult<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Config(format!("{key} must be finite")))
    }
}

pub fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(",")
}
