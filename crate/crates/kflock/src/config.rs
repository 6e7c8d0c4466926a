//! Run configuration: TOML sections, `--key value` overrides and validation
//! against the preconditions of the core crate.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use kflock_core::homogeneous::{VDensity, VGrid};
use kflock_core::model::{HerdingFunction, InteractionKernel};
use kflock_core::particles::ForcePath;
use kflock_core::pde::{DensityField, PhaseGrid};
use kflock_core::{Error as CoreError, ModelParams};
use serde::{Deserialize, Serialize};

/// The configuration shipped in `configs/default.toml`.
pub const DEFAULT_TOML: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HerdingKind {
    Rational,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Uniform,
    VonMises,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcePathKind {
    /// Fourier with as many modes as the kernel needs.
    Auto,
    Direct,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub sigma: f64,
    pub herding: HerdingKind,
    pub beta: f64,
    /// Samples of `G` on `u ≥ 0` for the tabulated law.
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub kernel: KernelKind,
    pub kappa: f64,
    pub lambda: f64,
    pub mode: u32,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            sigma: 0.25,
            herding: HerdingKind::Rational,
            beta: 1.0,
            knots: Vec::new(),
            values: Vec::new(),
            kernel: KernelKind::VonMises,
            kappa: 4.0,
            lambda: 0.5,
            mode: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_x: usize,
    pub n_v: usize,
    /// Half-width of the velocity range; the truncation rule when absent.
    pub v_max: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_x: 64, n_v: 256, v_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t: f64,
    /// Record every `stride` steps.
    pub stride: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 5e-3, t: 10.0, stride: 20 }
    }
}

/// `f0(x, v) ∝ (1 + eta cos 2π·mode·x) N(m0, b0)(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub m0: f64,
    /// Initial velocity variance; `sigma` when absent.
    pub b0: Option<f64>,
    pub eta: f64,
    pub mode: u32,
}

impl Default for InitSection {
    fn default() -> Self {
        Self { m0: 0.5, b0: None, eta: 0.3, mode: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogeneousSection {
    /// Highest moment order integrated.
    pub order: usize,
}

impl Default for HomogeneousSection {
    fn default() -> Self {
        Self { order: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSection {
    pub iters: usize,
    pub memory_mb: usize,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self { iters: 6, memory_mb: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticlesSection {
    pub n: usize,
    pub seed: u64,
    /// Runs seeds `seed, seed + 1, ..`.
    pub seeds: usize,
    pub dt: f64,
    pub antithetic: bool,
    pub force_path: ForcePathKind,
    /// Harmonics for `force_path = "fourier"`.
    pub modes: usize,
}

impl Default for ParticlesSection {
    fn default() -> Self {
        Self {
            n: 2000,
            seed: 0,
            seeds: 1,
            dt: 0.01,
            antithetic: false,
            force_path: ForcePathKind::Auto,
            modes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanfieldSection {
    pub ns: Vec<usize>,
    pub seeds: usize,
    /// Particle time step.
    pub dt: f64,
}

impl Default for MeanfieldSection {
    fn default() -> Self {
        Self { ns: vec![500, 2000, 8000], seeds: 20, dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationarySection {
    /// Number of grids, each with both spacings halved.
    pub levels: usize,
}

impl Default for StationarySection {
    fn default() -> Self {
        Self { levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbSection {
    pub lambdas: Vec<f64>,
    pub mode: u32,
    pub dt: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub eta: f64,
}

impl Default for PerturbSection {
    fn default() -> Self {
        Self { lambdas: vec![0.05, 0.1, 0.2], mode: 1, dt: 0.01, tol: 1e-8, max_steps: 100_000, eta: 0.05 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub init: InitSection,
    pub homogeneous: HomogeneousSection,
    pub picard: PicardSection,
    pub particles: ParticlesSection,
    pub meanfield: MeanfieldSection,
    pub stationary: StationarySection,
    pub perturb: PerturbSection,
}

/// One violated rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub rule: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration:\n{}", list(.0))]
    Invalid(Vec<ConfigIssue>),
}

fn list(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

fn issue(path: impl Into<String>, rule: impl Into<String>) -> ConfigIssue {
    ConfigIssue { path: path.into(), rule: rule.into() }
}

/// Short flag names and the keys they set.
pub const ALIASES: &[(&str, &str)] = &[
    ("sigma", "model.sigma"),
    ("beta", "model.beta"),
    ("kernel", "model.kernel"),
    ("kappa", "model.kappa"),
    ("lambda", "model.lambda"),
    ("n_x", "grid.n_x"),
    ("n_v", "grid.n_v"),
    ("v_max", "grid.v_max"),
    ("dt", "time.dt"),
    ("t", "time.t"),
    ("stride", "time.stride"),
    ("m0", "init.m0"),
    ("m1", "init.m0"),
    ("b0", "init.b0"),
    ("eta", "init.eta"),
    ("order", "homogeneous.order"),
    ("iters", "picard.iters"),
    ("n", "particles.n"),
    ("seed", "particles.seed"),
    ("seeds", "particles.seeds"),
    ("ns", "meanfield.ns"),
    ("levels", "stationary.levels"),
    ("lambdas", "perturb.lambdas"),
];

fn resolve_key(key: &str) -> Option<String> {
    if key.contains('.') {
        return Some(key.to_string());
    }
    ALIASES.iter().find(|(k, _)| *k == key).map(|(_, full)| full.to_string())
}

/// Parses a flag value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigIssue> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap();
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(issue(key, "is not inside a section")),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses `text`, applies the overrides and validates the result.
pub fn load_str(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigError::Invalid(vec![issue("<config>", e.message().to_string())])
    })?;
    let mut issues = Vec::new();
    for (k, v) in overrides {
        match resolve_key(k) {
            Some(full) => {
                if let Err(i) = set_path(&mut table, &full, parse_value(v)) {
                    issues.push(i);
                }
            }
            None => issues.push(issue(format!("--{k}"), "unknown option")),
        }
    }
    if !issues.is_empty() {
        return Err(ConfigError::Invalid(issues));
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Invalid(vec![issue("<config>", e.message().to_string())]))?;
    let issues = cfg.validate();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

/// Reads the file at `path` (the shipped defaults when `None`), applies the
/// overrides and validates.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    match path {
        None => load_str(DEFAULT_TOML, overrides),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?;
            load_str(&text, overrides)
        }
    }
}

/// [`load`] without overrides.
pub fn validate_config(path: &Path) -> Result<RunConfig, ConfigError> {
    load(Some(path), &[])
}

fn core_issue(section: &str, e: CoreError) -> ConfigIssue {
    match e {
        CoreError::InvalidParameter { field, reason } => issue(format!("{section}.{field}"), reason),
        other => issue(section, other.to_string()),
    }
}

fn positive(issues: &mut Vec<ConfigIssue>, path: &str, x: f64) {
    if !(x > 0.0 && x.is_finite()) {
        issues.push(issue(path, "must be > 0"));
    }
}

impl RunConfig {
    pub fn model_params(&self) -> Result<ModelParams, ConfigIssue> {
        ModelParams::new(self.model.sigma, self.herding()?, self.kernel()?).map_err(|e| core_issue("model", e))
    }

    fn herding(&self) -> Result<HerdingFunction, ConfigIssue> {
        let m = &self.model;
        match m.herding {
            HerdingKind::Rational => HerdingFunction::rational(m.beta),
            HerdingKind::Tabulated => HerdingFunction::tabulated(&m.knots, &m.values),
        }
        .map_err(|e| core_issue("model", e))
    }

    pub fn kernel(&self) -> Result<InteractionKernel, ConfigIssue> {
        let m = &self.model;
        match m.kernel {
            KernelKind::Uniform => Ok(InteractionKernel::uniform()),
            KernelKind::VonMises => InteractionKernel::von_mises(m.kappa),
            KernelKind::Cosine => InteractionKernel::cosine(m.lambda, m.mode),
        }
        .map_err(|e| core_issue("model", e))
    }

    pub fn initial_variance(&self) -> f64 {
        self.init.b0.unwrap_or(self.model.sigma)
    }

    /// Velocity grid wide enough for the initial data and the `±1` states.
    pub fn vgrid(&self) -> Result<VGrid, ConfigIssue> {
        let spread = self.model.sigma.max(self.initial_variance());
        let g = match self.grid.v_max {
            Some(v) => VGrid::new(-v, v, self.grid.n_v),
            None => VGrid::truncated(self.init.m0, spread, self.grid.n_v),
        }
        .map_err(|e| core_issue("grid", e))?;
        if !g.covers(self.init.m0, spread) {
            return Err(issue("grid.v_max", "v_max ≥ max(|m0|, 1) + 6√max(σ, b0) required"));
        }
        Ok(g)
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid, ConfigIssue> {
        PhaseGrid::new(self.grid.n_x, self.vgrid()?).map_err(|e| core_issue("grid", e))
    }

    pub fn initial_velocity_law(&self) -> Result<VDensity, ConfigIssue> {
        VDensity::gaussian(self.vgrid()?, self.init.m0, self.initial_variance()).map_err(|e| core_issue("init", e))
    }

    pub fn initial_field(&self) -> Result<DensityField, ConfigIssue> {
        let fv = self.initial_velocity_law()?;
        let (eta, k) = (self.init.eta, self.init.mode as f64);
        DensityField::product(self.grid.n_x, |x| 1.0 + eta * (2.0 * PI * k * x).cos(), &fv)
            .map_err(|e| core_issue("init", e))
    }

    pub fn force_path(&self, kernel: &InteractionKernel) -> ForcePath {
        match self.particles.force_path {
            ForcePathKind::Auto => ForcePath::fourier_for(kernel),
            ForcePathKind::Direct => ForcePath::Direct,
            ForcePathKind::Fourier => ForcePath::Fourier { n_modes: self.particles.modes },
        }
    }

    /// Bytes the Picard iteration stores for both iterate trajectories.
    pub fn picard_bytes(&self) -> usize {
        let steps = (self.time.t / self.time.dt - 1e-9).ceil().max(0.0) as usize;
        2 * (steps + 1) * self.grid.n_x * self.grid.n_v * 8
    }

    /// The storage rule of the `picard` subcommand, which only that run needs.
    pub fn picard_budget_issue(&self) -> Option<ConfigIssue> {
        (self.picard_bytes() > self.picard.memory_mb << 20).then(|| {
            issue(
                "picard.memory_mb",
                format!("iterate storage needs {} MiB; raise memory_mb or shorten t", self.picard_bytes() >> 20),
            )
        })
    }

    /// Every rule, collected rather than stopping at the first.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        if let Err(i) = self.model_params() {
            out.push(i);
        }
        if self.model.herding == HerdingKind::Rational && !self.model.knots.is_empty() {
            out.push(issue("model.knots", "only used with herding = \"tabulated\""));
        }
        if let Err(i) = self.phase_grid() {
            out.push(i);
        }
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt <= 0.1) {
            out.push(issue("time.dt", "dt in (0, 0.1] required"));
        }
        positive(&mut out, "time.t", t.t);
        if t.stride == 0 {
            out.push(issue("time.stride", "stride ≥ 1 required"));
        }
        if let Some(b0) = self.init.b0 {
            positive(&mut out, "init.b0", b0);
        }
        if !self.init.m0.is_finite() {
            out.push(issue("init.m0", "must be finite"));
        }
        if !(self.init.eta.abs() < 1.0) {
            out.push(issue("init.eta", "|eta| < 1 required for a positive density"));
        }
        if self.init.mode == 0 {
            out.push(issue("init.mode", "mode ≥ 1 required"));
        }
        if !(2..=16).contains(&self.homogeneous.order) {
            out.push(issue("homogeneous.order", "order in 2..=16 required"));
        }
        if self.picard.iters < 2 {
            out.push(issue("picard.iters", "iters ≥ 2 required"));
        }
        let p = &self.particles;
        if p.n == 0 {
            out.push(issue("particles.n", "n ≥ 1 required"));
        }
        if p.seeds == 0 {
            out.push(issue("particles.seeds", "seeds ≥ 1 required"));
        }
        if !(p.dt > 0.0 && p.dt <= 0.05) {
            out.push(issue("particles.dt", "dt in (0, 0.05] required"));
        }
        if p.force_path == ForcePathKind::Fourier && p.modes == 0 {
            out.push(issue("particles.modes", "modes ≥ 1 required for the Fourier path"));
        }
        let mf = &self.meanfield;
        if mf.ns.is_empty() || mf.ns.contains(&0) {
            out.push(issue("meanfield.ns", "a non-empty list of positive particle numbers required"));
        }
        if mf.seeds == 0 {
            out.push(issue("meanfield.seeds", "seeds ≥ 1 required"));
        }
        if !(mf.dt > 0.0 && mf.dt <= 0.05) {
            out.push(issue("meanfield.dt", "dt in (0, 0.05] required"));
        }
        if !(1..=6).contains(&self.stationary.levels) {
            out.push(issue("stationary.levels", "levels in 1..=6 required"));
        }
        let pt = &self.perturb;
        if pt.lambdas.iter().any(|l| !(*l > 0.0 && *l <= 0.5)) {
            out.push(issue("perturb.lambdas", "every lambda in (0, 0.5] required"));
        }
        if pt.mode == 0 {
            out.push(issue("perturb.mode", "mode ≥ 1 required"));
        }
        if !(pt.dt > 0.0 && pt.dt <= 0.1) {
            out.push(issue("perturb.dt", "dt in (0, 0.1] required"));
        }
        positive(&mut out, "perturb.tol", pt.tol);
        if pt.max_steps == 0 {
            out.push(issue("perturb.max_steps", "max_steps ≥ 1 required"));
        }
        if !(pt.eta.abs() < 1.0) {
            out.push(issue("perturb.eta", "|eta| < 1 required"));
        }
        out
    }
}
