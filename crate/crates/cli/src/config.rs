//! Experiment configuration: a single TOML document that fully determines a run.

use std::fmt;
use std::path::PathBuf;

use modelh::forcing::ProfileMode;
use modelh::grid::DEFAULT_DEALIAS_FRACTION;
use modelh::rng::Magnitude;
use modelh::state::DEFAULT_COORDINATES;
use modelh::{ForcingSymbol, Grid, PolynomialPotential, Signal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem, pinned to the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl fmt::Display) -> Self {
        Self { field: field.to_string(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence. Not part of the digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub experiment: ExperimentKnobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_dealias() -> f64 {
    DEFAULT_DEALIAS_FRACTION
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 32, length: 2.0 * std::f64::consts::PI, dealias_fraction: DEFAULT_DEALIAS_FRACTION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub viscosity: f64,
    pub mobility: f64,
    pub epsilon: f64,
    pub dt: f64,
    /// Fixed `S`; when absent it is calibrated on the initial data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilization: Option<f64>,
    pub stabilization_margin: f64,
    pub max_energy_violation: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            viscosity: 1.0,
            mobility: 1.0,
            epsilon: 1.0,
            dt: 1e-3,
            stabilization: None,
            stabilization_margin: 1.0,
            max_energy_violation: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    /// Ascending coefficients of `F`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { family: Some("canonical".into()), m: Some(1), coefficients: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default = "zero_signal")]
    pub signal: Signal,
    /// Stream-function modes of the profile.
    #[serde(default)]
    pub modes: Vec<ProfileMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_norm: Option<f64>,
}

fn zero_signal() -> Signal {
    Signal::Zero
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self { signal: Signal::Zero, modes: Vec::new(), l2_norm: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MagnitudeKind {
    H0,
    Sup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub magnitude: MagnitudeKind,
    pub size: f64,
    pub count: usize,
    pub max_mode: i64,
    /// Seed-stream job index of the first datum.
    pub first_job: u64,
    /// Data are started at this time.
    pub start_time: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { magnitude: MagnitudeKind::H0, size: 1.0, count: 2, max_mode: 4, first_job: 0, start_time: 0.0 }
    }
}

impl DataConfig {
    pub fn magnitude(&self) -> Magnitude {
        match self.magnitude {
            MagnitudeKind::H0 => Magnitude::H0(self.size),
            MagnitudeKind::Sup => Magnitude::Sup(self.size),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub t_end: f64,
    /// Steps between logged rows.
    pub observe_every: usize,
    /// Steps between checkpoints, a multiple of `observe_every`; 0 writes
    /// only the final state.
    pub checkpoint_every: usize,
    /// `"random"` (first datum of `[data]`) or a checkpoint path.
    pub initial: String,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { t_end: 1.0, observe_every: 10, checkpoint_every: 0, initial: "random".into() }
    }
}

/// Knobs of the verifier and lab experiments; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentKnobs {
    pub horizon: f64,
    pub observe_every: usize,
    /// Size factor of the second data set in the dissipative checks.
    pub large_factor: f64,
    /// Absolute `H0` size of the perturbation in dependence runs.
    pub perturbation: f64,
    /// Relative change of the symbol for the second trajectory; 0 disables.
    pub symbol_perturbation: f64,
    pub dependence_horizon: f64,
    /// Largest gap `2^-gap_start` and number of halvings for time regularity.
    pub gap_start: i32,
    pub gap_count: usize,
    /// Highest mode of the time-regularity datum; rough data measure the
    /// decay of their top modes instead of the time exponent.
    pub regularity_max_mode: i64,
    pub smoothing_pairs: usize,
    /// Fixed `tau0`; chosen from the data when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    pub tau0_horizon: f64,
    pub tau0_iterations: usize,
    pub tau0_probes: usize,
    pub tau0_delta: f64,
    pub ball_samples: usize,
    pub pullback_ladder: usize,
    pub pullback_depth: usize,
    pub cloud_size: usize,
    pub coordinates: usize,
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_rungs: usize,
    pub q: f64,
    pub holder_rungs: usize,
    pub holder_samples: usize,
    pub certify_radius: f64,
    pub certify_samples: usize,
}

impl Default for ExperimentKnobs {
    fn default() -> Self {
        Self {
            horizon: 40.0,
            observe_every: 16,
            large_factor: 10.0,
            perturbation: 1e-6,
            symbol_perturbation: 0.0,
            dependence_horizon: 10.0,
            gap_start: 4,
            gap_count: 6,
            regularity_max_mode: 1,
            smoothing_pairs: 4,
            tau0: None,
            tau0_horizon: 20.0,
            tau0_iterations: 4,
            tau0_probes: 2,
            tau0_delta: 1.0,
            ball_samples: 16,
            pullback_ladder: 8,
            pullback_depth: 16,
            cloud_size: 1000,
            coordinates: DEFAULT_COORDINATES,
            eps_max: 1.0,
            eps_min: 1e-3,
            eps_rungs: 8,
            q: 4.0,
            holder_rungs: 7,
            holder_samples: 4,
            certify_radius: 10.0,
            certify_samples: 10_000,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or("<document>".to_string(), |s| key_at(text, s.start));
            ConfigError::new(&field, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical form of everything that influences results.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        toml::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn digest(&self) -> String {
        let d = Sha256::digest(self.canonical().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid()?;
        self.build_potential()?;
        self.build_forcing()?;
        let p = &self.params;
        for (name, v) in [
            ("params.viscosity", p.viscosity),
            ("params.mobility", p.mobility),
            ("params.epsilon", p.epsilon),
            ("params.dt", p.dt),
            ("params.stabilization_margin", p.stabilization_margin),
        ] {
            positive(name, v)?;
        }
        if let Some(s) = p.stabilization {
            if !(s.is_finite() && s >= 0.0) {
                return Err(ConfigError::new("params.stabilization", "must be finite and >= 0"));
            }
        }
        if !(p.max_energy_violation >= 0.0) {
            return Err(ConfigError::new("params.max_energy_violation", "must be >= 0"));
        }
        let d = &self.data;
        if !(d.size.is_finite() && d.size >= 0.0) {
            return Err(ConfigError::new("data.size", "must be finite and >= 0"));
        }
        if d.count == 0 {
            return Err(ConfigError::new("data.count", "must be at least 1"));
        }
        if d.max_mode < 1 || d.max_mode > self.grid()?.cutoff() {
            return Err(ConfigError::new("data.max_mode", format!("must lie in 1..={}", self.grid()?.cutoff())));
        }
        if !d.start_time.is_finite() {
            return Err(ConfigError::new("data.start_time", "must be finite"));
        }
        let s = &self.simulate;
        positive("simulate.t_end", s.t_end)?;
        if s.observe_every == 0 {
            return Err(ConfigError::new("simulate.observe_every", "must be at least 1"));
        }
        if s.checkpoint_every % s.observe_every != 0 {
            return Err(ConfigError::new("simulate.checkpoint_every", "must be a multiple of simulate.observe_every"));
        }
        if s.initial.is_empty() {
            return Err(ConfigError::new("simulate.initial", "expected \"random\" or a checkpoint path"));
        }
        self.validate_knobs()
    }

    fn validate_knobs(&self) -> Result<(), ConfigError> {
        let k = &self.experiment;
        if !(k.horizon >= 10.0) {
            return Err(ConfigError::new("experiment.horizon", "must be at least 10"));
        }
        for (name, v) in [
            ("experiment.large_factor", k.large_factor),
            ("experiment.perturbation", k.perturbation),
            ("experiment.dependence_horizon", k.dependence_horizon),
            ("experiment.tau0_horizon", k.tau0_horizon),
            ("experiment.tau0_delta", k.tau0_delta),
            ("experiment.eps_max", k.eps_max),
            ("experiment.eps_min", k.eps_min),
            ("experiment.certify_radius", k.certify_radius),
        ] {
            positive(name, v)?;
        }
        if let Some(t) = k.tau0 {
            positive("experiment.tau0", t)?;
        }
        if !(k.symbol_perturbation.is_finite() && k.symbol_perturbation >= 0.0) {
            return Err(ConfigError::new("experiment.symbol_perturbation", "must be finite and >= 0"));
        }
        if !(k.eps_min < k.eps_max && k.eps_max <= 1.0) {
            return Err(ConfigError::new("experiment.eps_min", "need 0 < eps_min < eps_max <= 1"));
        }
        if !(k.q > 2.0) {
            return Err(ConfigError::new("experiment.q", "must exceed 2"));
        }
        for (name, v, min) in [
            ("experiment.observe_every", k.observe_every, 1),
            ("experiment.gap_count", k.gap_count, 3),
            ("experiment.smoothing_pairs", k.smoothing_pairs, 1),
            ("experiment.tau0_iterations", k.tau0_iterations, 1),
            ("experiment.tau0_probes", k.tau0_probes, 1),
            ("experiment.ball_samples", k.ball_samples, 2),
            ("experiment.pullback_ladder", k.pullback_ladder, 3),
            ("experiment.pullback_depth", k.pullback_depth, 1),
            ("experiment.cloud_size", k.cloud_size, 1),
            ("experiment.coordinates", k.coordinates, 1),
            ("experiment.eps_rungs", k.eps_rungs, 3),
            ("experiment.holder_rungs", k.holder_rungs, 3),
            ("experiment.holder_samples", k.holder_samples, 1),
            ("experiment.certify_samples", k.certify_samples, 2),
        ] {
            if v < min {
                return Err(ConfigError::new(name, format!("must be at least {min}")));
            }
        }
        if k.pullback_ladder > k.pullback_depth {
            return Err(ConfigError::new("experiment.pullback_ladder", "must not exceed experiment.pullback_depth"));
        }
        if k.regularity_max_mode < 1 || k.regularity_max_mode > self.grid()?.cutoff() {
            return Err(ConfigError::new(
                "experiment.regularity_max_mode",
                format!("must lie in 1..={}", self.grid()?.cutoff()),
            ));
        }
        if k.ball_samples < 4 * k.smoothing_pairs {
            return Err(ConfigError::new("experiment.ball_samples", "need at least 4 * experiment.smoothing_pairs"));
        }
        if k.gap_start < 0 {
            return Err(ConfigError::new("experiment.gap_start", "must be >= 0"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let g = &self.grid;
        Grid::with_dealias(g.n, g.length, g.dealias_fraction).map_err(|e| ConfigError::new("grid", e))
    }

    pub fn build_potential(&self) -> Result<PolynomialPotential, ConfigError> {
        let p = &self.potential;
        match (&p.family, &p.coefficients) {
            (Some(_), Some(_)) => Err(ConfigError::new("potential", "give either family or coefficients, not both")),
            (None, None) => Err(ConfigError::new("potential", "missing family or coefficients")),
            (None, Some(c)) => PolynomialPotential::new(c).map_err(|e| ConfigError::new("potential.coefficients", e)),
            (Some(f), None) if f == "canonical" => {
                let m = p.m.ok_or_else(|| ConfigError::new("potential.m", "required for the canonical family"))?;
                PolynomialPotential::canonical(m).map_err(|e| ConfigError::new("potential.m", e))
            }
            (Some(f), None) => Err(ConfigError::new("potential.family", format!("unknown family {f:?}; expected \"canonical\""))),
        }
    }

    pub fn build_forcing(&self) -> Result<ForcingSymbol, ConfigError> {
        let grid = self.grid()?;
        let f = &self.forcing;
        if f.modes.is_empty() {
            if !f.signal.is_zero() {
                return Err(ConfigError::new("forcing.modes", "a nonzero signal needs at least one profile mode"));
            }
            return Ok(ForcingSymbol::zero(&grid));
        }
        if let Some(l2) = f.l2_norm {
            positive("forcing.l2_norm", l2)?;
        }
        check_signal(&f.signal, "forcing.signal")?;
        ForcingSymbol::from_stream_modes(&grid, &f.modes, f.l2_norm, f.signal.clone())
            .map_err(|e| ConfigError::new("forcing.modes", e))
    }
}

fn check_signal(s: &Signal, field: &str) -> Result<(), ConfigError> {
    let finite = |v: f64, name: &str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::new(&format!("{field}.{name}"), "must be finite"))
        }
    };
    match s {
        Signal::Zero | Signal::Constant => Ok(()),
        Signal::Sinusoid { amplitude, omega, phase } => {
            finite(*amplitude, "amplitude")?;
            finite(*omega, "omega")?;
            finite(*phase, "phase")
        }
        Signal::QuasiPeriodic { components } => {
            if components.is_empty() {
                return Err(ConfigError::new(&format!("{field}.components"), "must not be empty"));
            }
            for c in components {
                finite(c.amplitude, "components.amplitude")?;
                finite(c.omega, "components.omega")?;
                finite(c.phase, "components.phase")?;
            }
            Ok(())
        }
        Signal::PastDecaying { base, rate, switch_time } => {
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(ConfigError::new(&format!("{field}.rate"), "must be positive"));
            }
            finite(*switch_time, "switch_time")?;
            check_signal(base, &format!("{field}.base"))
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(name, format!("must be positive and finite, got {v}")))
    }
}

/// Dotted key path of the table entry enclosing byte offset `at`, for parse
/// errors that the TOML layer reports only as a span.
fn key_at(text: &str, at: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        if pos > at {
            break;
        }
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.split(']').next()) {
            table = name.trim_matches(|c| c == '[' || c == ' ').to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
        pos += line.len();
    }
    match (table.is_empty(), key.is_empty()) {
        (true, true) => "<document>".into(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}
