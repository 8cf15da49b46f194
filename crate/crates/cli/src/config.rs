use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ua_core::distribution::PhaseDistribution;
use ua_core::lattice::{Lattice, MIN_SIDE};
use ua_core::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub n: usize,
    /// One coupling per axis, or a single value used on every axis.
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    /// Random `(realization, j != k, z)` triples per identity.
    pub triples: usize,
    pub radii: Vec<f64>,
    pub n_theta: usize,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            triples: 50,
            radii: vec![0.5, 0.9, 0.99],
            n_theta: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizationConfig {
    pub cutoff: f64,
    pub n_theta: usize,
    /// Phase at site 0 for the hatted measure; `None` means 0.
    pub theta0: Option<f64>,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            cutoff: 1e6,
            n_theta: 32,
            theta0: None,
        }
    }
}

fn default_s() -> Vec<f64> {
    vec![0.5]
}

fn default_samples() -> usize {
    100
}

fn default_guard() -> f64 {
    ua_core::resolvent::DEFAULT_GUARD
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment. Complex numbers are written `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub distribution: PhaseDistribution,
    #[serde(default = "default_s")]
    pub s: Vec<f64>,
    #[serde(default)]
    pub z: Vec<Complex64>,
    #[serde(default)]
    pub site: usize,
    /// `None` means every distance `0..=N/2-2`.
    #[serde(default)]
    pub distances: Option<Vec<usize>>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub fit_window: Option<(usize, usize)>,
    #[serde(default = "default_guard")]
    pub guard: f64,
    #[serde(default)]
    pub identities: IdentitiesConfig,
    #[serde(default)]
    pub localization: LocalizationConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new(json_field(&e), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with `workers` and `output_dir`
    /// cleared, since neither changes results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        c.output_dir = PathBuf::new();
        hex(&Sha256::digest(
            serde_json::to_vec(&c).expect("config serializes"),
        ))
    }

    pub fn couplings(&self) -> Vec<f64> {
        if self.model.t.len() == 1 {
            vec![self.model.t[0]; self.model.d]
        } else {
            self.model.t.clone()
        }
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let lattice = Lattice::new(self.model.d, self.model.n)
            .map_err(|e| ConfigError::new("model", e.to_string()))?;
        ModelParams::new(lattice, self.couplings())
            .map_err(|e| ConfigError::new("model.t", e.to_string()))
    }

    pub fn distance_list(&self) -> Vec<usize> {
        self.distances
            .clone()
            .unwrap_or_else(|| (0..=(self.model.n / 2).saturating_sub(2)).collect())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        if m.d == 0 {
            return Err(ConfigError::new("model.d", "dimension must be at least 1"));
        }
        if m.n % 2 == 1 {
            return Err(ConfigError::new(
                "model.n",
                format!("side {} must be even", m.n),
            ));
        }
        if m.n < MIN_SIDE {
            return Err(ConfigError::new(
                "model.n",
                format!("side {} is below {MIN_SIDE}", m.n),
            ));
        }
        let sites = u32::try_from(m.d)
            .ok()
            .and_then(|d| m.n.checked_pow(d))
            .ok_or_else(|| ConfigError::new("model", "N^d overflows"))?;
        if m.t.len() != 1 && m.t.len() != m.d {
            return Err(ConfigError::new(
                "model.t",
                format!("expected 1 or {} couplings, got {}", m.d, m.t.len()),
            ));
        }
        for (i, &t) in m.t.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                return Err(ConfigError::new(
                    format!("model.t[{i}]"),
                    format!("{t} is outside [0, 1]"),
                ));
            }
        }
        self.distribution
            .validate()
            .map_err(|e| ConfigError::new("distribution", e.to_string()))?;
        if self.s.is_empty() {
            return Err(ConfigError::new("s", "at least one exponent is required"));
        }
        for (i, &s) in self.s.iter().enumerate() {
            if !(s > 0.0 && s < 1.0) {
                return Err(ConfigError::new(
                    format!("s[{i}]"),
                    format!("{s} is outside (0, 1)"),
                ));
            }
        }
        if !(self.guard > 0.0 && self.guard < 1.0) {
            return Err(ConfigError::new(
                "guard",
                format!("{} is outside (0, 1)", self.guard),
            ));
        }
        for (i, z) in self.z.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(ConfigError::new(format!("z[{i}]"), "not finite"));
            }
            let dist = (z.norm() - 1.0).abs();
            if dist < self.guard {
                return Err(ConfigError::new(
                    format!("z[{i}]"),
                    format!(
                        "|z| = {} lies within the guard {:e} of the unit circle",
                        z.norm(),
                        self.guard
                    ),
                ));
            }
        }
        if self.site >= sites {
            return Err(ConfigError::new(
                "site",
                format!("{} is not below N^d = {sites}", self.site),
            ));
        }
        let max = (m.n / 2).saturating_sub(2);
        if let Some(ds) = &self.distances {
            if let Some(bad) = ds.iter().find(|&&l| l > max) {
                return Err(ConfigError::new(
                    "distances",
                    format!("{bad} exceeds N/2 - 2 = {max}"),
                ));
            }
        }
        if self.n_samples < 2 {
            return Err(ConfigError::new(
                "n_samples",
                "at least 2 realizations are required",
            ));
        }
        if self.workers == Some(0) {
            return Err(ConfigError::new("workers", "must be at least 1"));
        }
        if let Some((lo, hi)) = self.fit_window {
            if lo > hi || hi > max {
                return Err(ConfigError::new(
                    "fit_window",
                    format!("[{lo}, {hi}] must be ordered and end at most at {max}"),
                ));
            }
        }
        let id = &self.identities;
        if id.triples == 0 {
            return Err(ConfigError::new("identities.triples", "must be at least 1"));
        }
        if id.n_theta == 0 {
            return Err(ConfigError::new("identities.n_theta", "must be at least 1"));
        }
        for (i, &r) in id.radii.iter().enumerate() {
            if !(0.0..1.0).contains(&r) {
                return Err(ConfigError::new(
                    format!("identities.radii[{i}]"),
                    format!("{r} is outside [0, 1)"),
                ));
            }
        }
        let loc = &self.localization;
        if !(loc.cutoff > 0.0) {
            return Err(ConfigError::new("localization.cutoff", "must be positive"));
        }
        if loc.n_theta == 0 {
            return Err(ConfigError::new(
                "localization.n_theta",
                "must be at least 1",
            ));
        }
        if let Some(th) = loc.theta0 {
            if !th.is_finite() {
                return Err(ConfigError::new("localization.theta0", "not finite"));
            }
        }
        Ok(())
    }
}

/// Best-effort field name from a serde_json message such as
/// "unknown field `foo`" or "missing field `model`".
fn json_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<file>".to_string())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
