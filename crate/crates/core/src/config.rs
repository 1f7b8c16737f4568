//! Run configuration: a strict TOML file with every field defaulted,
//! command-line overrides, and a content hash that identifies a run.
//!
//! ```toml
//! model = "models/brusselator.crn"
//! omega = 3000.0
//! seed = 7
//!
//! [rate_overrides]
//! 1 = 2.5
//!
//! [escape]
//! omega_list = [50.0, 100.0, 200.0, 400.0]
//! zeta_list = [2.5]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::deterministic::CycleOptions;
use crate::model::{self, ReactionNetwork};
use crate::phase::VariationalConfig;
use crate::stochastic::Engine;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("model {path}: {source}")]
    Model {
        path: PathBuf,
        source: model::ParseError,
    },
    #[error(transparent)]
    Network(#[from] model::ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative and absolute tolerance of the deterministic integrations.
    pub integrator_tol: f64,
    /// Shooting residual target.
    pub cycle_tol: f64,
    /// Phase-grid size `G`.
    pub grid_size: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = CycleOptions::default();
        Self {
            integrator_tol: c.integrator_tol,
            cycle_tol: c.tol,
            grid_size: c.grid_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeConfig {
    pub omega_list: Vec<f64>,
    pub zeta_list: Vec<f64>,
    pub replicas: u64,
    /// Horizon in model time; `None` means one period.
    pub horizon: Option<f64>,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self {
            omega_list: vec![50.0, 100.0, 200.0, 400.0],
            zeta_list: vec![2.5],
            replicas: 10_000,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Reaction DSL file; the built-in Brusselator (`a = 1, b = 2.5`) when
    /// absent.
    pub model: Option<PathBuf>,
    pub omega: f64,
    pub engine: Engine,
    pub seed: u64,
    pub out: PathBuf,
    /// Simulated time; `None` means five periods (or 10 time units for
    /// networks without a limit cycle).
    pub t_end: Option<f64>,
    /// Output spacing for `simulate`; `None` records every event.
    pub sample_dt: Option<f64>,
    /// Euler–Maruyama step of the Langevin engine; `None` means
    /// `period / 2000`, or 1e-3 for networks without a limit cycle.
    pub cle_step: Option<f64>,
    /// Concentrations where `simulate` starts; `None` means `Phi(0)`, or the
    /// cycle seed when the network has no limit cycle.
    pub initial_state: Option<Vec<f64>>,
    /// Starting point of the limit-cycle search; ones when absent.
    pub cycle_seed: Option<Vec<f64>>,
    /// Rate constants replaced by reaction index (0-based).
    pub rate_overrides: BTreeMap<String, f64>,
    pub tolerances: Tolerances,
    pub phase: VariationalConfig,
    pub escape: EscapeConfig,
    /// Samples per period in benchmark output.
    pub samples_per_period: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            omega: 3000.0,
            engine: Engine::default(),
            seed: 0,
            out: PathBuf::from("out"),
            t_end: None,
            sample_dt: None,
            cle_step: None,
            initial_state: None,
            cycle_seed: None,
            rate_overrides: BTreeMap::new(),
            tolerances: Tolerances::default(),
            phase: VariationalConfig::default(),
            escape: EscapeConfig::default(),
            samples_per_period: 200,
        }
    }
}

/// Parse and validate a configuration file. An empty file gives the
/// defaults. A relative `model` path is resolved against the file's
/// directory.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    if let Some(m) = &cfg.model {
        if m.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.model = Some(base.join(m));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse configuration text without touching the filesystem.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<config>"),
        message: e.to_string(),
    })
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be positive and finite, got {}", self.omega));
        }
        let t = &self.tolerances;
        if !(t.integrator_tol > 0.0 && t.cycle_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if t.grid_size < 16 {
            return bad(format!("grid_size must be at least 16, got {}", t.grid_size));
        }
        self.phase.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.cle_step.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
            return bad("cle_step must be positive".into());
        }
        for (name, v) in [("t_end", self.t_end), ("sample_dt", self.sample_dt), ("escape.horizon", self.escape.horizon)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) || (name == "sample_dt" && v == 0.0) {
                    return bad(format!("{name} must be nonnegative and finite, got {v}"));
                }
            }
        }
        if self.samples_per_period == 0 {
            return bad("samples_per_period must be positive".into());
        }
        let e = &self.escape;
        if e.omega_list.iter().any(|&o| !(o > 0.0)) || e.zeta_list.iter().any(|&z| !(z > 0.0)) {
            return bad("escape omega_list and zeta_list entries must be positive".into());
        }
        if e.replicas == 0 {
            return bad("escape.replicas must be positive".into());
        }
        for (key, &rate) in &self.rate_overrides {
            if key.parse::<usize>().is_err() {
                return bad(format!("rate_overrides key `{key}` is not a reaction index"));
            }
            if !(rate > 0.0 && rate.is_finite()) {
                return bad(format!("rate_overrides.{key} must be positive, got {rate}"));
            }
        }
        if let Some(m) = &self.model {
            if !m.is_file() {
                return bad(format!("model file {} does not exist", m.display()));
            }
        }
        Ok(())
    }

    pub fn cycle_options(&self) -> CycleOptions {
        CycleOptions {
            grid_size: self.tolerances.grid_size,
            tol: self.tolerances.cycle_tol,
            integrator_tol: self.tolerances.integrator_tol,
            ..CycleOptions::default()
        }
    }

    /// The configured network at `omega`, with rate overrides applied.
    pub fn network(&self) -> Result<ReactionNetwork, ConfigError> {
        let net = match &self.model {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                model::parse_network(&text, self.omega).map_err(|source| ConfigError::Model {
                    path: path.clone(),
                    source,
                })?
            }
            None => model::brusselator(1.0, 2.5, self.omega)?,
        };
        if self.rate_overrides.is_empty() {
            return Ok(net);
        }
        let mut reactions = net.reactions().to_vec();
        for (key, &rate) in &self.rate_overrides {
            let idx: usize = key
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("rate_overrides key `{key}` is not a reaction index")))?;
            let r = reactions.get_mut(idx).ok_or_else(|| {
                ConfigError::Invalid(format!("rate_overrides index {idx} out of range ({} reactions)", net.num_reactions()))
            })?;
            r.rate_constant = rate;
        }
        Ok(ReactionNetwork::new(net.species().to_vec(), reactions, self.omega)?)
    }

    pub fn cycle_seed_for(&self, net: &ReactionNetwork) -> Vec<f64> {
        match &self.cycle_seed {
            Some(s) => s.clone(),
            None if self.model.is_none() => vec![2.0, 2.0],
            None => vec![1.0; net.num_species()],
        }
    }

    /// Canonical JSON of the configuration. Field order is fixed by the
    /// struct layout, so equal configurations give equal text.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.identity()).expect("config serializes")
    }

    /// The configuration minus the output location, which does not change
    /// what a run computes.
    fn identity(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out");
        }
        value
    }

    /// SHA-256 over the canonical JSON and the model source, in hex.
    pub fn hash(&self) -> Result<String, ConfigError> {
        let mut h = Sha256::new();
        h.update(self.canonical_json().as_bytes());
        if let Some(path) = &self.model {
            let src = std::fs::read(path).map_err(|source| ConfigError::Read {
                path: path.clone(),
                source,
            })?;
            h.update([0u8]);
            h.update(&src);
        }
        Ok(hex::encode(h.finalize()))
    }

    /// Every field as a dotted `key = value` pair, in a fixed order.
    pub fn flat_entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        flatten("", &self.identity(), &mut out);
        out
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
    match v {
        serde_json::Value::Object(map) => {
            if map.is_empty() {
                out.push((prefix.to_string(), "{}".into()));
            }
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        serde_json::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
