//! Configuration files, trace and verdict persistence, run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{SimulationConfig, Trace, TraceRecord};
use crate::equilibrium::{GameKind, DEFAULT_PROFILE_CAP};
use crate::model::{MdpModel, ModelError, ReceiverType, SenderType, TypeStructure, UtilityTables};
use crate::presets;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column order of the CSV trace format.
pub const CSV_COLUMNS: [&str; 11] = [
    "k",
    "x",
    "a",
    "r",
    "a_benign",
    "belief_m_aware",
    "belief_m_unaware",
    "prob_aware",
    "r_aware",
    "f_k",
    "flag",
];

const CONFIG_KEYS: [&str; 13] = [
    "game",
    "preset",
    "model",
    "utilities",
    "steps",
    "horizon",
    "seed",
    "runs",
    "alpha",
    "beta",
    "prior",
    "true_sender",
    "true_receiver",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema violation at `{key}`: {message}")]
    Schema { key: String, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn schema(key: &str, message: impl Into<String>) -> IoError {
    IoError::Schema { key: key.to_string(), message: message.into() }
}

/// On-disk configuration schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub game: GameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<MdpModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<UtilityTables>,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_sender: Option<SenderType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_receiver: Option<ReceiverType>,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<SimulationConfig, IoError> {
        let model = match (&self.preset, self.model) {
            (Some(_), Some(_)) => return Err(schema("model", "give either `preset` or `model`, not both")),
            (None, None) => return Err(schema("preset", "one of `preset` or `model` is required")),
            (Some(name), None) => presets::by_name(name)
                .ok_or_else(|| schema("preset", format!("unknown preset `{name}`; known: {:?}", presets::PRESET_NAMES)))?,
            (None, Some(model)) => model,
        };
        let violations = crate::model::validate_model(&model);
        if !violations.is_empty() {
            return Err(schema("model", format!("{violations:?}")));
        }
        let utilities = match self.utilities {
            Some(u) => {
                u.check_against(&model).map_err(|e| schema("utilities", e.to_string()))?;
                u
            }
            None if self.preset.is_some() => presets::utilities(&model),
            None => return Err(schema("utilities", "required with an inline model")),
        };
        let types = match self.game {
            GameKind::G1 => {
                if self.alpha.is_some() || self.beta.is_some() {
                    return Err(schema(if self.alpha.is_some() { "alpha" } else { "beta" }, "only valid for g2"));
                }
                let prior = self.prior.ok_or_else(|| schema("prior", "required for g1"))?;
                TypeStructure::common_prior(prior).map_err(|e| schema("prior", e.to_string()))?
            }
            GameKind::G2 => {
                if self.prior.is_some() {
                    return Err(schema("prior", "only valid for g1; use alpha and beta"));
                }
                let alpha = self.alpha.ok_or_else(|| schema("alpha", "required for g2"))?;
                let beta = self.beta.ok_or_else(|| schema("beta", "required for g2"))?;
                if !(0.0..1.0).contains(&alpha) {
                    return Err(schema("alpha", format!("{alpha} not in [0, 1)")));
                }
                if !(0.0..=1.0).contains(&beta) {
                    return Err(schema("beta", format!("{beta} not in [0, 1]")));
                }
                TypeStructure::from_alpha_beta(alpha, beta)?
            }
        };
        if self.steps == 0 {
            return Err(schema("steps", "must be at least 1"));
        }
        let horizon = self.horizon.unwrap_or(presets::HORIZON);
        if horizon == 0 {
            return Err(schema("horizon", "must be at least 1"));
        }
        let runs = self.runs.unwrap_or(1);
        if runs == 0 {
            return Err(schema("runs", "must be at least 1"));
        }
        let true_receiver = match self.game {
            GameKind::G1 => {
                if self.true_receiver.is_some() {
                    return Err(schema("true_receiver", "only valid for g2"));
                }
                ReceiverType::Aware
            }
            GameKind::G2 => self.true_receiver.unwrap_or(ReceiverType::Unaware),
        };
        Ok(SimulationConfig {
            game: self.game,
            model,
            utilities,
            types,
            true_sender: self.true_sender.unwrap_or(SenderType::Malicious),
            true_receiver,
            steps: self.steps,
            horizon,
            master_seed: self.seed.unwrap_or(0),
            runs,
            profile_cap: DEFAULT_PROFILE_CAP as u64,
        })
    }

    /// Self-contained file for `config`: the model and utilities are inlined.
    pub fn from_config(config: &SimulationConfig) -> Self {
        let (prior, alpha, beta, true_receiver) = match config.game {
            GameKind::G1 => (Some(config.types.receiver_prior_malicious(ReceiverType::Aware)), None, None, None),
            GameKind::G2 => (None, Some(config.types.alpha()), Some(config.types.beta()), Some(config.true_receiver)),
        };
        ConfigFile {
            game: config.game,
            preset: None,
            model: Some(config.model.clone()),
            utilities: Some(config.utilities.clone()),
            steps: config.steps,
            horizon: Some(config.horizon),
            seed: Some(config.master_seed),
            runs: Some(config.runs),
            alpha,
            beta,
            prior,
            true_sender: Some(config.true_sender),
            true_receiver,
        }
    }
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<SimulationConfig, IoError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let object = value
        .as_object()
        .ok_or_else(|| schema("$", "configuration must be a JSON object"))?;
    if let Some(key) = object.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(schema(key, "unknown key"));
    }
    for required in ["game", "steps"] {
        if !object.contains_key(required) {
            return Err(schema(required, "missing required key"));
        }
    }
    for key in CONFIG_KEYS {
        if let Some(v) = object.get(key) {
            check_key_type(key, v)?;
        }
    }
    let file: ConfigFile = serde_json::from_value(value).map_err(|e| schema("$", e.to_string()))?;
    file.into_config()
}

fn check_key_type(key: &str, v: &serde_json::Value) -> Result<(), IoError> {
    let ok = match key {
        "game" => v.as_str().is_some_and(|s| s == "g1" || s == "g2"),
        "preset" => v.is_string(),
        "steps" | "horizon" | "seed" | "runs" => v.is_u64(),
        "alpha" | "beta" | "prior" => v.is_number(),
        "true_sender" => v.as_str().is_some_and(|s| s == "benign" || s == "malicious"),
        "true_receiver" => v.as_str().is_some_and(|s| s == "unaware" || s == "aware"),
        _ => return Ok(()),
    };
    if ok {
        Ok(())
    } else {
        Err(schema(key, format!("unexpected value {v}")))
    }
}

pub fn load_config(path: &Path) -> Result<SimulationConfig, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}

pub fn config_to_json(config: &SimulationConfig) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(&ConfigFile::from_config(config))?)
}

pub fn save_config(config: &SimulationConfig, path: &Path) -> Result<(), IoError> {
    write_text(path, &config_to_json(config)?)
}

/// SHA-256 of the canonical JSON form of `config`.
pub fn config_hash(config: &SimulationConfig) -> Result<String, IoError> {
    let json = serde_json::to_string(&ConfigFile::from_config(config))?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    if !text.ends_with('\n') {
        f.write_all(b"\n").map_err(io_err(path))?;
    }
    Ok(())
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn name(ids: &[String], ix: Option<usize>) -> String {
    ix.and_then(|i| ids.get(i).cloned()).unwrap_or_default()
}

/// Renders a trace in the fixed CSV schema (UTF-8, LF line endings).
pub fn trace_to_csv(trace: &Trace) -> Result<String, IoError> {
    let m = &trace.config.model;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(|e| IoError::Csv(e.to_string()))?;
    for r in &trace.records {
        let row = [
            r.k.to_string(),
            m.states[r.state].clone(),
            name(&m.actions, r.action),
            name(&m.reactions, r.reaction),
            name(&m.actions, r.benign_action),
            r.belief_aware.to_string(),
            fmt_opt_f64(r.belief_unaware),
            fmt_opt_f64(r.prob_aware),
            name(&m.reactions, r.reaction_aware),
            fmt_opt_f64(r.bayes_coefficient),
            if r.impossible { "1".into() } else { "0".into() },
        ];
        w.write_record(&row).map_err(|e| IoError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Csv(e.to_string()))
}

pub fn write_trace_csv(trace: &Trace, path: &Path) -> Result<(), IoError> {
    write_text(path, &trace_to_csv(trace)?)
}

pub fn write_trace_json(trace: &Trace, path: &Path) -> Result<(), IoError> {
    write_text(path, &serde_json::to_string_pretty(trace)?)
}

pub fn read_trace_json(path: &Path) -> Result<Trace, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Parses CSV trace records, resolving identifiers against `model`.
///
/// The CSV carries the realized action only, so the malicious counterfactual
/// is taken to be the realized action (true sender malicious).
pub fn parse_trace_csv(text: &str, model: &MdpModel) -> Result<Vec<TraceRecord>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| IoError::Csv(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(IoError::Csv(format!("header {:?} does not match {:?}", headers, CSV_COLUMNS)));
    }
    let opt = |s: &str| if s.is_empty() { None } else { Some(s.to_string()) };
    let float = |s: &str, col: &str| -> Result<Option<f64>, IoError> {
        opt(s)
            .map(|v| v.parse::<f64>().map_err(|e| IoError::Csv(format!("{col}: {e}"))))
            .transpose()
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| IoError::Csv(e.to_string()))?;
        let col = |i: usize| row.get(i).unwrap_or("");
        let action = |s: &str| opt(s).map(|v| model.action_index(&v)).transpose();
        let reaction = |s: &str| opt(s).map(|v| model.reaction_index(&v)).transpose();
        let a = action(col(2))?;
        out.push(TraceRecord {
            k: col(0).parse().map_err(|e| IoError::Csv(format!("k: {e}")))?,
            state: model.state_index(col(1))?,
            action: a,
            reaction: reaction(col(3))?,
            benign_action: action(col(4))?,
            malicious_action: a,
            belief_aware: float(col(5), "belief_m_aware")?.ok_or_else(|| IoError::Csv("belief_m_aware is required".into()))?,
            belief_unaware: float(col(6), "belief_m_unaware")?,
            prob_aware: float(col(7), "prob_aware")?,
            reaction_aware: reaction(col(8))?,
            reaction_unaware: None,
            bayes_coefficient: float(col(9), "f_k")?,
            impossible: col(10) == "1",
            exact_equilibrium: None,
            epsilon: None,
        });
    }
    Ok(out)
}

pub fn read_trace_csv(path: &Path, model: &MdpModel) -> Result<Vec<TraceRecord>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_trace_csv(&text, model)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

/// Provenance of one batch of emitted artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub engine_version: String,
    pub master_seed: u64,
    pub runs: usize,
    pub outputs: Vec<String>,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn new(config: &SimulationConfig, outputs: Vec<String>, wall_clock_secs: f64) -> Result<Self, IoError> {
        Ok(RunManifest {
            config_hash: config_hash(config)?,
            engine_version: ENGINE_VERSION.to_string(),
            master_seed: config.master_seed,
            runs: config.runs,
            outputs,
            wall_clock_secs,
        })
    }
}
