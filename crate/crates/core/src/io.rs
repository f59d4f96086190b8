//! File formats: instance JSON, proposal JSON and optimizer config TOML.
//!
//! Times in instance and proposal files may be written as `"HH:MM"` or as
//! a number of minutes since midnight. They are always written back as
//! numbers so a round trip is exact.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    parse_hhmm, Corridor, MarketParams, Minutes, ModelError, ProblemInstance, RailwayUndertaking, ServiceRequest,
    Station, Stop,
};
use crate::optimizer::{AcorParams, Algorithm, AlgorithmConfig, DeParams, GaParams, OptimizerError, PsoParams, SaParams};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid time `{0}`: expected HH:MM or minutes")]
    InvalidTime(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("proposal: {0}")]
    Proposal(String),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep the message short.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        IoError::Parse { line: e.line(), column: e.column(), message }
    }
}

impl From<toml::de::Error> for IoError {
    fn from(e: toml::de::Error) -> Self {
        IoError::Config(e.to_string().trim().to_string())
    }
}

/// A time written either as minutes or as `"HH:MM"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeValue {
    Minutes(f64),
    Clock(String),
}

impl TimeValue {
    pub fn minutes(&self) -> Result<Minutes, IoError> {
        match self {
            TimeValue::Minutes(m) if m.is_finite() => Ok(*m),
            TimeValue::Minutes(m) => Err(IoError::InvalidTime(m.to_string())),
            TimeValue::Clock(s) => parse_hhmm(s).ok_or_else(|| IoError::InvalidTime(s.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationFile {
    pub id: String,
    pub name: String,
    pub km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorFile {
    pub stations: Vec<StationFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub id: String,
    pub k: f64,
    pub fee_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsFile {
    pub delta_min: f64,
    pub omega_min: f64,
    pub dwell_max_min: f64,
    pub p_max: f64,
    pub share_dt: f64,
    pub share_tt: f64,
    pub conflict_semantics: crate::model::ConflictSemantics,
}

impl Default for ParamsFile {
    fn default() -> Self {
        MarketParams::default().into()
    }
}

impl From<MarketParams> for ParamsFile {
    fn from(p: MarketParams) -> Self {
        Self {
            delta_min: p.delta,
            omega_min: p.omega,
            dwell_max_min: p.dwell_max,
            p_max: p.p_max,
            share_dt: p.share_dt,
            share_tt: p.share_tt,
            conflict_semantics: p.conflict_semantics,
        }
    }
}

impl From<ParamsFile> for MarketParams {
    fn from(p: ParamsFile) -> Self {
        Self {
            delta: p.delta_min,
            omega: p.omega_min,
            dwell_max: p.dwell_max_min,
            p_max: p.p_max,
            share_dt: p.share_dt,
            share_tt: p.share_tt,
            conflict_semantics: p.conflict_semantics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopFile {
    pub station: String,
    pub arrival: TimeValue,
    pub departure: TimeValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestFile {
    pub id: String,
    pub ru: String,
    pub fee: f64,
    pub stops: Vec<StopFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub corridor: CorridorFile,
    pub operators: Vec<OperatorFile>,
    #[serde(default)]
    pub params: ParamsFile,
    pub requests: Vec<RequestFile>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<ProblemInstance, IoError> {
        let corridor = Corridor::new(
            self.corridor.stations.into_iter().map(|s| Station::new(s.id, s.name, s.km)).collect(),
        )?;
        let operators =
            self.operators.into_iter().map(|o| RailwayUndertaking::new(o.id, o.k, o.fee_multiplier)).collect();
        let mut requests = Vec::with_capacity(self.requests.len());
        for r in self.requests {
            let stops = r
                .stops
                .into_iter()
                .map(|s| Ok(Stop::new(s.station, s.arrival.minutes()?, s.departure.minutes()?)))
                .collect::<Result<Vec<_>, IoError>>()?;
            requests.push(ServiceRequest::new(r.id, r.ru, stops, r.fee));
        }
        Ok(ProblemInstance::new(corridor, operators, requests, self.params.into())?)
    }

    pub fn from_instance(instance: &ProblemInstance) -> Self {
        Self {
            corridor: CorridorFile {
                stations: instance
                    .corridor()
                    .stations()
                    .iter()
                    .map(|s| StationFile { id: s.id.clone(), name: s.name.clone(), km: s.position })
                    .collect(),
            },
            operators: instance
                .operators()
                .iter()
                .map(|o| OperatorFile { id: o.id.clone(), k: o.sensitivity_k, fee_multiplier: o.fee_multiplier })
                .collect(),
            params: (*instance.params()).into(),
            requests: instance
                .requests()
                .iter()
                .map(|r| RequestFile {
                    id: r.id.clone(),
                    ru: r.ru_id.clone(),
                    fee: r.fee,
                    stops: r
                        .stops
                        .iter()
                        .map(|s| StopFile {
                            station: s.station_id.clone(),
                            arrival: TimeValue::Minutes(s.arrival),
                            departure: TimeValue::Minutes(s.departure),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Parses and validates an instance.
pub fn parse_instance(text: &str) -> Result<ProblemInstance, IoError> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

/// Pretty JSON for an instance.
pub fn serialize_instance(instance: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(instance)).expect("instance serializes")
}

/// Departures per service id; every service of the instance must appear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalFile {
    pub departures: BTreeMap<String, Vec<TimeValue>>,
}

impl ProposalFile {
    pub fn from_vector(instance: &ProblemInstance, vector: &[Minutes]) -> Self {
        let departures = instance
            .requests()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let vals = vector[instance.layout().range(i)].iter().map(|&v| TimeValue::Minutes(v)).collect();
                (r.id.clone(), vals)
            })
            .collect();
        Self { departures }
    }

    /// Flat decision vector in instance order.
    pub fn to_vector(&self, instance: &ProblemInstance) -> Result<Vec<Minutes>, IoError> {
        let known: HashMap<&str, usize> =
            instance.requests().iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        if let Some(extra) = self.departures.keys().find(|k| !known.contains_key(k.as_str())) {
            return Err(IoError::Proposal(format!("unknown service `{extra}`")));
        }
        let mut out = Vec::with_capacity(instance.layout().total_len());
        for r in instance.requests() {
            let deps = self
                .departures
                .get(&r.id)
                .ok_or_else(|| IoError::Proposal(format!("missing departures for service `{}`", r.id)))?;
            if deps.len() != r.decision_len() {
                return Err(IoError::Proposal(format!(
                    "service `{}` needs {} departures, got {}",
                    r.id,
                    r.decision_len(),
                    deps.len()
                )));
            }
            for d in deps {
                out.push(d.minutes()?);
            }
        }
        Ok(out)
    }
}

pub fn parse_proposal(text: &str, instance: &ProblemInstance) -> Result<Vec<Minutes>, IoError> {
    serde_json::from_str::<ProposalFile>(text)?.to_vector(instance)
}

/// Overrides applicable to one algorithm's configuration.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub epochs: Option<usize>,
    pub population: Option<usize>,
    pub seed: Option<u64>,
    pub seed_with_request: Option<bool>,
    pub repair: Option<bool>,
    pub record_population: Option<bool>,
}

impl ConfigOverrides {
    fn apply(&self, c: &mut AlgorithmConfig) {
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.population {
            c.population = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.seed_with_request {
            c.seed_with_request = v;
        }
        if let Some(v) = self.repair {
            c.repair = v;
        }
        if let Some(v) = self.record_population {
            c.record_population = v;
        }
    }
}

/// Optimizer config file.
///
/// ```toml
/// preset = "tuned-25"      # or "defaults"
/// algorithm = "GA"         # used when the caller does not pick one
/// epochs = 100             # applies to every algorithm
///
/// [algorithms.SA]          # applies to one algorithm
/// epochs = 2000
///
/// [ga]                     # strategy parameters
/// pc = 0.9
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub algorithm: Option<String>,
    pub epochs: Option<usize>,
    pub population: Option<usize>,
    pub seed: Option<u64>,
    pub seed_with_request: Option<bool>,
    pub repair: Option<bool>,
    pub record_population: Option<bool>,
    #[serde(default)]
    pub algorithms: BTreeMap<String, ConfigOverrides>,
    pub ga: Option<GaParams>,
    pub pso: Option<PsoParams>,
    pub sa: Option<SaParams>,
    pub de: Option<DeParams>,
    pub acor: Option<AcorParams>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let file: ConfigFile = toml::from_str(text)?;
        for name in file.algorithms.keys() {
            name.parse::<Algorithm>()?;
        }
        if let Some(a) = &file.algorithm {
            a.parse::<Algorithm>()?;
        }
        if let Some(p) = &file.preset {
            if !matches!(p.as_str(), "defaults" | "tuned-25") {
                return Err(IoError::Config(format!("unknown preset `{p}`")));
            }
        }
        Ok(file)
    }

    pub fn default_algorithm(&self) -> Option<Algorithm> {
        self.algorithm.as_deref().and_then(|a| a.parse().ok())
    }

    /// Resolved configuration for `algorithm`.
    pub fn resolve(&self, algorithm: Algorithm) -> AlgorithmConfig {
        let mut c = match self.preset.as_deref() {
            Some("tuned-25") => AlgorithmConfig::tuned_25(algorithm),
            _ => AlgorithmConfig::defaults(algorithm),
        };
        ConfigOverrides {
            epochs: self.epochs,
            population: self.population,
            seed: self.seed,
            seed_with_request: self.seed_with_request,
            repair: self.repair,
            record_population: self.record_population,
        }
        .apply(&mut c);
        for (name, o) in &self.algorithms {
            if name.parse::<Algorithm>().ok() == Some(algorithm) {
                o.apply(&mut c);
            }
        }
        if let Some(p) = self.ga {
            c.ga = p;
        }
        if let Some(p) = self.pso {
            c.pso = p;
        }
        if let Some(p) = self.sa {
            c.sa = p;
        }
        if let Some(p) = self.de {
            c.de = p;
        }
        if let Some(p) = self.acor {
            c.acor = p;
        }
        c
    }
}
