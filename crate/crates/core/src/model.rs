//! Domain vocabulary: corridor, operators, requests and market parameters.
//!
//! All times are real-valued minutes from midnight. A [`ProblemInstance`] is
//! validated once on construction and is immutable afterwards, so it can be
//! shared freely between threads.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minutes from midnight.
pub type Minutes = f64;

/// Slack used when comparing derived times against constraints.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("corridor needs at least 2 stations, got {0}")]
    TooFewStations(usize),
    #[error("station `{0}` is not strictly after its predecessor")]
    NonIncreasingPositions(String),
    #[error("station position of `{0}` must be finite and non-negative")]
    InvalidPosition(String),
    #[error("duplicate station id `{0}`")]
    DuplicateStation(String),
    #[error("duplicate operator id `{0}`")]
    DuplicateOperator(String),
    #[error("duplicate request id `{0}`")]
    DuplicateRequest(String),
    #[error("operator `{id}`: {what} must be positive, got {value}")]
    InvalidOperator { id: String, what: &'static str, value: f64 },
    #[error("request `{request}` references unknown operator `{operator}`")]
    UnknownOperator { request: String, operator: String },
    #[error("request `{request}` references unknown station `{station}`")]
    UnknownStation { request: String, station: String },
    #[error("request `{0}` needs at least 2 stops")]
    TooFewStops(String),
    #[error("request `{0}` must have a positive, finite fee")]
    InvalidFee(String),
    #[error("request `{request}`: stop {index} does not move forward along the corridor")]
    StopsNotIncreasing { request: String, index: usize },
    #[error("request `{request}`: stop {index} is not reached strictly after the previous departure")]
    TimesNotIncreasing { request: String, index: usize },
    #[error("request `{request}`: stop {index} departs before it arrives")]
    DepartureBeforeArrival { request: String, index: usize },
    #[error("request `{request}`: origin and terminus must have arrival equal to departure")]
    EndpointDwell { request: String },
    #[error("request `{request}`: time at stop {index} is not a finite, non-negative number")]
    InvalidTime { request: String, index: usize },
    #[error("invalid market parameters: {0}")]
    InvalidParams(String),
    #[error("decision vector has length {got}, expected {expected}")]
    InvalidVectorLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub name: String,
    /// Kilometres from the corridor origin.
    pub position: f64,
}

impl Station {
    pub fn new(id: impl Into<String>, name: impl Into<String>, position: f64) -> Self {
        Self { id: id.into(), name: name.into(), position }
    }
}

/// A single unidirectional line; traversal order is station order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    stations: Vec<Station>,
    index: HashMap<String, usize>,
}

impl Corridor {
    pub fn new(stations: Vec<Station>) -> Result<Self, ModelError> {
        if stations.len() < 2 {
            return Err(ModelError::TooFewStations(stations.len()));
        }
        let mut index = HashMap::with_capacity(stations.len());
        for (i, s) in stations.iter().enumerate() {
            if !s.position.is_finite() || s.position < 0.0 {
                return Err(ModelError::InvalidPosition(s.id.clone()));
            }
            if i > 0 && s.position <= stations[i - 1].position {
                return Err(ModelError::NonIncreasingPositions(s.id.clone()));
            }
            if index.insert(s.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateStation(s.id.clone()));
            }
        }
        Ok(Self { stations, index })
    }

    /// Madrid–Barcelona high-speed line with real-world kilometrage.
    pub fn madrid_barcelona() -> Self {
        Self::new(vec![
            Station::new("MAD", "Madrid", 0.0),
            Station::new("CAL", "Calatayud", 222.0),
            Station::new("ZAR", "Zaragoza", 306.0),
            Station::new("LLE", "Lleida", 442.0),
            Station::new("TAR", "Tarragona", 521.0),
            Station::new("BCN", "Barcelona", 621.0),
        ])
        .expect("built-in corridor is valid")
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn position_of(&self, id: &str) -> Option<f64> {
        self.index_of(id).map(|i| self.stations[i].position)
    }

    pub fn length_km(&self) -> f64 {
        self.stations.last().map_or(0.0, |s| s.position) - self.stations[0].position
    }
}

/// A train-operating company.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RailwayUndertaking {
    pub id: String,
    /// Sensitivity constant of the penalty curve.
    pub sensitivity_k: f64,
    pub fee_multiplier: f64,
}

impl RailwayUndertaking {
    pub fn new(id: impl Into<String>, sensitivity_k: f64, fee_multiplier: f64) -> Self {
        Self { id: id.into(), sensitivity_k, fee_multiplier }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub station_id: String,
    pub arrival: Minutes,
    pub departure: Minutes,
}

impl Stop {
    pub fn new(station_id: impl Into<String>, arrival: Minutes, departure: Minutes) -> Self {
        Self { station_id: station_id.into(), arrival, departure }
    }

    pub fn dwell(&self) -> Minutes {
        self.departure - self.arrival
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub id: String,
    pub ru_id: String,
    pub stops: Vec<Stop>,
    /// Access fee the operator is willing to pay for the requested slot.
    pub fee: f64,
}

impl ServiceRequest {
    pub fn new(id: impl Into<String>, ru_id: impl Into<String>, stops: Vec<Stop>, fee: f64) -> Self {
        Self { id: id.into(), ru_id: ru_id.into(), stops, fee }
    }

    /// Number of departure decisions: every stop except the terminus.
    pub fn decision_len(&self) -> usize {
        self.stops.len().saturating_sub(1)
    }

    /// Requested departures at stops `0..m-1`.
    pub fn requested_departures(&self) -> Vec<Minutes> {
        self.stops[..self.decision_len()].iter().map(|s| s.departure).collect()
    }

    /// Run time from stop `j` to stop `j + 1`.
    pub fn run_times(&self) -> Vec<Minutes> {
        self.stops.windows(2).map(|w| w[1].arrival - w[0].departure).collect()
    }

    /// Minimal (requested) dwell at each stop.
    pub fn min_dwells(&self) -> Vec<Minutes> {
        self.stops.iter().map(Stop::dwell).collect()
    }

    /// Requested time between consecutive departures, with the terminal pair
    /// measured up to the terminus arrival.
    pub fn pair_travel_times(&self) -> Vec<Minutes> {
        pair_travel_times(&self.stops)
    }

    pub fn origin_departure(&self) -> Minutes {
        self.stops[0].departure
    }

    pub fn terminus_arrival(&self) -> Minutes {
        self.stops[self.stops.len() - 1].arrival
    }
}

/// Travel time of every consecutive stop pair: departure to departure for
/// non-terminal pairs, departure to arrival for the last one.
pub fn pair_travel_times(stops: &[Stop]) -> Vec<Minutes> {
    let m = stops.len();
    stops
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            if j + 2 == m {
                w[1].arrival - w[0].departure
            } else {
                w[1].departure - w[0].departure
            }
        })
        .collect()
}

/// How pairwise gaps combine into a conflict verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictSemantics {
    /// Any of: gaps change sign, departure gap too small, arrival gap too small.
    #[default]
    #[serde(alias = "PermissiveOr")]
    PermissiveOr,
    /// All three conditions must hold at once.
    #[serde(alias = "StrictAnd")]
    StrictAnd,
}

impl fmt::Display for ConflictSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PermissiveOr => f.write_str("permissive_or"),
            Self::StrictAnd => f.write_str("strict_and"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Maximum shift of a requested departure the manager may impose.
    pub delta: Minutes,
    /// Safety headway carried by each train; pairs need `2 * omega`.
    pub omega: Minutes,
    /// Maximum dwell extension.
    pub dwell_max: Minutes,
    /// Largest fraction of the fee that can be lost to penalties.
    pub p_max: f64,
    pub share_dt: f64,
    pub share_tt: f64,
    pub conflict_semantics: ConflictSemantics,
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            delta: 10.0,
            omega: 10.0,
            dwell_max: 10.0,
            p_max: 0.4,
            share_dt: 0.35,
            share_tt: 0.65,
            conflict_semantics: ConflictSemantics::PermissiveOr,
        }
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        for (name, v) in [("delta", self.delta), ("omega", self.omega), ("dwell_max", self.dwell_max)] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for (name, v) in [("p_max", self.p_max), ("share_dt", self.share_dt), ("share_tt", self.share_tt)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if (self.share_dt + self.share_tt - 1.0).abs() > 1e-9 {
            return bad(format!(
                "share_dt + share_tt must equal 1, got {}",
                self.share_dt + self.share_tt
            ));
        }
        Ok(())
    }

    /// Coefficient applied to the departure-time weight.
    pub fn p_dt_eff(&self) -> f64 {
        self.p_max * self.share_dt
    }

    /// Coefficient shared among the travel-time pairs.
    pub fn p_tt_eff(&self) -> f64 {
        self.p_max * self.share_tt
    }
}

/// A validated problem: corridor, operators, the set of requests and the
/// market parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    corridor: Corridor,
    operators: Vec<RailwayUndertaking>,
    requests: Vec<ServiceRequest>,
    params: MarketParams,
    operator_of: Vec<usize>,
    positions: Vec<Vec<f64>>,
    layout: VectorLayout,
}

impl ProblemInstance {
    pub fn new(
        corridor: Corridor,
        operators: Vec<RailwayUndertaking>,
        requests: Vec<ServiceRequest>,
        params: MarketParams,
    ) -> Result<Self, ModelError> {
        params.validate()?;
        let mut op_index = HashMap::with_capacity(operators.len());
        for (i, op) in operators.iter().enumerate() {
            for (what, value) in [("k", op.sensitivity_k), ("fee_multiplier", op.fee_multiplier)] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ModelError::InvalidOperator { id: op.id.clone(), what, value });
                }
            }
            if op_index.insert(op.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateOperator(op.id.clone()));
            }
        }

        let mut seen = HashSet::with_capacity(requests.len());
        let mut operator_of = Vec::with_capacity(requests.len());
        let mut positions = Vec::with_capacity(requests.len());
        for req in &requests {
            if !seen.insert(req.id.as_str()) {
                return Err(ModelError::DuplicateRequest(req.id.clone()));
            }
            let op = *op_index.get(&req.ru_id).ok_or_else(|| ModelError::UnknownOperator {
                request: req.id.clone(),
                operator: req.ru_id.clone(),
            })?;
            operator_of.push(op);
            positions.push(validate_request(req, &corridor)?);
        }
        let layout = VectorLayout::new(requests.iter().map(ServiceRequest::decision_len));
        Ok(Self { corridor, operators, requests, params, operator_of, positions, layout })
    }

    pub fn corridor(&self) -> &Corridor {
        &self.corridor
    }

    pub fn operators(&self) -> &[RailwayUndertaking] {
        &self.operators
    }

    pub fn requests(&self) -> &[ServiceRequest] {
        &self.requests
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Operator running request `i`.
    pub fn operator_of(&self, i: usize) -> &RailwayUndertaking {
        &self.operators[self.operator_of[i]]
    }

    /// Corridor kilometrage of every stop of request `i`.
    pub fn stop_positions(&self, i: usize) -> &[f64] {
        &self.positions[i]
    }

    pub fn layout(&self) -> &VectorLayout {
        &self.layout
    }

    /// Same requests under different market parameters.
    pub fn with_params(&self, params: MarketParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self { params, ..self.clone() })
    }
}

fn validate_request(req: &ServiceRequest, corridor: &Corridor) -> Result<Vec<f64>, ModelError> {
    let id = || req.id.clone();
    if req.stops.len() < 2 {
        return Err(ModelError::TooFewStops(id()));
    }
    if !(req.fee.is_finite() && req.fee > 0.0) {
        return Err(ModelError::InvalidFee(id()));
    }
    let mut positions = Vec::with_capacity(req.stops.len());
    for (j, stop) in req.stops.iter().enumerate() {
        let pos = corridor.position_of(&stop.station_id).ok_or_else(|| ModelError::UnknownStation {
            request: id(),
            station: stop.station_id.clone(),
        })?;
        for t in [stop.arrival, stop.departure] {
            if !t.is_finite() || t < 0.0 {
                return Err(ModelError::InvalidTime { request: id(), index: j });
            }
        }
        if stop.departure < stop.arrival {
            return Err(ModelError::DepartureBeforeArrival { request: id(), index: j });
        }
        if j > 0 {
            if pos <= positions[j - 1] {
                return Err(ModelError::StopsNotIncreasing { request: id(), index: j });
            }
            if stop.arrival <= req.stops[j - 1].departure {
                return Err(ModelError::TimesNotIncreasing { request: id(), index: j });
            }
        }
        positions.push(pos);
    }
    let (first, last) = (&req.stops[0], &req.stops[req.stops.len() - 1]);
    if first.arrival != first.departure || last.arrival != last.departure {
        return Err(ModelError::EndpointDwell { request: id() });
    }
    Ok(positions)
}

/// Where each service's departures live inside the flat decision vector.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VectorLayout {
    offsets: Vec<usize>,
}

impl VectorLayout {
    pub fn new(lengths: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        for len in lengths {
            offsets.push(offsets[offsets.len() - 1] + len);
        }
        Self { offsets }
    }

    pub fn services(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total_len(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn range(&self, service: usize) -> std::ops::Range<usize> {
        self.offsets[service]..self.offsets[service + 1]
    }

    /// Splits a flat vector into one slice per service.
    pub fn split<'a>(&self, values: &'a [f64]) -> Result<Vec<&'a [f64]>, ModelError> {
        if values.len() != self.total_len() {
            return Err(ModelError::InvalidVectorLength { expected: self.total_len(), got: values.len() });
        }
        Ok((0..self.services()).map(|i| &values[self.range(i)]).collect())
    }
}

/// Rebuilds a stop list from new departures at stops `0..m-1`, keeping every
/// run time fixed. The terminus has no decision variable.
pub fn derive_times(request: &ServiceRequest, new_departures: &[Minutes]) -> Result<Vec<Stop>, ModelError> {
    let expected = request.decision_len();
    if new_departures.len() != expected {
        return Err(ModelError::InvalidVectorLength { expected, got: new_departures.len() });
    }
    let run = request.run_times();
    let m = request.stops.len();
    let mut out = Vec::with_capacity(m);
    for (j, stop) in request.stops.iter().enumerate() {
        let arrival = if j == 0 { new_departures[0] } else { new_departures[j - 1] + run[j - 1] };
        let departure = if j + 1 == m { arrival } else { new_departures[j] };
        out.push(Stop { station_id: stop.station_id.clone(), arrival, departure });
    }
    Ok(out)
}

/// Total absolute departure and pair-travel-time deviation over scheduled
/// services. `departures[i]` holds the proposed departures of service `i`.
pub fn deviation_metrics(
    instance: &ProblemInstance,
    departures: &[Vec<Minutes>],
    scheduled: &[bool],
) -> Result<(Minutes, Minutes), ModelError> {
    let mut delta_dt = 0.0;
    let mut delta_tt = 0.0;
    for (i, req) in instance.requests().iter().enumerate() {
        if !scheduled.get(i).copied().unwrap_or(false) {
            continue;
        }
        let proposed = derive_times(req, &departures[i])?;
        delta_dt += (proposed[0].departure - req.origin_departure()).abs();
        let requested_tt = req.pair_travel_times();
        delta_tt += pair_travel_times(&proposed)
            .iter()
            .zip(&requested_tt)
            .map(|(p, r)| (p - r).abs())
            .sum::<f64>();
    }
    Ok((delta_dt, delta_tt))
}

/// Formats minutes from midnight as `HH:MM` (rounded to the nearest minute).
pub fn format_hhmm(minutes: Minutes) -> String {
    let total = minutes.round() as i64;
    format!("{:02}:{:02}", total.div_euclid(60), total.rem_euclid(60))
}

/// Parses `HH:MM` into minutes from midnight.
pub fn parse_hhmm(s: &str) -> Option<Minutes> {
    let (h, m) = s.trim().split_once(':')?;
    let h: u32 = h.parse().ok()?;
    let m: u32 = m.parse().ok()?;
    (m < 60).then(|| f64::from(h * 60 + m))
}
