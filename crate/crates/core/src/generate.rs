//! Pseudo-random request generator.
//!
//! Each request picks an origin and a terminus on the corridor and keeps
//! every intermediate station with probability `stop_probability`. Run times
//! follow a uniform cruising speed, rounded up to whole minutes. Intermediate
//! stops dwell a whole number of minutes drawn from `dwell_range`. Origin
//! departures are whole minutes drawn uniformly from the time window.
//!
//! The access fee of a request is
//! `base_fee * stops * fee_multiplier(ru) * U(1 - fee_epsilon, 1 + fee_epsilon)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Corridor, MarketParams, ModelError, ProblemInstance, RailwayUndertaking, ServiceRequest, Station, Stop};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("cannot generate: {0}")]
    InfeasibleSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Everything that determines a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateSpec {
    pub n_services: usize,
    pub n_operators: usize,
    pub seed: u64,
    /// Corridor stations; the Madrid–Barcelona line when empty.
    pub stations: Vec<Station>,
    /// Earliest and latest origin departure, minutes from midnight.
    pub time_window: (f64, f64),
    pub params: MarketParams,
    pub base_fee: f64,
    pub fee_epsilon: f64,
    pub fee_multipliers: Vec<f64>,
    pub sensitivities: Vec<f64>,
    pub speed_kmh: f64,
    /// Inclusive range of whole-minute dwells at intermediate stops.
    pub dwell_range: (u32, u32),
    pub stop_probability: f64,
    /// Largest number of requests one operator may submit.
    pub yard_capacity: Option<usize>,
}

impl Default for GenerateSpec {
    fn default() -> Self {
        Self {
            n_services: 25,
            n_operators: 4,
            seed: 0,
            stations: Vec::new(),
            time_window: (6.0 * 60.0, 22.0 * 60.0),
            params: MarketParams::default(),
            base_fee: 50.0,
            fee_epsilon: 0.1,
            fee_multipliers: vec![0.8, 0.9, 1.0, 1.1],
            sensitivities: vec![1.0, 2.0, 5.0, 10.0],
            speed_kmh: 250.0,
            dwell_range: (2, 6),
            stop_probability: 0.5,
            yard_capacity: None,
        }
    }
}

impl GenerateSpec {
    pub fn new(n_services: usize, n_operators: usize, seed: u64) -> Self {
        Self { n_services, n_operators, seed, ..Self::default() }
    }

    pub fn corridor(&self) -> Result<Corridor, ModelError> {
        if self.stations.is_empty() {
            Ok(Corridor::madrid_barcelona())
        } else {
            Corridor::new(self.stations.clone())
        }
    }

    fn check(&self, corridor: &Corridor) -> Result<(), GenerateError> {
        let fail = |msg: &str| Err(GenerateError::InfeasibleSpec(msg.to_string()));
        if self.n_services == 0 {
            return fail("n_services must be at least 1");
        }
        if self.n_operators == 0 {
            return fail("n_operators must be at least 1");
        }
        if corridor.len() < 2 {
            return fail("corridor needs at least two stations");
        }
        if let Some(cap) = self.yard_capacity {
            if cap.saturating_mul(self.n_operators) < self.n_services {
                return fail("yard capacity too small for the requested number of services");
            }
        }
        if self.fee_multipliers.is_empty() || self.sensitivities.is_empty() {
            return fail("fee multiplier and sensitivity pools must be non-empty");
        }
        if !(self.time_window.0 >= 0.0 && self.time_window.0 <= self.time_window.1) {
            return fail("time window must be a non-negative, ordered interval");
        }
        if !(self.speed_kmh > 0.0) || !(self.base_fee > 0.0) || !(0.0..1.0).contains(&self.fee_epsilon) {
            return fail("speed and base fee must be positive, fee_epsilon in [0, 1)");
        }
        if self.dwell_range.0 > self.dwell_range.1 || f64::from(self.dwell_range.1) > self.params.dwell_max {
            return fail("dwell range must be ordered and not exceed dwell_max");
        }
        if !(0.0..=1.0).contains(&self.stop_probability) {
            return fail("stop_probability must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Access fee for a request with `stop_count` stops run by `ru`.
pub fn fee_of<R: Rng + ?Sized>(stop_count: usize, ru: &RailwayUndertaking, base_fee: f64, epsilon: f64, rng: &mut R) -> f64 {
    let noise = if epsilon > 0.0 { rng.gen_range(1.0 - epsilon..1.0 + epsilon) } else { 1.0 };
    base_fee * stop_count as f64 * ru.fee_multiplier * noise
}

/// Builds a random instance; a pure function of the spec (including its seed).
pub fn generate_instance(spec: &GenerateSpec) -> Result<ProblemInstance, GenerateError> {
    let corridor = spec.corridor()?;
    spec.check(&corridor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let operators: Vec<RailwayUndertaking> = (0..spec.n_operators)
        .map(|i| {
            let k = *spec.sensitivities.choose(&mut rng).unwrap();
            let mult = *spec.fee_multipliers.choose(&mut rng).unwrap();
            RailwayUndertaking::new(format!("RU{}", i + 1), k, mult)
        })
        .collect();

    let cap = spec.yard_capacity.unwrap_or(usize::MAX);
    let mut load = vec![0usize; operators.len()];
    let stations = corridor.stations();
    let m = stations.len();
    let mut requests = Vec::with_capacity(spec.n_services);
    for s in 0..spec.n_services {
        // Spread the first requests over all operators, then draw freely.
        let op = if s < operators.len() {
            s
        } else {
            let open: Vec<usize> = (0..operators.len()).filter(|&i| load[i] < cap).collect();
            *open.choose(&mut rng).unwrap()
        };
        load[op] += 1;

        let origin = rng.gen_range(0..m - 1);
        let terminus = rng.gen_range(origin + 1..m);
        let mut chosen = vec![origin];
        for mid in origin + 1..terminus {
            if rng.gen_bool(spec.stop_probability) {
                chosen.push(mid);
            }
        }
        chosen.push(terminus);

        let start = rng.gen_range(spec.time_window.0.ceil() as i64..=spec.time_window.1.floor() as i64) as f64;
        let mut stops = Vec::with_capacity(chosen.len());
        let mut t = start;
        for (j, &st) in chosen.iter().enumerate() {
            if j == 0 {
                stops.push(Stop::new(stations[st].id.clone(), t, t));
                continue;
            }
            let km = stations[st].position - stations[chosen[j - 1]].position;
            t += (km / spec.speed_kmh * 60.0).ceil().max(1.0);
            let dwell = if j + 1 == chosen.len() {
                0.0
            } else {
                f64::from(rng.gen_range(spec.dwell_range.0..=spec.dwell_range.1))
            };
            stops.push(Stop::new(stations[st].id.clone(), t, t + dwell));
            t += dwell;
        }
        let fee = fee_of(stops.len(), &operators[op], spec.base_fee, spec.fee_epsilon, &mut rng);
        requests.push(ServiceRequest::new(format!("S{}", s + 1), operators[op].id.clone(), stops, fee));
    }
    Ok(ProblemInstance::new(corridor, operators, requests, spec.params)?)
}
