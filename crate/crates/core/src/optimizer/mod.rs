//! Metaheuristic search over departure vectors.
//!
//! The decision vector concatenates, in instance order, each service's
//! departures at every stop but the terminus. Every dimension may move at
//! most `delta` away from the requested time. Fitness is the manager's
//! revenue after greedy conflict resolution, to be maximised.
//!
//! All strategies share a [`Search`] context which clamps candidates into
//! bounds, evaluates them (in parallel, after all random draws for the
//! batch have been made), counts evaluations and tracks the best-so-far
//! solution. The initial population is evaluated as the first epoch, so a
//! run of `E` epochs with population `P` costs exactly `E * P` evaluations
//! for every strategy except ACOR, whose later epochs cost `sample_count`.

mod acor;
mod de;
mod ga;
mod pso;
mod sa;
mod wolves;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Minutes, ProblemInstance};
use crate::scheduler::{evaluate_proposal, requested_vector, EvalOptions, ScheduleResult, SchedulerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("algorithm {0} is not implemented")]
    NotImplemented(Algorithm),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    Ga,
    Pso,
    Sa,
    De,
    Acor,
    Gwo,
    Woa,
    GwoWoa,
    CmaEs,
    Abc,
}

impl Algorithm {
    /// The eight strategies that can be run.
    pub const IMPLEMENTED: [Algorithm; 8] = [
        Algorithm::Ga,
        Algorithm::Pso,
        Algorithm::Sa,
        Algorithm::De,
        Algorithm::Acor,
        Algorithm::Gwo,
        Algorithm::Woa,
        Algorithm::GwoWoa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ga => "GA",
            Self::Pso => "PSO",
            Self::Sa => "SA",
            Self::De => "DE",
            Self::Acor => "ACOR",
            Self::Gwo => "GWO",
            Self::Woa => "WOA",
            Self::GwoWoa => "GWO_WOA",
            Self::CmaEs => "CMA_ES",
            Self::Abc => "ABC",
        }
    }

    pub fn is_implemented(self) -> bool {
        !matches!(self, Self::CmaEs | Self::Abc)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = OptimizerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Ok(match norm.as_str() {
            "GA" => Self::Ga,
            "PSO" => Self::Pso,
            "SA" => Self::Sa,
            "DE" => Self::De,
            "ACOR" => Self::Acor,
            "GWO" => Self::Gwo,
            "WOA" => Self::Woa,
            "GWO_WOA" | "GWOWOA" => Self::GwoWoa,
            "CMA_ES" | "CMAES" => Self::CmaEs,
            "ABC" => Self::Abc,
            _ => return Err(OptimizerError::UnknownAlgorithm(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    /// Crossover probability per parent pair.
    pub pc: f64,
    /// Mutation probability per gene.
    pub pm: f64,
    pub tournament_size: usize,
    /// Mutation step as a fraction of each dimension's range.
    pub mutation_scale: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self { pc: 0.95, pm: 0.025, tournament_size: 2, mutation_scale: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub c1: f64,
    pub c2: f64,
    /// Velocity limit as a fraction of each dimension's range.
    pub alpha: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self { c1: 2.05, c2: 2.05, alpha: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaParams {
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    /// Neighbour step as a fraction of each dimension's range.
    pub step_scale: f64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self { initial_temperature: 100.0, cooling_rate: 0.99, step_scale: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeParams {
    pub wf: f64,
    pub cr: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self { wf: 0.1, cr: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcorParams {
    pub sample_count: usize,
    pub intensification: f64,
    pub zeta: f64,
}

impl Default for AcorParams {
    fn default() -> Self {
        Self { sample_count: 25, intensification: 0.5, zeta: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    pub epochs: usize,
    pub population: usize,
    pub seed: u64,
    /// Put the requested departures in the initial population.
    pub seed_with_request: bool,
    /// Run the operating-time repair before validation.
    pub repair: bool,
    /// Keep every epoch's population fitness in the trace.
    pub record_population: bool,
    pub ga: GaParams,
    pub pso: PsoParams,
    pub sa: SaParams,
    pub de: DeParams,
    pub acor: AcorParams,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self::defaults(Algorithm::Ga)
    }
}

impl AlgorithmConfig {
    /// Library-default parameters with a 100 epoch, 20 individual budget;
    /// SA gets the same 2000 evaluations as 2000 single-solution epochs.
    pub fn defaults(algorithm: Algorithm) -> Self {
        let (epochs, population) = if algorithm == Algorithm::Sa { (2000, 1) } else { (100, 20) };
        Self {
            algorithm,
            epochs,
            population,
            seed: 0,
            seed_with_request: true,
            repair: true,
            record_population: false,
            ga: GaParams::default(),
            pso: PsoParams::default(),
            sa: SaParams::default(),
            de: DeParams::default(),
            acor: AcorParams::default(),
        }
    }

    /// Tuned epoch and population budgets for the 25-service experiment.
    pub fn tuned_25(algorithm: Algorithm) -> Self {
        let (epochs, population) = match algorithm {
            Algorithm::Ga => (500, 70),
            Algorithm::Pso => (500, 80),
            Algorithm::Sa => (45_000, 1),
            Algorithm::De => (300, 100),
            Algorithm::Acor => (500, 10),
            Algorithm::CmaEs => (250, 80),
            Algorithm::Abc => (450, 60),
            Algorithm::Gwo => (500, 100),
            Algorithm::Woa => (400, 80),
            Algorithm::GwoWoa => (450, 50),
        };
        Self { epochs, population, ..Self::defaults(algorithm) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !self.algorithm.is_implemented() {
            return Err(OptimizerError::NotImplemented(self.algorithm));
        }
        let bad = |m: String| Err(OptimizerError::InvalidConfig(m));
        if self.population == 0 {
            return bad("population must be at least 1".into());
        }
        if self.algorithm == Algorithm::Sa && self.population != 1 {
            return bad(format!("SA is single-solution; population must be 1, got {}", self.population));
        }
        if self.algorithm == Algorithm::De && self.population < 4 {
            return bad("DE needs a population of at least 4".into());
        }
        let unit = |name: &str, v: f64| -> Result<(), OptimizerError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(OptimizerError::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("ga.pc", self.ga.pc)?;
        unit("ga.pm", self.ga.pm)?;
        unit("de.cr", self.de.cr)?;
        unit("sa.cooling_rate", self.sa.cooling_rate)?;
        unit("acor.intensification", self.acor.intensification)?;
        if self.ga.tournament_size == 0 {
            return bad("ga.tournament_size must be at least 1".into());
        }
        if self.acor.sample_count == 0 {
            return bad("acor.sample_count must be at least 1".into());
        }
        let positive = [
            ("ga.mutation_scale", self.ga.mutation_scale),
            ("pso.c1", self.pso.c1),
            ("pso.c2", self.pso.c2),
            ("pso.alpha", self.pso.alpha),
            ("sa.initial_temperature", self.sa.initial_temperature),
            ("sa.step_scale", self.sa.step_scale),
            ("de.wf", self.de.wf),
            ("acor.intensification", self.acor.intensification),
            ("acor.zeta", self.acor.zeta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Per-dimension box `[requested - delta, requested + delta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Bounds {
    pub fn len(&self) -> usize {
        self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low.is_empty()
    }

    pub fn range(&self, d: usize) -> f64 {
        self.high[d] - self.low[d]
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.low[d], self.high[d]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len() && x.iter().enumerate().all(|(d, &v)| v >= self.low[d] && v <= self.high[d])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.len()).map(|d| self.low[d] + rng.gen::<f64>() * self.range(d)).collect()
    }
}

/// Flat departure vector plus where each service lives in it.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    pub values: Vec<Minutes>,
    pub layout: crate::model::VectorLayout,
}

impl DecisionVector {
    pub fn service(&self, i: usize) -> &[Minutes] {
        &self.values[self.layout.range(i)]
    }
}

/// Requested departures and their bounds.
pub fn encode(instance: &ProblemInstance) -> (DecisionVector, Bounds) {
    let values = requested_vector(instance);
    let delta = instance.params().delta;
    let bounds = Bounds {
        low: values.iter().map(|v| v - delta).collect(),
        high: values.iter().map(|v| v + delta).collect(),
    };
    (DecisionVector { values, layout: instance.layout().clone() }, bounds)
}

/// Manager revenue of a vector.
pub fn fitness(instance: &ProblemInstance, vector: &[Minutes], opts: EvalOptions) -> Result<f64, SchedulerError> {
    Ok(evaluate_proposal(instance, vector, opts)?.total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Best fitness found up to and including each epoch.
    pub best_per_epoch: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_fitness: Option<Vec<Vec<f64>>>,
    pub evaluations: usize,
    pub best_fitness: f64,
    pub best_vector: Vec<Minutes>,
    pub result: ScheduleResult,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub x: Vec<f64>,
    pub fitness: f64,
}

/// Shared state of one optimisation run.
pub(crate) struct Search<'a> {
    instance: &'a ProblemInstance,
    opts: EvalOptions,
    pub bounds: Bounds,
    pub rng: ChaCha8Rng,
    evaluations: usize,
    best: Option<(Candidate, ScheduleResult)>,
    best_per_epoch: Vec<f64>,
    population_fitness: Option<Vec<Vec<f64>>>,
}

impl<'a> Search<'a> {
    fn new(instance: &'a ProblemInstance, config: &AlgorithmConfig, bounds: Bounds) -> Self {
        Self {
            instance,
            opts: EvalOptions { repair: config.repair },
            bounds,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            evaluations: 0,
            best: None,
            best_per_epoch: Vec::new(),
            population_fitness: config.record_population.then(Vec::new),
        }
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen()
    }

    /// Clamps and evaluates a batch. Every random draw for the batch must
    /// already have been made.
    pub fn evaluate(&mut self, mut xs: Vec<Vec<f64>>) -> Result<Vec<Candidate>, OptimizerError> {
        for x in &mut xs {
            self.bounds.clamp(x);
        }
        let instance = self.instance;
        let opts = self.opts;
        let results: Vec<Result<ScheduleResult, SchedulerError>> =
            xs.par_iter().map(|x| evaluate_proposal(instance, x, opts)).collect();
        self.evaluations += xs.len();
        let mut out = Vec::with_capacity(xs.len());
        for (x, r) in xs.into_iter().zip(results) {
            let r = r?;
            let fitness = r.total;
            let improves = self.best.as_ref().is_none_or(|(b, _)| fitness > b.fitness);
            let cand = Candidate { x, fitness };
            if improves {
                self.best = Some((cand.clone(), r));
            }
            out.push(cand);
        }
        Ok(out)
    }

    /// Initial population: uniform in bounds, with the requested vector in
    /// slot 0 when seeding is on.
    pub fn initial(&mut self, size: usize, requested: &[f64], seed_request: bool) -> Vec<Vec<f64>> {
        (0..size)
            .map(|i| if i == 0 && seed_request { requested.to_vec() } else { self.bounds.sample(&mut self.rng) })
            .collect()
    }

    pub fn best_fitness(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |(b, _)| b.fitness)
    }

    pub fn end_epoch(&mut self, population: &[Candidate]) {
        let best = self.best_fitness();
        self.best_per_epoch.push(best);
        if let Some(p) = self.population_fitness.as_mut() {
            p.push(population.iter().map(|c| c.fitness).collect());
        }
    }
}

/// Index of the fittest candidate (first on ties).
pub(crate) fn argmax(pop: &[Candidate]) -> usize {
    let mut best = 0;
    for (i, c) in pop.iter().enumerate() {
        if c.fitness > pop[best].fitness {
            best = i;
        }
    }
    best
}

/// Runs `config.algorithm` on `instance`.
pub fn run(instance: &ProblemInstance, config: &AlgorithmConfig) -> Result<ConvergenceTrace, OptimizerError> {
    config.validate()?;
    let started = Instant::now();
    let (requested, bounds) = encode(instance);
    let mut search = Search::new(instance, config, bounds);
    let requested = requested.values;

    match config.algorithm {
        Algorithm::Ga => ga::run(&mut search, config, &requested)?,
        Algorithm::Pso => pso::run(&mut search, config, &requested)?,
        Algorithm::Sa => sa::run(&mut search, config, &requested)?,
        Algorithm::De => de::run(&mut search, config, &requested)?,
        Algorithm::Acor => acor::run(&mut search, config, &requested)?,
        Algorithm::Gwo => wolves::run(&mut search, config, &requested, wolves::Variant::Gwo)?,
        Algorithm::Woa => wolves::run(&mut search, config, &requested, wolves::Variant::Woa)?,
        Algorithm::GwoWoa => wolves::run(&mut search, config, &requested, wolves::Variant::Hybrid)?,
        Algorithm::CmaEs | Algorithm::Abc => unreachable!("rejected by validate"),
    }

    let wall_time = started.elapsed();
    let (best, result) = search.best.take().expect("initial population is always evaluated");
    Ok(ConvergenceTrace {
        algorithm: config.algorithm,
        seed: config.seed,
        best_per_epoch: search.best_per_epoch,
        population_fitness: search.population_fitness,
        evaluations: search.evaluations,
        best_fitness: best.fitness,
        best_vector: best.x,
        result,
        wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GenerateSpec};

    fn small() -> ProblemInstance {
        generate_instance(&GenerateSpec::new(8, 2, 5)).unwrap()
    }

    #[test]
    fn encode_reproduces_request() {
        let inst = small();
        let (v, b) = encode(&inst);
        assert_eq!(v.values.len(), inst.layout().total_len());
        for (i, r) in inst.requests().iter().enumerate() {
            assert_eq!(v.service(i), r.requested_departures().as_slice());
        }
        assert!(b.contains(&v.values));
    }

    #[test]
    fn zero_margin_degenerates_bounds() {
        let inst = small();
        let inst = inst.with_params(crate::model::MarketParams { delta: 0.0, ..*inst.params() }).unwrap();
        let (v, b) = encode(&inst);
        assert_eq!(b.low, v.values);
        assert_eq!(b.high, v.values);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::IMPLEMENTED.into_iter().chain([Algorithm::CmaEs, Algorithm::Abc]) {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("gwo-woa".parse::<Algorithm>().unwrap(), Algorithm::GwoWoa);
        assert!("nope".parse::<Algorithm>().is_err());
    }

    #[test]
    fn unimplemented_algorithms_are_rejected() {
        let inst = small();
        for a in [Algorithm::CmaEs, Algorithm::Abc] {
            let err = run(&inst, &AlgorithmConfig::defaults(a)).unwrap_err();
            assert_eq!(err, OptimizerError::NotImplemented(a));
        }
    }

    #[test]
    fn sa_requires_single_solution() {
        let cfg = AlgorithmConfig { population: 20, ..AlgorithmConfig::defaults(Algorithm::Sa) };
        assert!(matches!(cfg.validate(), Err(OptimizerError::InvalidConfig(_))));
    }

    #[test]
    fn zero_epochs_returns_best_initial() {
        let inst = small();
        let (req, _) = encode(&inst);
        let baseline = fitness(&inst, &req.values, EvalOptions::default()).unwrap();
        for a in Algorithm::IMPLEMENTED {
            let cfg = AlgorithmConfig { epochs: 0, ..AlgorithmConfig::defaults(a) };
            let trace = run(&inst, &cfg).unwrap();
            assert!(trace.best_per_epoch.is_empty());
            assert!(trace.best_fitness >= baseline, "{a}");
            assert_eq!(trace.evaluations, cfg.population, "{a}");
        }
    }

    #[test]
    fn every_strategy_is_monotone_bounded_and_deterministic() {
        let inst = small();
        let (req, bounds) = encode(&inst);
        let baseline = fitness(&inst, &req.values, EvalOptions::default()).unwrap();
        for a in Algorithm::IMPLEMENTED {
            let mut cfg = AlgorithmConfig::defaults(a).with_seed(17);
            cfg.epochs = if a == Algorithm::Sa { 300 } else { 15 };
            cfg.population = if a == Algorithm::Sa { 1 } else { 10 };
            let t1 = run(&inst, &cfg).unwrap();
            let t2 = run(&inst, &cfg).unwrap();
            assert_eq!(t1.best_per_epoch, t2.best_per_epoch, "{a}");
            assert_eq!(t1.best_vector, t2.best_vector, "{a}");
            assert_eq!(t1.best_per_epoch.len(), cfg.epochs, "{a}");
            assert!(t1.best_per_epoch.windows(2).all(|w| w[1] >= w[0]), "{a}");
            assert!(t1.best_fitness >= baseline, "{a}");
            assert!(bounds.contains(&t1.best_vector), "{a}");
            assert_eq!(t1.result.total, t1.best_fitness, "{a}");
        }
    }

    #[test]
    fn evaluation_budgets() {
        let inst = small();
        let ga = run(&inst, &AlgorithmConfig { epochs: 10, population: 7, ..AlgorithmConfig::defaults(Algorithm::Ga) }).unwrap();
        assert_eq!(ga.evaluations, 70);
        let sa = run(&inst, &AlgorithmConfig { epochs: 70, ..AlgorithmConfig::defaults(Algorithm::Sa) }).unwrap();
        assert_eq!(sa.evaluations, 70);
        let acor = run(&inst, &AlgorithmConfig { epochs: 3, population: 5, ..AlgorithmConfig::defaults(Algorithm::Acor) }).unwrap();
        assert_eq!(acor.evaluations, 5 + 2 * 25);
    }

    #[test]
    fn population_snapshots_are_optional() {
        let inst = small();
        let mut cfg = AlgorithmConfig { epochs: 4, population: 6, ..AlgorithmConfig::defaults(Algorithm::Pso) };
        assert!(run(&inst, &cfg).unwrap().population_fitness.is_none());
        cfg.record_population = true;
        let snaps = run(&inst, &cfg).unwrap().population_fitness.unwrap();
        assert_eq!(snaps.len(), 4);
        assert!(snaps.iter().all(|s| s.len() == 6));
    }
}
