//! Multi-seed experiments, summaries, significance tests and the margin
//! sensitivity grid.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{generate_instance, GenerateError, GenerateSpec};
use crate::model::{MarketParams, ModelError, ProblemInstance};
use crate::optimizer::{run, Algorithm, AlgorithmConfig, OptimizerError};
use crate::stats::{ks_two_sample, wilcoxon_signed_rank, StatsError, TestResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("nothing to run: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One (algorithm, run) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub rank: usize,
    pub algorithm: Algorithm,
    pub run: usize,
    pub revenue: f64,
    pub time_s: f64,
    pub scheduled_trains: usize,
    pub delta_dt_min: f64,
    pub delta_tt_min: f64,
    #[serde(skip)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (zero for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub time_s: MeanStd,
    pub revenue: MeanStd,
    pub scheduled_trains: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Sorted by revenue, best first.
    pub rows: Vec<RunRow>,
    /// In the order algorithms were given.
    pub summary: Vec<AlgorithmSummary>,
}

/// Per-algorithm summary recomputed from rows.
pub fn summarize(rows: &[RunRow], order: &[Algorithm]) -> Vec<AlgorithmSummary> {
    order
        .iter()
        .filter_map(|&a| {
            let mine: Vec<&RunRow> = rows.iter().filter(|r| r.algorithm == a).collect();
            if mine.is_empty() {
                return None;
            }
            let col = |f: fn(&RunRow) -> f64| mine.iter().map(|r| f(r)).collect::<Vec<_>>();
            Some(AlgorithmSummary {
                algorithm: a,
                runs: mine.len(),
                time_s: MeanStd::of(&col(|r| r.time_s)),
                revenue: MeanStd::of(&col(|r| r.revenue)),
                scheduled_trains: MeanStd::of(&col(|r| r.scheduled_trains as f64)),
            })
        })
        .collect()
}

/// Runs every config `runs` times with seeds `base_seed + run`.
///
/// Cells run one after another so that wall times are not inflated by
/// competing runs; each run parallelises its own fitness evaluations.
pub fn run_experiment(
    instance: &ProblemInstance,
    configs: &[AlgorithmConfig],
    runs: usize,
    base_seed: u64,
) -> Result<ExperimentReport, BenchError> {
    if runs == 0 {
        return Err(BenchError::NoRuns);
    }
    if configs.is_empty() {
        return Err(BenchError::Empty("no algorithms"));
    }
    for c in configs {
        c.validate()?;
    }
    let mut rows = Vec::with_capacity(configs.len() * runs);
    for config in configs {
        for r in 0..runs {
            let seed = base_seed.wrapping_add(r as u64);
            let trace = run(instance, &config.clone().with_seed(seed))?;
            rows.push(RunRow {
                rank: 0,
                algorithm: config.algorithm,
                run: r + 1,
                revenue: trace.best_fitness,
                time_s: trace.wall_time.as_secs_f64(),
                scheduled_trains: trace.result.scheduled_count(),
                delta_dt_min: trace.result.delta_dt,
                delta_tt_min: trace.result.delta_tt,
                seed,
            });
        }
    }
    // Stable: ties keep algorithm then run order.
    rows.sort_by(|a, b| b.revenue.total_cmp(&a.revenue));
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    let order: Vec<Algorithm> = configs.iter().map(|c| c.algorithm).collect();
    let summary = summarize(&rows, &order);
    Ok(ExperimentReport { rows, summary })
}

/// Writes the per-run table.
pub fn write_report_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Revenue comparison between two algorithms of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Algorithm,
    pub b: Algorithm,
    /// Runs paired by index.
    pub wilcoxon: TestResult,
    pub ks: TestResult,
}

fn revenues_by_run(report: &ExperimentReport, algorithm: Algorithm) -> Vec<f64> {
    let mut rows: Vec<&RunRow> = report.rows.iter().filter(|r| r.algorithm == algorithm).collect();
    rows.sort_by_key(|r| r.run);
    rows.iter().map(|r| r.revenue).collect()
}

/// Wilcoxon and KS tests on revenue for every pair of algorithms.
pub fn pairwise_tests(report: &ExperimentReport) -> Result<Vec<Comparison>, BenchError> {
    let algos: Vec<Algorithm> = report.summary.iter().map(|s| s.algorithm).collect();
    let mut out = Vec::new();
    for (i, &a) in algos.iter().enumerate() {
        for &b in &algos[i + 1..] {
            let (ra, rb) = (revenues_by_run(report, a), revenues_by_run(report, b));
            out.push(Comparison { a, b, wilcoxon: wilcoxon_signed_rank(&ra, &rb)?, ks: ks_two_sample(&ra, &rb)? });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub omega: f64,
    pub delta: f64,
    pub mean_revenue: f64,
}

/// Mean revenue over all configs and runs for each (omega, delta) pair,
/// omega-major. The same generated requests are used in every cell.
pub fn sensitivity_grid(
    base: &ProblemInstance,
    omegas: &[f64],
    deltas: &[f64],
    configs: &[AlgorithmConfig],
    runs: usize,
    base_seed: u64,
) -> Result<Vec<GridCell>, BenchError> {
    if omegas.is_empty() || deltas.is_empty() {
        return Err(BenchError::Empty("empty margin grid"));
    }
    let mut cells = Vec::with_capacity(omegas.len() * deltas.len());
    for &omega in omegas {
        for &delta in deltas {
            let params = MarketParams { omega, delta, ..*base.params() };
            let instance = base.with_params(params)?;
            let report = run_experiment(&instance, configs, runs, base_seed)?;
            let mean_revenue = report.rows.iter().map(|r| r.revenue).sum::<f64>() / report.rows.len() as f64;
            cells.push(GridCell { omega, delta, mean_revenue });
        }
    }
    Ok(cells)
}

pub fn write_grid_csv<W: Write>(cells: &[GridCell], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Everything the sensitivity command needs, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivitySpec {
    pub instance: GenerateSpec,
    pub omega: Vec<f64>,
    pub delta: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    pub base_seed: u64,
    /// Overrides the per-algorithm default budget when set.
    pub epochs: Option<usize>,
    pub population: Option<usize>,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        Self {
            instance: GenerateSpec::default(),
            omega: vec![2.5, 5.0, 10.0],
            delta: vec![30.0, 45.0, 60.0],
            algorithms: Algorithm::IMPLEMENTED.to_vec(),
            runs: 5,
            base_seed: 0,
            epochs: None,
            population: None,
        }
    }
}

impl SensitivitySpec {
    pub fn configs(&self) -> Vec<AlgorithmConfig> {
        self.algorithms
            .iter()
            .map(|&a| {
                let mut c = AlgorithmConfig::defaults(a);
                if let Some(e) = self.epochs {
                    c.epochs = e;
                }
                if let Some(p) = self.population {
                    if a != Algorithm::Sa {
                        c.population = p;
                    }
                }
                c
            })
            .collect()
    }

    pub fn run(&self) -> Result<Vec<GridCell>, BenchError> {
        let base = generate_instance(&self.instance)?;
        sensitivity_grid(&base, &self.omega, &self.delta, &self.configs(), self.runs, self.base_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(a: Algorithm) -> AlgorithmConfig {
        let mut c = AlgorithmConfig::defaults(a);
        if a == Algorithm::Sa {
            c.epochs = 60;
        } else {
            c.epochs = 6;
            c.population = 10;
        }
        c
    }

    fn instance() -> ProblemInstance {
        generate_instance(&GenerateSpec::new(8, 2, 3)).unwrap()
    }

    #[test]
    fn single_cell() {
        let r = run_experiment(&instance(), &[quick(Algorithm::Ga)], 1, 5).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.summary[0].revenue.std, 0.0);
        assert_eq!(r.rows[0].seed, 5);
    }

    #[test]
    fn reproducible_and_ranked() {
        let inst = instance();
        let cfgs: Vec<_> = Algorithm::IMPLEMENTED.iter().map(|&a| quick(a)).collect();
        let a = run_experiment(&inst, &cfgs, 2, 100).unwrap();
        let b = run_experiment(&inst, &cfgs, 2, 100).unwrap();
        assert_eq!(a.rows.len(), 16);
        let strip = |r: &ExperimentReport| r.rows.iter().map(|x| (x.algorithm, x.run, x.revenue)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert!(a.rows.windows(2).all(|w| w[0].revenue >= w[1].revenue));
        assert_eq!(a.rows.iter().map(|r| r.rank).collect::<Vec<_>>(), (1..=16).collect::<Vec<_>>());
        assert_eq!(summarize(&a.rows, &Algorithm::IMPLEMENTED), a.summary);
        assert_eq!(pairwise_tests(&a).unwrap().len(), 28);
    }

    #[test]
    fn unimplemented_and_empty_inputs() {
        let inst = instance();
        assert!(matches!(run_experiment(&inst, &[quick(Algorithm::Ga)], 0, 0), Err(BenchError::NoRuns)));
        let cma = AlgorithmConfig::defaults(Algorithm::CmaEs);
        assert!(matches!(run_experiment(&inst, &[cma], 1, 0), Err(BenchError::Optimizer(_))));
        assert!(sensitivity_grid(&inst, &[], &[10.0], &[quick(Algorithm::Ga)], 1, 0).is_err());
    }

    #[test]
    fn csv_columns() {
        let r = run_experiment(&instance(), &[quick(Algorithm::De)], 2, 0).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "rank,algorithm,run,revenue,time_s,scheduled_trains,delta_dt_min,delta_tt_min"
        );
        assert_eq!(lines.count(), 2);
        assert!(text.contains(",DE,"));
    }

    #[test]
    fn grid_shapes() {
        let inst = instance();
        let cfg = [quick(Algorithm::Pso)];
        let one = sensitivity_grid(&inst, &[5.0], &[10.0], &cfg, 2, 1).unwrap();
        let params = MarketParams { omega: 5.0, delta: 10.0, ..*inst.params() };
        let rep = run_experiment(&inst.with_params(params).unwrap(), &cfg, 2, 1).unwrap();
        assert_eq!(one[0].mean_revenue, rep.summary[0].revenue.mean);
        let nine = sensitivity_grid(&inst, &[2.5, 5.0, 10.0], &[5.0, 10.0, 15.0], &cfg, 1, 1).unwrap();
        assert_eq!(nine.len(), 9);
        let mut buf = Vec::new();
        write_grid_csv(&nine, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("omega,delta,mean_revenue\n"));
    }
}
