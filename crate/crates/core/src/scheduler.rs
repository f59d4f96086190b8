//! Feasibility checks, repair, and conflict-free service selection.
//!
//! [`evaluate_proposal`] is the full pipeline that turns a flat vector of
//! departures into a [`ScheduleResult`]: decode, optionally repair, validate
//! each service, build the conflict matrix over feasible services, price
//! them, and select a conflict-free subset greedily by revenue.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::{conflict_matrix, ConflictMatrix, TimedPath};
use crate::model::{
    derive_times, deviation_metrics, MarketParams, Minutes, ModelError, ProblemInstance, ServiceRequest, TIME_EPS,
};
use crate::penalty::{service_revenue, PenaltyError, RevenueBreakdown};

/// Default largest number of feasible services the exhaustive oracle accepts.
pub const DEFAULT_ORACLE_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error("{count} feasible services exceed the exhaustive cap of {cap}")]
    TooLarge { count: usize, cap: usize },
}

/// A broken feasibility constraint. Stop indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Origin departure moved by more than `delta`.
    DepartureMargin { shift: Minutes },
    /// Departure earlier than previous departure + run time + minimal dwell.
    OperatingTime { stop: usize },
    /// Departure later than requested + `dwell_max`.
    DwellCap { stop: usize },
    /// Departure later than previous departure + run time + `dwell_max`.
    DwellExtension { stop: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks one service's proposed departures against the departure margin,
/// operating-time and dwell constraints.
pub fn validate_service(
    request: &ServiceRequest,
    departures: &[Minutes],
    params: &MarketParams,
) -> Result<Validation, ModelError> {
    let expected = request.decision_len();
    if departures.len() != expected {
        return Err(ModelError::InvalidVectorLength { expected, got: departures.len() });
    }
    let run = request.run_times();
    let dwell = request.min_dwells();
    let mut violations = Vec::new();

    let shift = departures[0] - request.origin_departure();
    if shift.abs() > params.delta + TIME_EPS {
        violations.push(Violation::DepartureMargin { shift });
    }
    for j in 1..departures.len() {
        let earliest = departures[j - 1] + run[j - 1] + dwell[j];
        if departures[j] < earliest - TIME_EPS {
            violations.push(Violation::OperatingTime { stop: j });
        }
        if departures[j] > request.stops[j].departure + params.dwell_max + TIME_EPS {
            violations.push(Violation::DwellCap { stop: j });
        }
        if departures[j] > departures[j - 1] + run[j - 1] + params.dwell_max + TIME_EPS {
            violations.push(Violation::DwellExtension { stop: j });
        }
    }
    Ok(Validation { violations })
}

/// Forward pass lifting each departure to at least the previous departure
/// plus run time plus minimal dwell. Idempotent; the result may still
/// breach the dwell caps, which validation reports.
pub fn repair_service(request: &ServiceRequest, raw: &[Minutes]) -> Result<Vec<Minutes>, ModelError> {
    let expected = request.decision_len();
    if raw.len() != expected {
        return Err(ModelError::InvalidVectorLength { expected, got: raw.len() });
    }
    let run = request.run_times();
    let dwell = request.min_dwells();
    let mut out = raw.to_vec();
    for j in 1..out.len() {
        let earliest = out[j - 1] + run[j - 1] + dwell[j];
        if out[j] < earliest {
            out[j] = earliest;
        }
    }
    Ok(out)
}

/// Greedy revenue-ordered selection over a conflict matrix.
///
/// Eligible services without conflicts are taken first. Then, while
/// conflicting services remain, the highest-revenue one (lowest index on
/// ties) is scheduled and every remaining service conflicting with it is
/// dropped.
pub fn greedy_select(matrix: &ConflictMatrix, revenues: &[f64], eligible: &[bool]) -> Vec<bool> {
    let n = matrix.len();
    let mut scheduled = vec![false; n];
    let mut open: Vec<usize> = Vec::new();
    for i in 0..n {
        if !eligible[i] {
            continue;
        }
        let conflicted = (0..n).any(|j| eligible[j] && matrix.get(i, j));
        if conflicted {
            open.push(i);
        } else {
            scheduled[i] = true;
        }
    }
    while !open.is_empty() {
        let mut pick = 0;
        for (slot, &i) in open.iter().enumerate() {
            if revenues[i] > revenues[open[pick]] {
                pick = slot;
            }
        }
        let chosen = open.remove(pick);
        scheduled[chosen] = true;
        open.retain(|&j| !matrix.get(chosen, j));
        // Services left without any remaining rival are settled at once.
        let settled: Vec<usize> =
            open.iter().copied().filter(|&i| !open.iter().any(|&j| matrix.get(i, j))).collect();
        for i in settled {
            scheduled[i] = true;
        }
        open.retain(|&i| !scheduled[i]);
    }
    scheduled
}

/// Best-revenue conflict-free subset by full enumeration. Ties go to fewer
/// services, then to the lexicographically smallest index set.
pub fn exhaustive_select(
    matrix: &ConflictMatrix,
    revenues: &[f64],
    eligible: &[bool],
    cap: usize,
) -> Result<Vec<bool>, SchedulerError> {
    let idx: Vec<usize> = (0..matrix.len()).filter(|&i| eligible[i]).collect();
    let k = idx.len();
    if k > cap || k >= usize::BITS as usize {
        return Err(SchedulerError::TooLarge { count: k, cap });
    }
    let adjacency: Vec<u64> = idx
        .iter()
        .map(|&i| idx.iter().enumerate().filter(|(_, &j)| matrix.get(i, j)).fold(0u64, |m, (b, _)| m | 1 << b))
        .collect();

    let total = 1u64 << k;
    let mut independent = vec![false; total as usize];
    let mut revenue = vec![0.0f64; total as usize];
    independent[0] = true;
    let mut best = 0u64;
    for mask in 1..total {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let ok = independent[rest as usize] && adjacency[low] & rest == 0;
        independent[mask as usize] = ok;
        if !ok {
            continue;
        }
        revenue[mask as usize] = revenue[rest as usize] + revenues[idx[low]];
        if better_subset(mask, revenue[mask as usize], best, revenue[best as usize]) {
            best = mask;
        }
    }

    let mut scheduled = vec![false; matrix.len()];
    for (b, &i) in idx.iter().enumerate() {
        if best >> b & 1 == 1 {
            scheduled[i] = true;
        }
    }
    Ok(scheduled)
}

fn better_subset(mask: u64, value: f64, best: u64, best_value: f64) -> bool {
    let tol = 1e-9 * value.abs().max(best_value.abs()).max(1.0);
    if value > best_value + tol {
        return true;
    }
    if value < best_value - tol {
        return false;
    }
    match mask.count_ones().cmp(&best.count_ones()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        // Smaller index set in lexicographic order: compare the lowest bit
        // where they differ; whoever owns it comes first.
        std::cmp::Ordering::Equal => {
            let diff = mask ^ best;
            diff != 0 && mask & (diff & diff.wrapping_neg()) != 0
        }
    }
}

/// Outcome of evaluating a proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    /// Scheduled flag per service, in instance order.
    pub scheduled: Vec<bool>,
    /// Revenue of each scheduled service.
    pub breakdowns: Vec<RevenueBreakdown>,
    pub total: f64,
    pub delta_dt: Minutes,
    pub delta_tt: Minutes,
    /// Services rejected before conflict resolution.
    pub infeasible: Vec<String>,
    /// Departures used for every service after repair.
    pub departures: Vec<Vec<Minutes>>,
}

impl ScheduleResult {
    pub fn scheduled_count(&self) -> usize {
        self.scheduled.iter().filter(|&&b| b).count()
    }

    pub fn scheduled_ids<'a>(&self, instance: &'a ProblemInstance) -> Vec<&'a str> {
        instance
            .requests()
            .iter()
            .zip(&self.scheduled)
            .filter(|(_, &on)| on)
            .map(|(r, _)| r.id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Lift departures that violate the operating-time constraint before validating.
    pub repair: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { repair: true }
    }
}

/// Everything known about a proposal before service selection.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub departures: Vec<Vec<Minutes>>,
    pub feasible: Vec<bool>,
    pub paths: Vec<TimedPath>,
    pub matrix: ConflictMatrix,
    /// Revenue of each feasible service; `None` for infeasible ones.
    pub breakdowns: Vec<Option<RevenueBreakdown>>,
}

impl Assessment {
    pub fn revenues(&self) -> Vec<f64> {
        self.breakdowns.iter().map(|b| b.as_ref().map_or(0.0, |b| b.net_revenue)).collect()
    }
}

/// Decodes, repairs, validates and prices a flat departure vector and builds
/// the conflict matrix over feasible services.
pub fn assess(instance: &ProblemInstance, vector: &[Minutes], opts: EvalOptions) -> Result<Assessment, SchedulerError> {
    let slices = instance.layout().split(vector)?;
    let params = instance.params();
    let n = instance.len();
    let mut departures = Vec::with_capacity(n);
    let mut feasible = Vec::with_capacity(n);
    let mut paths = Vec::with_capacity(n);
    let mut breakdowns = Vec::with_capacity(n);
    for (i, (req, raw)) in instance.requests().iter().zip(slices).enumerate() {
        let deps = if opts.repair { repair_service(req, raw)? } else { raw.to_vec() };
        let ok = validate_service(req, &deps, params)?.is_feasible();
        let stops = derive_times(req, &deps)?;
        paths.push(TimedPath::for_service(instance, i, &stops));
        breakdowns.push(if ok { Some(service_revenue(req, &deps, params, instance.operator_of(i))?) } else { None });
        feasible.push(ok);
        departures.push(deps);
    }
    let matrix = conflict_matrix(instance, &paths, &feasible);
    Ok(Assessment { departures, feasible, paths, matrix, breakdowns })
}

fn finish(instance: &ProblemInstance, assessment: Assessment, scheduled: Vec<bool>) -> Result<ScheduleResult, SchedulerError> {
    let (delta_dt, delta_tt) = deviation_metrics(instance, &assessment.departures, &scheduled)?;
    let infeasible = instance
        .requests()
        .iter()
        .zip(&assessment.feasible)
        .filter(|(_, &ok)| !ok)
        .map(|(r, _)| r.id.clone())
        .collect();
    let breakdowns: Vec<RevenueBreakdown> = assessment
        .breakdowns
        .into_iter()
        .zip(&scheduled)
        .filter_map(|(b, &on)| if on { b } else { None })
        .collect();
    let total = breakdowns.iter().map(|b| b.net_revenue).sum();
    Ok(ScheduleResult {
        scheduled,
        breakdowns,
        total,
        delta_dt,
        delta_tt,
        infeasible,
        departures: assessment.departures,
    })
}

/// Greedy conflict resolution over an assessed proposal.
pub fn greedy_schedule(instance: &ProblemInstance, assessment: Assessment) -> Result<ScheduleResult, SchedulerError> {
    let scheduled = greedy_select(&assessment.matrix, &assessment.revenues(), &assessment.feasible);
    finish(instance, assessment, scheduled)
}

/// Full pipeline: decode, repair, validate, detect conflicts, price, select greedily.
pub fn evaluate_proposal(
    instance: &ProblemInstance,
    vector: &[Minutes],
    opts: EvalOptions,
) -> Result<ScheduleResult, SchedulerError> {
    greedy_schedule(instance, assess(instance, vector, opts)?)
}

/// Same pipeline with the exhaustive selection instead of the greedy one.
pub fn exhaustive_oracle(
    instance: &ProblemInstance,
    vector: &[Minutes],
    opts: EvalOptions,
    cap: usize,
) -> Result<ScheduleResult, SchedulerError> {
    let assessment = assess(instance, vector, opts)?;
    let scheduled = exhaustive_select(&assessment.matrix, &assessment.revenues(), &assessment.feasible, cap)?;
    finish(instance, assessment, scheduled)
}

/// Requested departures of every service, concatenated in instance order.
pub fn requested_vector(instance: &ProblemInstance) -> Vec<Minutes> {
    instance.requests().iter().flat_map(ServiceRequest::requested_departures).collect()
}
