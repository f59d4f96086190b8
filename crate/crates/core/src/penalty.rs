//! Penalty sensitivity curve and per-service revenue.
//!
//! A service scheduled exactly as requested pays its full fee. Shifting the
//! origin departure or stretching the time between consecutive departures
//! costs a fraction of the fee, shaped by the operator's sensitivity `k`.
//! The departure deviation carries `p_max * share_dt` of the fee, and the
//! travel-time deviations share `p_max * share_tt` equally among the stop
//! pairs, so the worst case loses exactly `p_max`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{derive_times, pair_travel_times, MarketParams, Minutes, ModelError, RailwayUndertaking, ServiceRequest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PenaltyError {
    #[error("normalised deviation {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("sensitivity k must be positive and finite, got {0}")]
    InvalidSensitivity(f64),
    #[error("modification margin is zero but the deviation is {0} min")]
    DegenerateMargin(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `f(x, k) = 1 - exp(-k x^2) * (cos(pi x) / 2 + 1/2)` on `x` in `[0, 1]`.
///
/// Zero at `x = 0`, one at `x = 1`, and steeper for larger `k`.
pub fn penalty_curve(x: f64, k: f64) -> Result<f64, PenaltyError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(PenaltyError::OutOfRange(x));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(PenaltyError::InvalidSensitivity(k));
    }
    let value = 1.0 - (-k * x * x).exp() * (0.5 * (std::f64::consts::PI * x).cos() + 0.5);
    Ok(value.clamp(0.0, 1.0))
}

fn normalised(diff: f64, delta: Minutes) -> Result<f64, PenaltyError> {
    if delta <= 0.0 {
        return if diff == 0.0 { Ok(0.0) } else { Err(PenaltyError::DegenerateMargin(diff)) };
    }
    Ok((diff / delta).clamp(0.0, 1.0))
}

/// Normalised departure shift `|proposed - requested| / delta`, clamped to `[0, 1]`.
pub fn x_dt(proposed_dep: Minutes, requested_dep: Minutes, delta: Minutes) -> Result<f64, PenaltyError> {
    normalised((proposed_dep - requested_dep).abs(), delta)
}

/// Normalised travel-time extension `(proposed - requested) / delta`, clamped
/// to `[0, 1]`. Shorter-than-requested travel is infeasible upstream, so any
/// negative difference maps to zero.
pub fn x_tt(proposed_tt: Minutes, requested_tt: Minutes, delta: Minutes) -> Result<f64, PenaltyError> {
    normalised((proposed_tt - requested_tt).max(0.0), delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueBreakdown {
    pub service_id: String,
    pub base_fee: f64,
    /// Departure weight.
    pub alpha: f64,
    /// Sum of the per-pair travel-time weights.
    pub beta_sum: f64,
    pub dt_penalty: f64,
    pub tt_penalty: f64,
    pub net_revenue: f64,
}

/// Net fee from the weights: `fee * (1 - alpha*p_dt - sum(beta)*p_tt/|pairs|)`.
pub fn net_revenue(fee: f64, alpha: f64, betas: &[f64], p_dt_eff: f64, p_tt_eff: f64) -> f64 {
    let pairs = betas.len().max(1) as f64;
    let beta_sum: f64 = betas.iter().sum();
    fee * (1.0 - alpha * p_dt_eff - beta_sum * p_tt_eff / pairs)
}

/// Revenue of one service under proposed departures. The proposal must
/// already be known to be feasible.
pub fn service_revenue(
    request: &ServiceRequest,
    proposed_departures: &[Minutes],
    params: &MarketParams,
    ru: &RailwayUndertaking,
) -> Result<RevenueBreakdown, PenaltyError> {
    let stops = derive_times(request, proposed_departures)?;
    let k = ru.sensitivity_k;
    let alpha = penalty_curve(x_dt(stops[0].departure, request.origin_departure(), params.delta)?, k)?;

    let requested = request.pair_travel_times();
    let betas = pair_travel_times(&stops)
        .iter()
        .zip(&requested)
        .map(|(&p, &r)| penalty_curve(x_tt(p, r, params.delta)?, k))
        .collect::<Result<Vec<_>, _>>()?;

    let fee = request.fee;
    let pairs = betas.len() as f64;
    let beta_sum: f64 = betas.iter().sum();
    let dt_penalty = fee * alpha * params.p_dt_eff();
    let tt_penalty = fee * beta_sum * params.p_tt_eff() / pairs;
    Ok(RevenueBreakdown {
        service_id: request.id.clone(),
        base_fee: fee,
        alpha,
        beta_sum,
        dt_penalty,
        tt_penalty,
        net_revenue: net_revenue(fee, alpha, &betas, params.p_dt_eff(), params.p_tt_eff()),
    })
}

/// `sum(B_i * net_i)` over services aligned with `scheduled`.
pub fn total_revenue(breakdowns: &[RevenueBreakdown], scheduled: &[bool]) -> f64 {
    debug_assert_eq!(breakdowns.len(), scheduled.len());
    breakdowns
        .iter()
        .zip(scheduled)
        .filter(|(_, &on)| on)
        .map(|(b, _)| b.net_revenue)
        .sum()
}
