//! Pairwise conflict detection on a single-track, unidirectional corridor.
//!
//! Trains move at constant speed between stops, so the time at which a train
//! passes any kilometre point is a linear interpolation between the
//! departure from the previous stop and the arrival at the next one. Two
//! trains are compared on the part of the corridor they both cover. That
//! shared span is cut at every stop of either train; on each piece both
//! trajectories are straight lines, so the time gap between them is linear
//! and only the two ends need checking: the departure-side gap at the start
//! and the arrival-side gap at the end.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConflictSemantics, Minutes, ProblemInstance, Stop};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConflictError {
    #[error("position {position} km lies outside the service span [{start}, {end}]")]
    OutsideSpan { position: f64, start: f64, end: f64 },
    #[error("path needs matching stops and positions with at least two entries")]
    MalformedPath,
}

/// Which of a dwelling train's two times to use at a stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Arrival,
    Departure,
}

/// A service's timed trajectory: kilometre points with arrival and departure
/// times, strictly increasing in position.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedPath {
    positions: Vec<f64>,
    arrivals: Vec<Minutes>,
    departures: Vec<Minutes>,
}

impl TimedPath {
    pub fn new(positions: Vec<f64>, stops: &[Stop]) -> Result<Self, ConflictError> {
        if positions.len() != stops.len() || stops.len() < 2 {
            return Err(ConflictError::MalformedPath);
        }
        Ok(Self {
            positions,
            arrivals: stops.iter().map(|s| s.arrival).collect(),
            departures: stops.iter().map(|s| s.departure).collect(),
        })
    }

    /// Path of request `i` from the instance and a derived stop list.
    pub fn for_service(instance: &ProblemInstance, i: usize, stops: &[Stop]) -> Self {
        Self::new(instance.stop_positions(i).to_vec(), stops).expect("instance stops are validated")
    }

    pub fn start_position(&self) -> f64 {
        self.positions[0]
    }

    pub fn end_position(&self) -> f64 {
        self.positions[self.positions.len() - 1]
    }

    pub fn start_time(&self) -> Minutes {
        self.departures[0]
    }

    pub fn end_time(&self) -> Minutes {
        self.arrivals[self.arrivals.len() - 1]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn arrivals(&self) -> &[Minutes] {
        &self.arrivals
    }

    pub fn departures(&self) -> &[Minutes] {
        &self.departures
    }

    /// Time at `position`. Between stops this is linear in position; at a
    /// stop, `side` picks arrival or departure.
    pub fn time_at(&self, position: f64, side: Side) -> Result<Minutes, ConflictError> {
        let (start, end) = (self.start_position(), self.end_position());
        if !(start..=end).contains(&position) {
            return Err(ConflictError::OutsideSpan { position, start, end });
        }
        // First stop whose position is >= the query.
        let j = self.positions.partition_point(|&p| p < position);
        if self.positions[j] == position {
            return Ok(match side {
                Side::Arrival => self.arrivals[j],
                Side::Departure => self.departures[j],
            });
        }
        let (p0, p1) = (self.positions[j - 1], self.positions[j]);
        let (t0, t1) = (self.departures[j - 1], self.arrivals[j]);
        Ok(t0 + (position - p0) / (p1 - p0) * (t1 - t0))
    }
}

/// Time at `position` for a derived stop list on `corridor`.
pub fn interpolate_time(
    stops: &[Stop],
    corridor: &crate::model::Corridor,
    position: f64,
    side: Side,
) -> Result<Minutes, ConflictError> {
    let positions = stops
        .iter()
        .map(|s| corridor.position_of(&s.station_id).ok_or(ConflictError::MalformedPath))
        .collect::<Result<Vec<_>, _>>()?;
    TimedPath::new(positions, stops)?.time_at(position, side)
}

/// Gap check on one piece of the shared span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGap {
    pub from_km: f64,
    pub to_km: f64,
    /// `a - b` at the start of the piece, departure side.
    pub departure_gap: Minutes,
    /// `a - b` at the end of the piece, arrival side.
    pub arrival_gap: Minutes,
}

impl SegmentGap {
    fn crosses(&self) -> bool {
        self.departure_gap * self.arrival_gap <= 0.0
    }

    fn flagged(&self, headway: f64, semantics: ConflictSemantics) -> bool {
        let dep_close = self.departure_gap.abs() < headway;
        let arr_close = self.arrival_gap.abs() < headway;
        match semantics {
            ConflictSemantics::PermissiveOr => self.crosses() || dep_close || arr_close,
            ConflictSemantics::StrictAnd => self.crosses() && dep_close && arr_close,
        }
    }
}

/// Gaps on every piece of the shared span, or `None` when the early exit
/// applies (no shared span, or one train is clear of the other by the full
/// headway before the other starts).
pub fn segment_gaps(a: &TimedPath, b: &TimedPath, omega: Minutes) -> Option<Vec<SegmentGap>> {
    let headway = 2.0 * omega;
    let lo = a.start_position().max(b.start_position());
    let hi = a.end_position().min(b.end_position());
    if hi <= lo {
        return None;
    }
    if a.end_time() + headway <= b.start_time() || b.end_time() + headway <= a.start_time() {
        return None;
    }

    let mut cuts: Vec<f64> = a
        .positions
        .iter()
        .chain(&b.positions)
        .copied()
        .filter(|&p| p >= lo && p <= hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let gap = |pos: f64, side: Side| -> Minutes {
        // Both paths cover [lo, hi] by construction.
        a.time_at(pos, side).unwrap() - b.time_at(pos, side).unwrap()
    };
    Some(
        cuts.windows(2)
            .map(|w| SegmentGap {
                from_km: w[0],
                to_km: w[1],
                departure_gap: gap(w[0], Side::Departure),
                arrival_gap: gap(w[1], Side::Arrival),
            })
            .collect(),
    )
}

/// Pieces of the shared span on which the pair is in conflict.
pub fn conflicting_segments(
    a: &TimedPath,
    b: &TimedPath,
    omega: Minutes,
    semantics: ConflictSemantics,
) -> Vec<SegmentGap> {
    let Some(gaps) = segment_gaps(a, b, omega) else {
        return Vec::new();
    };
    let headway = 2.0 * omega;
    let mut flagged: Vec<SegmentGap> = gaps.iter().copied().filter(|g| g.flagged(headway, semantics)).collect();
    if semantics == ConflictSemantics::PermissiveOr && flagged.is_empty() {
        // Every piece keeps its order, but the order may still flip while one
        // train dwells at a shared stop.
        let first_sign = gaps[0].departure_gap > 0.0;
        if let Some(g) = gaps.iter().find(|g| (g.departure_gap > 0.0) != first_sign) {
            flagged.push(*g);
        }
    }
    flagged
}

/// Whether two services conflict under `semantics` with per-train headway `omega`.
pub fn pair_conflict(a: &TimedPath, b: &TimedPath, omega: Minutes, semantics: ConflictSemantics) -> bool {
    !conflicting_segments(a, b, omega, semantics).is_empty()
}

/// Symmetric binary conflict matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl ConflictMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, bits: vec![false; n * n] }
    }

    /// Builds a matrix from a list of conflicting pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut m = Self::new(n);
        for &(i, j) in pairs {
            m.set(i, j, true);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`. Diagonal entries stay zero.
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if i == j {
            return;
        }
        self.bits[i * self.n + j] = value;
        self.bits[j * self.n + i] = value;
    }

    pub fn row_is_clear(&self, i: usize) -> bool {
        !self.bits[i * self.n..(i + 1) * self.n].iter().any(|&b| b)
    }

    pub fn is_all_zero(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Conflicting pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Rows as 0/1 vectors.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| (0..self.n).map(|j| u8::from(self.get(i, j))).collect()).collect()
    }
}

/// Evaluates every unordered pair of candidate services. Services that are
/// not candidates keep all-zero rows.
pub fn conflict_matrix(instance: &ProblemInstance, paths: &[TimedPath], candidates: &[bool]) -> ConflictMatrix {
    let n = paths.len();
    let params = instance.params();
    let mut m = ConflictMatrix::new(n);
    for i in 0..n {
        if !candidates[i] {
            continue;
        }
        for j in i + 1..n {
            if candidates[j] && pair_conflict(&paths[i], &paths[j], params.omega, params.conflict_semantics) {
                m.set(i, j, true);
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(points: &[(f64, f64, f64)]) -> TimedPath {
        let stops: Vec<Stop> = points.iter().map(|&(_, a, d)| Stop::new("", a, d)).collect();
        TimedPath::new(points.iter().map(|p| p.0).collect(), &stops).unwrap()
    }

    #[test]
    fn interpolation_is_linear() {
        let p = path(&[(0.0, 0.0, 0.0), (100.0, 50.0, 50.0)]);
        assert_eq!(p.time_at(40.0, Side::Departure).unwrap(), 20.0);
        assert_eq!(p.time_at(100.0, Side::Arrival).unwrap(), 50.0);
        assert_eq!(p.time_at(0.0, Side::Departure).unwrap(), 0.0);
        assert!(matches!(p.time_at(120.0, Side::Arrival), Err(ConflictError::OutsideSpan { .. })));
    }

    #[test]
    fn dwell_sides() {
        let p = path(&[(0.0, 0.0, 0.0), (50.0, 20.0, 24.0), (100.0, 44.0, 44.0)]);
        assert_eq!(p.time_at(50.0, Side::Arrival).unwrap(), 20.0);
        assert_eq!(p.time_at(50.0, Side::Departure).unwrap(), 24.0);
        assert_eq!(p.time_at(75.0, Side::Arrival).unwrap(), 34.0);
    }

    #[test]
    fn overtaking_conflicts_under_both_semantics() {
        // Gaps of -5 at the start and +5 at the end.
        let a = path(&[(0.0, 0.0, 0.0), (100.0, 40.0, 40.0)]);
        let b = path(&[(0.0, 5.0, 5.0), (100.0, 35.0, 35.0)]);
        for sem in [ConflictSemantics::PermissiveOr, ConflictSemantics::StrictAnd] {
            assert!(pair_conflict(&a, &b, 10.0, sem));
            assert!(pair_conflict(&a, &b, 2.0, sem) || sem == ConflictSemantics::StrictAnd);
        }
    }

    #[test]
    fn exact_headway_is_clear() {
        let a = path(&[(0.0, 0.0, 0.0), (100.0, 40.0, 40.0)]);
        let b = path(&[(0.0, 20.0, 20.0), (100.0, 60.0, 60.0)]);
        assert!(!pair_conflict(&a, &b, 10.0, ConflictSemantics::PermissiveOr));
        assert!(pair_conflict(&a, &b, 10.5, ConflictSemantics::PermissiveOr));
    }

    #[test]
    fn disjoint_spans_never_conflict() {
        let a = path(&[(0.0, 0.0, 0.0), (100.0, 40.0, 40.0)]);
        let b = path(&[(100.0, 40.0, 40.0), (200.0, 80.0, 80.0)]);
        assert!(!pair_conflict(&a, &b, 10.0, ConflictSemantics::PermissiveOr));
    }

    #[test]
    fn overtaking_during_dwell_is_caught() {
        // `a` waits 20 minutes at km 50 while `b` passes through.
        let a = path(&[(0.0, 0.0, 0.0), (50.0, 20.0, 40.0), (100.0, 60.0, 60.0)]);
        let b = path(&[(0.0, 10.0, 10.0), (100.0, 50.0, 50.0)]);
        assert!(pair_conflict(&a, &b, 2.0, ConflictSemantics::PermissiveOr));
        assert!(!pair_conflict(&a, &b, 2.0, ConflictSemantics::StrictAnd));
    }

    #[test]
    fn matrix_is_symmetric_with_zero_diagonal() {
        let mut m = ConflictMatrix::new(3);
        m.set(0, 2, true);
        m.set(1, 1, true);
        assert!(m.get(2, 0));
        assert!(!m.get(1, 1));
        assert_eq!(m.pairs(), vec![(0, 2)]);
        assert!(m.row_is_clear(1));
        assert_eq!(ConflictMatrix::new(1).to_rows(), vec![vec![0]]);
    }
}
