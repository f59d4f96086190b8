//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slotplan::conflict::TimedPath;
use slotplan::io::parse_instance;
use slotplan::model::{Corridor, Stop};
use slotplan::ProblemInstance;

pub fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(name)
}

pub fn read_asset(name: &str) -> String {
    std::fs::read_to_string(asset(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn example_instance() -> ProblemInstance {
    parse_instance(&read_asset("madrid-barcelona.json")).unwrap()
}

/// A train's stops as (km, arrival, departure).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub stops: Vec<(f64, f64, f64)>,
}

impl Trajectory {
    pub fn from_path(p: &TimedPath) -> Self {
        let stops = p
            .positions()
            .iter()
            .zip(p.arrivals())
            .zip(p.departures())
            .map(|((&km, &a), &d)| (km, a, d))
            .collect();
        Self { stops }
    }

    fn start(&self) -> f64 {
        self.stops[0].2
    }

    fn end(&self) -> f64 {
        self.stops.last().unwrap().1
    }

    /// Position at time `t` (clamped to the journey).
    pub fn position_at(&self, t: f64) -> f64 {
        for w in self.stops.windows(2) {
            let (x0, a0, d0) = w[0];
            let (x1, a1, _) = w[1];
            if t <= a0 {
                return x0;
            }
            if t <= d0 {
                return x0;
            }
            if t <= a1 {
                return x0 + (x1 - x0) * (t - d0) / (a1 - d0);
            }
        }
        self.stops.last().unwrap().0
    }

    /// Time at a position off the stops, or one side of a stop.
    pub fn time_at(&self, x: f64, departure_side: bool) -> f64 {
        for &(km, a, d) in &self.stops {
            if km == x {
                return if departure_side { d } else { a };
            }
        }
        for w in self.stops.windows(2) {
            let (x0, _, d0) = w[0];
            let (x1, a1, _) = w[1];
            if x > x0 && x < x1 {
                return d0 + (a1 - d0) * (x - x0) / (x1 - x0);
            }
        }
        panic!("position {x} outside trajectory");
    }
}

/// Dense-time check: samples both trains every 0.1 min, adds every stop
/// position, and requires one train to stay at least `2 * omega` ahead of
/// the other at every sampled position of the shared stretch.
pub fn dense_conflict(a: &Trajectory, b: &Trajectory, omega: f64) -> bool {
    let lo = a.stops[0].0.max(b.stops[0].0);
    let hi = a.stops.last().unwrap().0.min(b.stops.last().unwrap().0);
    if hi <= lo {
        return false;
    }
    let mut xs: Vec<f64> = Vec::new();
    for tr in [a, b] {
        let mut t = tr.start();
        while t <= tr.end() {
            xs.push(tr.position_at(t));
            t += 0.1;
        }
        xs.extend(tr.stops.iter().map(|s| s.0));
    }
    xs.push(lo);
    xs.push(hi);
    xs.retain(|&x| x >= lo && x <= hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut gaps = Vec::new();
    for &x in &xs {
        if x > lo {
            gaps.push(a.time_at(x, false) - b.time_at(x, false));
        }
        if x < hi {
            gaps.push(a.time_at(x, true) - b.time_at(x, true));
        }
    }
    let headway = 2.0 * omega;
    let all_ahead = gaps.iter().all(|&g| g >= headway);
    let all_behind = gaps.iter().all(|&g| g <= -headway);
    !(all_ahead || all_behind)
}

/// Random service on the corridor: stop subset, cruising speed 150-300 km/h,
/// real-valued dwells up to 6 min, origin departure within `window`.
pub fn random_stops(rng: &mut ChaCha8Rng, corridor: &Corridor, window: (f64, f64)) -> Vec<Stop> {
    let st = corridor.stations();
    let m = st.len();
    let o = rng.gen_range(0..m - 1);
    let t_end = rng.gen_range(o + 1..m);
    let mut chosen = vec![o];
    chosen.extend((o + 1..t_end).filter(|_| rng.gen_bool(0.5)));
    chosen.push(t_end);
    let speed = rng.gen_range(150.0..300.0);
    let mut t = rng.gen_range(window.0..window.1);
    let mut stops = vec![Stop::new(st[o].id.clone(), t, t)];
    for j in 1..chosen.len() {
        t += (st[chosen[j]].position - st[chosen[j - 1]].position) / speed * 60.0;
        let dwell = if j + 1 < chosen.len() { rng.gen_range(0.0..6.0) } else { 0.0 };
        stops.push(Stop::new(st[chosen[j]].id.clone(), t, t + dwell));
        t += dwell;
    }
    stops
}

pub fn path_of(corridor: &Corridor, stops: &[Stop]) -> TimedPath {
    let pos = stops.iter().map(|s| corridor.position_of(&s.station_id).unwrap()).collect();
    TimedPath::new(pos, stops).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two-sided KS p-value by enumerating every split of the pooled sample.
pub fn ks_permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = a.len();
    let total = pooled.len();
    let d_obs = ks_d(a, b);
    let (mut hits, mut count) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, &v) in pooled.iter().enumerate() {
            if mask >> i & 1 == 1 {
                x.push(v)
            } else {
                y.push(v)
            }
        }
        count += 1;
        if ks_d(&x, &y) >= d_obs - 1e-12 {
            hits += 1;
        }
    }
    hits as f64 / count as f64
}

pub fn ks_d(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], v: f64| s.iter().filter(|&&x| x <= v).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&v| (ecdf(a, v) - ecdf(b, v)).abs()).fold(0.0, f64::max)
}

/// Two-sided Wilcoxon p-value by enumerating all sign patterns of the
/// non-zero differences; statistic `min(W+, W-)` with mid-ranks.
pub fn wilcoxon_enumeration_p(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return (0.0, 1.0);
    }
    let mags: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = mags
        .iter()
        .map(|&m| {
            let below = mags.iter().filter(|&&x| x < m).count() as f64;
            let equal = mags.iter().filter(|&&x| x == m).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let stat = |signs: &dyn Fn(usize) -> bool| {
        let wp: f64 = (0..d.len()).filter(|&i| signs(i)).map(|i| ranks[i]).sum();
        wp.min(total - wp)
    };
    let w_obs = stat(&|i| d[i] > 0.0);
    let n = d.len();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        if stat(&|i| mask >> i & 1 == 1) <= w_obs + 1e-9 {
            hits += 1;
        }
    }
    (w_obs, hits as f64 / (1u64 << n) as f64)
}

/// Best conflict-free subset by plain enumeration.
pub fn best_subset(conflicts: &[(usize, usize)], revenues: &[f64], eligible: &[bool]) -> f64 {
    let n = revenues.len();
    let mut best = 0.0f64;
    for mask in 0u64..(1 << n) {
        let on = |i: usize| mask >> i & 1 == 1;
        if (0..n).any(|i| on(i) && !eligible[i]) {
            continue;
        }
        if conflicts.iter().any(|&(i, j)| on(i) && on(j)) {
            continue;
        }
        best = best.max((0..n).filter(|&i| on(i)).map(|i| revenues[i]).sum());
    }
    best
}
