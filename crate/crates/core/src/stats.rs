//! Two-sample Kolmogorov–Smirnov and paired Wilcoxon signed-rank tests.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Whether the p-value is exact rather than asymptotic.
    pub exact: bool,
}

/// Largest `min(n, m)` for which the KS p-value is computed exactly.
pub const KS_EXACT_LIMIT: usize = 10;
/// Largest number of non-zero differences for an exact Wilcoxon p-value.
pub const WILCOXON_EXACT_LIMIT: usize = 20;

const EPS: f64 = 1e-12;

fn check(sample: &[f64]) -> Result<(), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Pooled sample sorted, as (value, from_a) pairs grouped by equal value.
fn tie_groups(a: &[f64], b: &[f64]) -> Vec<(usize, usize)> {
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut last = f64::NAN;
    for (v, from_a) in pooled {
        if groups.is_empty() || v != last {
            groups.push((0, 0));
            last = v;
        }
        let g = groups.last_mut().unwrap();
        if from_a {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// `P(D >= d)` under random relabelling of the pooled sample, honouring
/// ties: the ECDF difference is only observed after whole tie groups.
fn ks_exact_p(n: usize, m: usize, d: f64, group_ends: &[usize]) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let mut ends = group_ends.iter().peekable();
    // prob[i] = probability of being at (i, step - i) without having crossed yet.
    let mut prob = vec![0.0f64; n + 1];
    prob[0] = 1.0;
    let mut crossed = 0.0;
    for step in 0..n + m {
        let mut next = vec![0.0f64; n + 1];
        for i in 0..=n.min(step) {
            let j = step - i;
            if j > m || prob[i] == 0.0 {
                continue;
            }
            let left = (n + m - step) as f64;
            if i < n {
                next[i + 1] += prob[i] * (n - i) as f64 / left;
            }
            if j < m {
                next[i] += prob[i] * (m - j) as f64 / left;
            }
        }
        prob = next;
        let pos = step + 1;
        if ends.peek() == Some(&&pos) {
            ends.next();
            for i in 0..=n.min(pos) {
                let j = pos - i;
                if j <= m && (i as f64 / nf - j as f64 / mf).abs() >= d - EPS {
                    crossed += prob[i];
                    prob[i] = 0.0;
                }
            }
        }
    }
    crossed.clamp(0.0, 1.0)
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test, two-sided.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check(a)?;
    check(b)?;
    let (n, m) = (a.len(), b.len());
    let groups = tie_groups(a, b);
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut ends = Vec::with_capacity(groups.len());
    for (ga, gb) in &groups {
        i += ga;
        j += gb;
        ends.push(i + j);
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    if d <= EPS {
        return Ok(TestResult { statistic: 0.0, p_value: 1.0, exact: true });
    }
    if n.min(m) <= KS_EXACT_LIMIT {
        return Ok(TestResult { statistic: d, p_value: ks_exact_p(n, m, d, &ends), exact: true });
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let p = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    Ok(TestResult { statistic: d, p_value: p, exact: false })
}

/// Mid-ranks of `values` (1-based), plus the tie group sizes.
fn mid_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Wilcoxon signed-rank test on paired samples, two-sided.
///
/// Zero differences are dropped and tied magnitudes get mid-ranks. The
/// reported statistic is `W = min(W+, W-)`, so all-positive differences
/// give `W = 0`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    check(a)?;
    check(b)?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(TestResult { statistic: 0.0, p_value: 1.0, exact: true });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = mid_ranks(&magnitudes);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = w_plus.min(total - w_plus);

    if n <= WILCOXON_EXACT_LIMIT {
        // Mid-ranks are multiples of 1/2, so doubled ranks are integers.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let sum2: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; sum2 + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for t in (r..=sum2).rev() {
                counts[t] += counts[t - r];
            }
        }
        let w2 = (2.0 * w).round() as usize;
        let hits: f64 = counts
            .iter()
            .enumerate()
            .filter(|(t, _)| (*t).min(sum2 - t) <= w2)
            .map(|(_, c)| c)
            .sum();
        let p = hits / 2f64.powi(n as i32);
        return Ok(TestResult { statistic: w, p_value: p.min(1.0), exact: true });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_adj: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_adj;
    let z = (w - mean) / var.sqrt();
    let p = erfc(-z / std::f64::consts::SQRT_2).min(1.0);
    Ok(TestResult { statistic: w, p_value: p, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical() {
        let a = [1.0, 2.0, 2.0, 7.0];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn ks_disjoint() {
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]).unwrap().statistic, 1.0);
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [6.0, 7.0, 8.0, 9.0, 10.0];
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!((r.p_value - 2.0 / 252.0).abs() < 1e-12);
    }

    #[test]
    fn ks_errors() {
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(StatsError::EmptySample));
        assert_eq!(ks_two_sample(&[f64::NAN], &[1.0]), Err(StatsError::NonFinite));
    }

    #[test]
    fn ks_asymptotic_branch() {
        let a: Vec<f64> = (0..40).map(f64::from).collect();
        let b: Vec<f64> = (0..40).map(|v| f64::from(v) + 20.0).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!(!r.exact);
        assert_eq!(r.statistic, 0.5);
        assert!(r.p_value > 0.0 && r.p_value < 1e-3);
    }

    #[test]
    fn wilcoxon_examples() {
        let a = [3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [1.0, 1.0, 1.0, 1.0, 1.0];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.0625).abs() < 1e-12);
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap().p_value, 1.0);
        assert_eq!(wilcoxon_signed_rank(&[2.0], &[1.0]).unwrap().p_value, 1.0);
        assert!(matches!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(1, 2))));
    }

    #[test]
    fn wilcoxon_normal_branch() {
        let a: Vec<f64> = (0..30).map(|v| f64::from(v) + 1.0).collect();
        let b = vec![0.0; 30];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(!r.exact);
        assert!(r.p_value < 1e-4);
    }

    #[test]
    fn kolmogorov_series() {
        assert!((kolmogorov_q(1.0) - 0.269_999_6).abs() < 1e-6);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }
}
