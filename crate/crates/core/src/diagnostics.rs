//! Within-arm stationarity checks for the basic model.
//!
//! Under strong stationarity the outcome distribution within an arm does
//! not move with time, so each test looks for drift among the outcomes of
//! one arm taken in time order. They are standard approximations rather
//! than tests with guaranteed finite-sample level for arbitrary outcome
//! domains.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{normal_two_sided_p, student_two_sided_p};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticError {
    #[error("arm {arm} has {n} observation(s); the {test} needs at least {needed}")]
    TooFew { test: &'static str, arm: u8, n: usize, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub arm: u8,
    pub n: usize,
    /// OLS slope of the outcome on the 1-based time index.
    pub slope: f64,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTest {
    pub arm: u8,
    pub n: usize,
    /// Mann-Kendall S.
    pub s: f64,
    /// Tie-corrected variance of S under no trend.
    pub variance: f64,
    /// Continuity-corrected normal score.
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitTest {
    pub arm: u8,
    pub n_first: usize,
    pub n_second: usize,
    /// Two-sample Kolmogorov-Smirnov distance.
    pub d: f64,
    pub p_value: f64,
    /// Whether `p_value` is the exact permutation probability (given ties)
    /// rather than the asymptotic Kolmogorov tail.
    pub exact: bool,
}

fn arm_values(traj: &Trajectory, arm: u8, test: &'static str, needed: usize) -> Result<Vec<(usize, f64)>, DiagnosticError> {
    let v: Vec<(usize, f64)> = traj.arm(arm).collect();
    if v.len() < needed {
        return Err(DiagnosticError::TooFew { test, arm, n: v.len(), needed });
    }
    Ok(v)
}

/// Regress the arm's outcomes on time and t-test a zero slope (df n - 2).
pub fn stationarity_trend_test(traj: &Trajectory, arm: u8) -> Result<TrendTest, DiagnosticError> {
    let v = arm_values(traj, arm, "trend test", 3)?;
    let n = v.len() as f64;
    let kbar = v.iter().map(|&(k, _)| k as f64).sum::<f64>() / n;
    let ybar = v.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = v.iter().map(|&(k, _)| (k as f64 - kbar).powi(2)).sum();
    let sxy: f64 = v.iter().map(|&(k, y)| (k as f64 - kbar) * (y - ybar)).sum();
    let df = n - 2.0;
    let slope = sxy / sxx;
    let ssr: f64 = v.iter().map(|&(k, y)| (y - ybar - slope * (k as f64 - kbar)).powi(2)).sum();
    let syy: f64 = v.iter().map(|&(_, y)| (y - ybar).powi(2)).sum();
    let (statistic, p_value) = if syy == 0.0 {
        (0.0, 1.0)
    } else if ssr <= syy * 1e-28 {
        (slope.signum() * f64::INFINITY, 0.0)
    } else {
        let t = slope / (ssr / df / sxx).sqrt();
        (t, student_two_sided_p(t, df))
    };
    Ok(TrendTest { arm, n: v.len(), slope, statistic, df, p_value })
}

/// Mann-Kendall trend test with the tie-corrected variance and a
/// continuity-corrected normal approximation.
pub fn stationarity_rank_test(traj: &Trajectory, arm: u8) -> Result<RankTest, DiagnosticError> {
    let v = arm_values(traj, arm, "rank test", 4)?;
    let y: Vec<f64> = v.iter().map(|&(_, y)| y).collect();
    let n = y.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match y[j].partial_cmp(&y[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let g = (j - i + 1) as f64;
        ties += g * (g - 1.0) * (2.0 * g + 5.0);
        i = j + 1;
    }
    let nf = n as f64;
    let variance = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
    let z = if s == 0 || variance <= 0.0 {
        0.0
    } else {
        (s as f64 - (s.signum() as f64)) / variance.sqrt()
    };
    let p_value = if variance <= 0.0 { 1.0 } else { normal_two_sided_p(z) };
    Ok(RankTest { arm, n, s: s as f64, variance, z, p_value })
}

/// Below this many lattice cells the exact permutation p-value is used.
const EXACT_KS_CELLS: usize = 1_000_000;

/// Kolmogorov-Smirnov comparison of the first and second halves of the
/// arm's outcomes (the first half gets the smaller share when odd).
pub fn split_distribution_check(traj: &Trajectory, arm: u8) -> Result<SplitTest, DiagnosticError> {
    let v = arm_values(traj, arm, "split check", 8)?;
    let y: Vec<f64> = v.iter().map(|&(_, y)| y).collect();
    let (first, second) = y.split_at(y.len() / 2);
    let (d, p_value, exact) = ks_two_sample(first, second);
    Ok(SplitTest { arm, n_first: first.len(), n_second: second.len(), d, p_value, exact })
}

/// Two-sample KS distance and two-sided p-value `P(D >= d)`.
///
/// The exact probability is conditional on the observed tie pattern: the
/// pooled sample is a uniformly random split, and the ECDF gap can only be
/// observed where the pooled sorted values change.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> (f64, f64, bool) {
    let (m, n) = (x.len(), y.len());
    let mut pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    // boundary[s] is true when the first s pooled values end a tie group
    let total = m + n;
    let mut boundary = vec![false; total + 1];
    boundary[total] = true;
    for s in 1..total {
        boundary[s] = pooled[s - 1].0 < pooled[s].0;
    }
    // gap measured in units of 1 / (m n): |i n - j m|
    let (mut i, mut j, mut dmax) = (0i64, 0i64, 0i64);
    for (s, &(_, from_x)) in pooled.iter().enumerate() {
        if from_x {
            i += 1;
        } else {
            j += 1;
        }
        if boundary[s + 1] {
            dmax = dmax.max((i * n as i64 - j * m as i64).abs());
        }
    }
    let d = dmax as f64 / (m * n) as f64;
    if dmax == 0 {
        return (0.0, 1.0, true);
    }
    if (m + 1) * (n + 1) <= EXACT_KS_CELLS {
        (d, ks_exact_tail(m, n, dmax, &boundary), true)
    } else {
        let ne = (m * n) as f64 / total as f64;
        (d, kolmogorov_tail(ne.sqrt() * d), false)
    }
}

/// Probability that a uniformly random interleaving of m x's and n y's
/// stays strictly inside the band `|i n - j m| < dmax` at every boundary.
fn ks_exact_tail(m: usize, n: usize, dmax: i64, boundary: &[bool]) -> f64 {
    // prob[j] for the current i; walk in order of s = i + j by rows
    let inside = |i: usize, j: usize| !boundary[i + j] || ((i * n) as i64 - (j * m) as i64).abs() < dmax;
    let mut prob = vec![vec![0.0f64; n + 1]; m + 1];
    prob[0][0] = 1.0;
    for s in 0..m + n {
        let lo = s.saturating_sub(n);
        for i in lo..=s.min(m) {
            let j = s - i;
            let p = prob[i][j];
            if p == 0.0 {
                continue;
            }
            let left = (m + n - s) as f64;
            if i < m && inside(i + 1, j) {
                prob[i + 1][j] += p * (m - i) as f64 / left;
            }
            if j < n && inside(i, j + 1) {
                prob[i][j + 1] += p * (n - j) as f64 / left;
            }
        }
    }
    (1.0 - prob[m][n]).clamp(0.0, 1.0)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
