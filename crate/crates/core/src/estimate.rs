//! Mean-difference estimation under the basic model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{mean, normal_critical, sample_variance, student_two_sided_p};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("arm {arm} has no observations")]
    EmptyArm { arm: u8 },
    #[error("arm {arm} has {n} observation(s); at least {needed} required")]
    TooFewObservations { arm: u8, n: usize, needed: usize },
    #[error("confidence level {0} is outside (0, 1)")]
    BadLevel(f64),
    #[error("treated fraction {0} is outside (0, 1)")]
    BadAlpha(f64),
    #[error("{0}")]
    Invalid(String),
}

/// How an [`Estimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Mean difference with a normal-quantile interval.
    MeanDifferenceNormal,
    /// Average of per-individual mean differences.
    AggregateTau,
    /// Per-time average of per-individual g-formula contrasts.
    AggregateGformula,
    /// Cross-sectional treated-vs-untreated contrast at one time.
    ParallelContrast,
    /// Bootstrap standard deviation with a normal interval.
    BootstrapNormal,
    /// Bootstrap percentile interval.
    BootstrapPercentile,
}

/// Point estimate with standard error and interval.
///
/// For population aggregates `n_treated` and `n_control` both hold the
/// number of individuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub point: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n_treated: usize,
    pub n_control: usize,
    pub method: Method,
}

impl Estimate {
    /// `point +- z * se` with the standard normal quantile.
    pub fn normal(point: f64, se: f64, level: f64, n_treated: usize, n_control: usize, method: Method) -> Result<Self, EstimateError> {
        check_level(level)?;
        let half = normal_critical(level) * se;
        Ok(Self { point, se, ci_low: point - half, ci_high: point + half, level, n_treated, n_control, method })
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

pub(crate) fn check_level(level: f64) -> Result<(), EstimateError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(EstimateError::BadLevel(level));
    }
    Ok(())
}

/// Mean difference, or a point-only result when an arm is too small for
/// a variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Summary {
    Interval(Estimate),
    PointOnly { point: f64, n_treated: usize, n_control: usize },
}

impl Summary {
    pub fn point(&self) -> f64 {
        match self {
            Summary::Interval(e) => e.point,
            Summary::PointOnly { point, .. } => *point,
        }
    }
}

fn arms(traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    (traj.arm_values(1), traj.arm_values(0))
}

fn require(arm: u8, values: &[f64], needed: usize) -> Result<(), EstimateError> {
    match values.len() {
        0 => Err(EstimateError::EmptyArm { arm }),
        n if n < needed => Err(EstimateError::TooFewObservations { arm, n, needed }),
        _ => Ok(()),
    }
}

/// Mean outcome under treatment minus mean outcome under comparator.
pub fn tau_hat(traj: &Trajectory) -> Result<f64, EstimateError> {
    let (y1, y0) = arms(traj);
    require(1, &y1, 1)?;
    require(0, &y0, 1)?;
    Ok(mean(&y1) - mean(&y0))
}

/// Unbiased sample variances `(s1^2, s0^2)`.
pub fn arm_variances(traj: &Trajectory) -> Result<(f64, f64), EstimateError> {
    let (y1, y0) = arms(traj);
    require(1, &y1, 2)?;
    require(0, &y0, 2)?;
    Ok((sample_variance(&y1), sample_variance(&y0)))
}

pub fn tau_hat_ci(traj: &Trajectory, level: f64) -> Result<Estimate, EstimateError> {
    check_level(level)?;
    let (y1, y0) = arms(traj);
    require(1, &y1, 2)?;
    require(0, &y0, 2)?;
    let (n1, n0) = (y1.len() as f64, y0.len() as f64);
    let se = (sample_variance(&y1) / n1 + sample_variance(&y0) / n0).sqrt();
    Estimate::normal(mean(&y1) - mean(&y0), se, level, y1.len(), y0.len(), Method::MeanDifferenceNormal)
}

pub fn summarize(traj: &Trajectory, level: f64) -> Result<Summary, EstimateError> {
    let (y1, y0) = arms(traj);
    if y1.len() == 1 || y0.len() == 1 {
        return Ok(Summary::PointOnly { point: tau_hat(traj)?, n_treated: y1.len(), n_control: y0.len() });
    }
    tau_hat_ci(traj, level).map(Summary::Interval)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch two-sample t-test (unequal variances), two-sided.
pub fn t_test(traj: &Trajectory) -> Result<TTest, EstimateError> {
    let (y1, y0) = arms(traj);
    require(1, &y1, 2)?;
    require(0, &y0, 2)?;
    let (n1, n0) = (y1.len() as f64, y0.len() as f64);
    let (v1, v0) = (sample_variance(&y1) / n1, sample_variance(&y0) / n0);
    let diff = mean(&y1) - mean(&y0);
    let se2 = v1 + v0;
    if se2 == 0.0 {
        // both arms constant: either identical (no evidence) or perfectly separated
        let (statistic, p_value) = if diff == 0.0 { (0.0, 1.0) } else { (diff.signum() * f64::INFINITY, 0.0) };
        return Ok(TTest { statistic, df: n1 + n0 - 2.0, p_value });
    }
    let statistic = diff / se2.sqrt();
    let df = se2 * se2 / (v1 * v1 / (n1 - 1.0) + v0 * v0 / (n0 - 1.0));
    Ok(TTest { statistic, df, p_value: student_two_sided_p(statistic, df) })
}

/// Design-level approximation `sigma2 / (t * alpha * (1 - alpha))` to
/// `Var(tau_hat)` under equal arm variances.
pub fn approx_variance(sigma2: f64, t: usize, alpha: f64) -> Result<f64, EstimateError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EstimateError::BadAlpha(alpha));
    }
    if t == 0 {
        return Err(EstimateError::Invalid("t must be at least 1".into()));
    }
    if !(sigma2 >= 0.0) {
        return Err(EstimateError::Invalid(format!("variance {sigma2} is negative")));
    }
    Ok(sigma2 / (t as f64 * alpha * (1.0 - alpha)))
}

/// Two 1-based times of one arm whose outcomes differ by more than `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub arm: u8,
    pub k1: usize,
    pub k2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantNoiseCheck {
    pub passed: bool,
    pub witnesses: Vec<Witness>,
}

/// Passes iff outcomes within each arm agree to `tol`. A failing arm is
/// witnessed by its minimum and maximum, which is the widest pair.
pub fn constant_noise_check(traj: &Trajectory, tol: f64) -> ConstantNoiseCheck {
    let mut witnesses = Vec::new();
    for arm in [0u8, 1] {
        let mut lo: Option<(usize, f64)> = None;
        let mut hi: Option<(usize, f64)> = None;
        for (k, y) in traj.arm(arm) {
            if lo.is_none_or(|(_, v)| y < v) {
                lo = Some((k, y));
            }
            if hi.is_none_or(|(_, v)| y > v) {
                hi = Some((k, y));
            }
        }
        if let (Some((k_lo, v_lo)), Some((k_hi, v_hi))) = (lo, hi) {
            if v_hi - v_lo > tol {
                witnesses.push(Witness { arm, k1: k_lo.min(k_hi), k2: k_lo.max(k_hi) });
            }
        }
    }
    ConstantNoiseCheck { passed: witnesses.is_empty(), witnesses }
}
