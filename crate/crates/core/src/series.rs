//! Population-level effects from a series of N-of-1 trials.

use thiserror::Error;

use crate::estimate::{Estimate, EstimateError, Method};
use crate::numeric::{mean, sample_variance};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("{n} individual(s); at least 2 are required")]
    TooFew { n: usize },
    #[error("series {index} has {len} entries, expected {expected}")]
    MismatchedGrid { index: usize, len: usize, expected: usize },
    #[error("at time {k} no individual has treatment {arm} (or too few to estimate a variance)")]
    OneSided { k: usize, arm: u8 },
    #[error("trajectory {index} is shorter than time {k}")]
    BadTime { k: usize, index: usize },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

fn mean_estimate(values: &[f64], level: f64, method: Method) -> Result<Estimate, SeriesError> {
    let n = values.len();
    if n < 2 {
        return Err(SeriesError::TooFew { n });
    }
    let se = (sample_variance(values) / n as f64).sqrt();
    Ok(Estimate::normal(mean(values), se, level, n, n, method)?)
}

/// Mean of per-individual mean differences with a between-individual
/// standard error.
pub fn aggregate_tau(taus: &[f64], level: f64) -> Result<Estimate, SeriesError> {
    mean_estimate(taus, level, Method::AggregateTau)
}

/// Per-time mean of per-individual contrast series on a shared grid.
pub fn aggregate_gformula(series: &[Vec<f64>], level: f64) -> Result<Vec<Estimate>, SeriesError> {
    if series.len() < 2 {
        return Err(SeriesError::TooFew { n: series.len() });
    }
    let width = series[0].len();
    for (index, s) in series.iter().enumerate() {
        if s.len() != width {
            return Err(SeriesError::MismatchedGrid { index, len: s.len(), expected: width });
        }
    }
    (0..width)
        .map(|i| {
            let col: Vec<f64> = series.iter().map(|s| s[i]).collect();
            mean_estimate(&col, level, Method::AggregateGformula)
        })
        .collect()
}

/// Cross-sectional contrast at time `k` (1-based): mean outcome of the
/// individuals treated at `k` minus that of the untreated, with an
/// unequal-variance normal interval. Needs no stationarity and ignores
/// covariates.
pub fn parallel_contrast(trajs: &[Trajectory], k: usize, level: f64) -> Result<Estimate, SeriesError> {
    let mut arms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (index, tr) in trajs.iter().enumerate() {
        if k == 0 || tr.len() < k {
            return Err(SeriesError::BadTime { k, index });
        }
        arms[tr.treatment(k) as usize].push(tr.outcome(k));
    }
    for arm in [0u8, 1] {
        if arms[arm as usize].len() < 2 {
            return Err(SeriesError::OneSided { k, arm });
        }
    }
    let [y0, y1] = &arms;
    let se = (sample_variance(y1) / y1.len() as f64 + sample_variance(y0) / y0.len() as f64).sqrt();
    Ok(Estimate::normal(mean(y1) - mean(y0), se, level, y1.len(), y0.len(), Method::ParallelContrast)?)
}
