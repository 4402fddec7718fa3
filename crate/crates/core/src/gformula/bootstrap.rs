use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use super::{generate, ConditionalModel, GfError, Start};
use crate::estimate::{check_level, Estimate, Method};
use crate::numeric::{mean, normal_critical};
use crate::seeding::rng_for;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// Point estimate plus or minus a normal quantile times the bootstrap SD.
    Normal,
    /// Empirical quantiles of the replicates.
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub interval: IntervalKind,
    pub seed: u64,
    /// Abort when more than this fraction of replicates fail.
    pub max_failure_rate: f64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, level: f64, seed: u64) -> Self {
        Self { replicates, level, interval: IntervalKind::Normal, seed, max_failure_rate: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// One estimate per entry of the point series.
    pub estimates: Vec<Estimate>,
    pub succeeded: usize,
    pub failed: usize,
    /// Up to five distinct failure messages.
    pub failure_examples: Vec<String>,
}

/// Parametric bootstrap under a fixed treatment sequence: simulate
/// datasets from `model`, re-run `estimator` on each, and summarize the
/// spread around `point`.
///
/// Replicates on which the estimator fails are excluded and counted.
pub fn parametric_bootstrap<M, E>(
    model: &M,
    treatments: &[u8],
    start: &Start,
    point: &[f64],
    estimator: E,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult, GfError>
where
    M: ConditionalModel + ?Sized,
    E: Fn(&Trajectory) -> Result<Vec<f64>, GfError> + Sync,
{
    if cfg.replicates < 2 {
        return Err(GfError::Invalid("at least two bootstrap replicates are required".into()));
    }
    check_level(cfg.level).map_err(|e| GfError::Invalid(e.to_string()))?;
    let draws: Vec<Result<Vec<f64>, GfError>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(cfg.seed, b as u64);
            let data = generate(model, treatments, start, &mut rng)?;
            let est = estimator(&data)?;
            if est.len() != point.len() {
                return Err(GfError::Invalid(format!("replicate produced {} values, expected {}", est.len(), point.len())));
            }
            Ok(est)
        })
        .collect();
    let mut ok = Vec::new();
    let mut failure_examples: Vec<String> = Vec::new();
    let mut failed = 0;
    for d in draws {
        match d {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed += 1;
                let msg = e.to_string();
                if failure_examples.len() < 5 && !failure_examples.contains(&msg) {
                    failure_examples.push(msg);
                }
            }
        }
    }
    if failed as f64 > cfg.max_failure_rate * cfg.replicates as f64 || ok.len() < 2 {
        return Err(GfError::BootstrapAborted {
            failures: failed,
            total: cfg.replicates,
            first: failure_examples.first().cloned().unwrap_or_default(),
        });
    }
    let n1 = treatments.iter().filter(|&&a| a == 1).count();
    let n0 = treatments.len() - n1;
    let z = normal_critical(cfg.level);
    let estimates = (0..point.len())
        .map(|i| {
            let col: Vec<f64> = ok.iter().map(|v| v[i]).collect();
            let m = mean(&col);
            let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (col.len() - 1) as f64).sqrt();
            match cfg.interval {
                IntervalKind::Normal => Estimate {
                    point: point[i],
                    se: sd,
                    ci_low: point[i] - z * sd,
                    ci_high: point[i] + z * sd,
                    level: cfg.level,
                    n_treated: n1,
                    n_control: n0,
                    method: Method::BootstrapNormal,
                },
                IntervalKind::Percentile => {
                    let mut data = Data::new(col);
                    Estimate {
                        point: point[i],
                        se: sd,
                        ci_low: data.quantile((1.0 - cfg.level) / 2.0),
                        ci_high: data.quantile((1.0 + cfg.level) / 2.0),
                        level: cfg.level,
                        n_treated: n1,
                        n_control: n0,
                        method: Method::BootstrapPercentile,
                    }
                }
            }
        })
        .collect();
    Ok(BootstrapResult { estimates, succeeded: ok.len(), failed, failure_examples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gformula::{gcomputation_mc, GaussianLinearModel, McContrast, State};

    #[test]
    fn zero_noise_gives_zero_width() {
        let m = GaussianLinearModel::new(vec![], vec![0.2, 0.5, 0.1, 0.3], 0.0, vec![]).unwrap();
        let start = Start::Observed(State { y: 0.0, l: vec![] });
        let a = crate::schedule::Schedule::blocks(2, 2).unwrap().expand(12);
        let est = |tr: &Trajectory| {
            let fit = GaussianLinearModel::fit(tr, vec![])?;
            Ok(gcomputation_mc(&fit, &McContrast::always(tr.len()), &Start::observed(tr), 1, 0)?.mean)
        };
        let point = est(&generate(&m, &a, &start, &mut rng_for(0, 0)).unwrap()).unwrap();
        let r = parametric_bootstrap(&m, &a, &start, &point, est, &BootstrapConfig::new(20, 0.95, 1)).unwrap();
        assert_eq!(r.failed, 0);
        for e in &r.estimates {
            assert!(e.width().abs() < 1e-9, "{e:?}");
        }
    }

    #[test]
    fn aborts_when_most_replicates_fail() {
        let m = GaussianLinearModel::new(vec![], vec![0.0, 0.5, 0.0, 0.0], 1.0, vec![]).unwrap();
        let start = Start::Observed(State { y: 0.0, l: vec![] });
        let a = vec![0, 1, 0, 1];
        let est = |tr: &Trajectory| -> Result<Vec<f64>, GfError> {
            if tr.outcome(2) > -10.0 { Err(GfError::Invalid("forced".into())) } else { Ok(vec![0.0]) }
        };
        let err = parametric_bootstrap(&m, &a, &start, &[0.0], est, &BootstrapConfig::new(10, 0.95, 1)).unwrap_err();
        assert!(matches!(err, GfError::BootstrapAborted { failures: 10, total: 10, .. }));
    }
}
