use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::generate_states;
use super::{ConditionalModel, GfError, Start};
use crate::numeric::CompensatedSum;
use crate::seeding::rng_for;

/// Replicates per parallel work unit. Fixed so that the reduction order,
/// and therefore every bit of the result, is independent of thread count.
const CHUNK: usize = 256;

/// Two forced treatment sequences to contrast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McContrast {
    pub treated: Vec<u8>,
    pub control: Vec<u8>,
}

impl McContrast {
    /// Always-treated versus never-treated over `t` time points.
    pub fn always(t: usize) -> Self {
        Self { treated: vec![1; t], control: vec![0; t] }
    }
}

/// Per-time Monte Carlo mean contrast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    /// 1-based times covered by `mean` and `se`.
    pub times: Vec<usize>,
    pub mean: Vec<f64>,
    /// Standard deviation of the per-replicate contrast over `sqrt(reps)`.
    pub se: Vec<f64>,
    pub reps: usize,
}

/// Simulate both regimes `reps` times from the fitted model and average
/// the per-time outcome differences.
///
/// Both arms of a replicate share one random stream, which leaves each
/// arm's distribution unchanged and reduces the variance of the contrast.
pub fn gcomputation_mc<M: ConditionalModel + ?Sized>(
    model: &M,
    contrast: &McContrast,
    start: &Start,
    reps: usize,
    seed: u64,
) -> Result<McResult, GfError> {
    let t = contrast.treated.len();
    if reps == 0 {
        return Err(GfError::Invalid("at least one replicate is required".into()));
    }
    if contrast.control.len() != t || t <= start.offset() {
        return Err(GfError::Invalid("contrast sequences must share a length beyond the start".into()));
    }
    let first = start.offset() + 1;
    let width = t - start.offset();
    let one = |r: usize| -> Result<Vec<f64>, GfError> {
        let run = |seq: &[u8]| -> Result<Vec<f64>, GfError> {
            let mut y = Vec::with_capacity(width);
            let mut rng = rng_for(seed, r as u64);
            generate_states(model, seq, start, &mut rng, |k, s| {
                if k >= first {
                    y.push(s.y);
                }
            })?;
            Ok(y)
        };
        let y1 = run(&contrast.treated)?;
        let y0 = run(&contrast.control)?;
        Ok(y1.iter().zip(&y0).map(|(a, b)| a - b).collect())
    };
    let chunks: Vec<(Vec<CompensatedSum>, Vec<CompensatedSum>)> = (0..reps.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = vec![CompensatedSum::new(); width];
            let mut s2 = vec![CompensatedSum::new(); width];
            for r in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                for (i, d) in one(r)?.into_iter().enumerate() {
                    s[i].add(d);
                    s2[i].add(d * d);
                }
            }
            Ok((s, s2))
        })
        .collect::<Result<_, GfError>>()?;
    let mut sum = vec![CompensatedSum::new(); width];
    let mut sum2 = vec![CompensatedSum::new(); width];
    for (s, s2) in &chunks {
        for i in 0..width {
            sum[i].add(s[i].value());
            sum2[i].add(s2[i].value());
        }
    }
    let n = reps as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s.value() / n).collect();
    let se = sum2
        .iter()
        .zip(&mean)
        .map(|(s2, m)| {
            if reps < 2 {
                return 0.0;
            }
            let var = ((s2.value() - n * m * m) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(McResult { times: (first..=t).collect(), mean, se, reps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gformula::{ucate_series, CategoricalModel, CovariateRule, GKernels, GaussianLinearModel, StartState, State};
    use crate::scm::{DiscreteScm, InitialState, InitialTreatment, Variant};

    fn relaxed() -> DiscreteScm {
        DiscreteScm::builder(Variant::Relaxed)
            .y_values(vec![0.0, 1.0, 3.0])
            .l_values(vec![0.0, 1.0])
            .initial(InitialState { y: 0, l: 0, a: InitialTreatment::MatchFirst })
            .u_level(
                "u",
                1.0,
                |k| {
                    let p = 0.1 + 0.15 * k.a as f64 + 0.1 * k.a_prev as f64 + 0.05 * k.y_prev as f64 + 0.1 * k.l as f64;
                    vec![0.6 - p, 0.4, p]
                },
                |k| {
                    let p = 0.3 + 0.3 * k.a as f64 - 0.1 * k.y_prev as f64;
                    vec![1.0 - p, p]
                },
            )
            .build()
            .unwrap()
    }

    #[test]
    fn agrees_with_exact_contrast() {
        let scm = relaxed();
        let model = CategoricalModel::from_scm(&scm, 0);
        let start = Start::Initial { state: State { y: 0.0, l: vec![0.0] }, a0: InitialTreatment::MatchFirst };
        let mc = gcomputation_mc(&model, &McContrast::always(8), &start, 20_000, 11).unwrap();
        let exact = ucate_series(&GKernels::from_scm(&scm, 0), 8, StartState { y: 0, l: 0 }).unwrap();
        for i in 0..8 {
            assert!((mc.mean[i] - exact[i]).abs() <= 4.0 * mc.se[i] + 1e-12, "k={}: {} vs {}", i + 1, mc.mean[i], exact[i]);
        }
    }

    #[test]
    fn deterministic_model_is_exact_after_one_rep() {
        let m = GaussianLinearModel::new(vec![], vec![0.0, 0.7, 0.2, 0.5], 0.0, vec![]).unwrap();
        let start = Start::Observed(State { y: 1.0, l: vec![] });
        let mc = gcomputation_mc(&m, &McContrast::always(4), &start, 1, 3).unwrap();
        assert_eq!(mc.times, vec![2, 3, 4]);
        // Y_k(1) - Y_k(0) follows d_k = 0.9 + 0.5 d_{k-1} with d_1 = 0 (time 1 is the shared observation)
        let mut d = 0.0;
        for got in &mc.mean {
            d = 0.9 + 0.5 * d;
            assert!((got - d).abs() < 1e-12);
        }
    }

    #[test]
    fn null_gaussian_model_has_no_effect() {
        let rules = vec![CovariateRule::Stochastic { name: "z".into(), period: 1 }];
        let m = GaussianLinearModel::new(rules, vec![0.1, 0.0, 0.0, 0.3, 0.2, 0.1], 1.0, vec![Some((vec![0.0, 0.0, 0.1, 0.5], 1.0))]).unwrap();
        let start = Start::Observed(State { y: 0.0, l: vec![0.0] });
        let mc = gcomputation_mc(&m, &McContrast::always(10), &start, 2000, 5).unwrap();
        for (m, s) in mc.mean.iter().zip(&mc.se) {
            assert!(m.abs() <= 3.0 * s + 1e-12);
        }
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let scm = relaxed();
        let model = CategoricalModel::from_scm(&scm, 0);
        let start = Start::Initial { state: State { y: 0.0, l: vec![0.0] }, a0: InitialTreatment::MatchFirst };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| gcomputation_mc(&model, &McContrast::always(6), &start, 3000, 9).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
