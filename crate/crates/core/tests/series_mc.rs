use nof1_core::estimate::tau_hat;
use nof1_core::gformula::{fit_kernels, ucate_series, Domains, Origin, StartState};
use nof1_core::kernel::ParentKey;
use nof1_core::numeric::mean;
use nof1_core::scm::*;
use nof1_core::seeding::rng_for;
use nof1_core::series::{aggregate_gformula, aggregate_tau, parallel_contrast};
use nof1_core::{Schedule, Trajectory};
use rand::Rng;
use rayon::prelude::*;

fn symmetric_two_level() -> DiscreteScm {
    DiscreteScm::builder(Variant::Basic)
        .y_values(vec![0.0, 1.0])
        .u_level("up", 0.5, |k| if k.a == 1 { vec![0.2, 0.8] } else { vec![0.8, 0.2] }, |_| vec![])
        .u_level("down", 0.5, |k| if k.a == 1 { vec![0.8, 0.2] } else { vec![0.2, 0.8] }, |_| vec![])
        .build()
        .unwrap()
}

fn series_of<M: StructuralModel>(model: &M, weights: &[f64], z: &Regime, n: u64, t: usize, seed: u64) -> Vec<Trajectory> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let v: f64 = rng.random();
            let mut acc = 0.0;
            let u = weights.iter().take_while(|w| {
                acc += *w;
                v >= acc
            });
            let u = u.count().min(weights.len() - 1);
            simulate_with_rng(model, u, z, t, &mut rng).unwrap()
        })
        .collect()
}

#[test]
fn symmetric_effects_average_to_zero() {
    let scm = symmetric_two_level();
    assert_eq!(true_ace(&scm, 1).unwrap(), 0.0);
    let trajs = series_of(&scm, &scm.u_weights(), &Regime::Natural("01".parse().unwrap()), 2_000, 40, 1);
    let taus: Vec<f64> = trajs.iter().map(|t| tau_hat(t).unwrap()).collect();
    let agg = aggregate_tau(&taus, 0.95).unwrap();
    assert!(agg.point.abs() <= 3.0 * agg.se, "{agg:?}");
    // individual effects are far from zero
    assert!(mean(&taus.iter().map(|t| t.abs()).collect::<Vec<_>>()) > 0.4);
}

#[test]
fn null_relaxed_series_has_a_null_gformula_aggregate() {
    let null = DiscreteScm::builder(Variant::Relaxed)
        .y_values(vec![0.0, 1.0])
        .l_values(vec![0.0, 1.0])
        .u_level("u", 1.0, |k| {
            let p = 0.3 + 0.3 * k.y_prev as f64 + 0.1 * k.l as f64;
            vec![1.0 - p, p]
        }, |k| {
            let p = 0.4 + 0.2 * k.l_prev as f64;
            vec![1.0 - p, p]
        })
        .build()
        .unwrap();
    let t = 40;
    let trajs = series_of(&null, &[1.0], &Regime::Natural(Schedule::blocks(4, 4).unwrap()), 400, t, 2);
    let domains = Domains::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    let series: Vec<Vec<f64>> = trajs
        .iter()
        .map(|tr| {
            let k = fit_kernels(tr, &domains, Some("L"), Origin::FirstObservation, 0.5).unwrap();
            let start = StartState::first_observation(tr, &domains, Some("L")).unwrap();
            ucate_series(&k, 10, start).unwrap()
        })
        .collect();
    let est = aggregate_gformula(&series, 0.95).unwrap();
    // smoothing shrinks toward uniform rows, a bias of order 1/t
    for e in &est {
        assert!(e.point.abs() <= 3.0 * e.se + 0.02, "{e:?}");
    }
}

/// Outcome probability drifts with time through the lagged outcome, and
/// treatment adds a constant.
fn time_trend_model() -> DiscreteScm {
    DiscreteScm::builder(Variant::TimeTrend)
        .y_values(vec![0.0, 1.0])
        .l_values(vec![0.0, 1.0])
        .initial(InitialState { y: 0, l: 0, a: InitialTreatment::Fixed(0) })
        .u_level("u", 1.0, |k: ParentKey| {
            let p = 0.2 + 0.2 * k.a as f64 + 0.3 * k.l as f64 + 0.1 * k.a_prev as f64;
            vec![1.0 - p, p]
        }, |k: ParentKey| {
            let p = 0.2 + 0.5 * k.l_prev as f64 + 0.1 * k.y_prev as f64;
            vec![1.0 - p, p]
        })
        .build()
        .unwrap()
}

#[test]
fn parallel_contrast_recovers_the_point_effect_under_a_trend() {
    let scm = time_trend_model();
    let (n, t) = (10_000u64, 6);
    let treated: Vec<u8> = "101".parse::<Schedule>().unwrap().expand(t);
    let control: Vec<u8> = "010".parse::<Schedule>().unwrap().expand(t);
    // half the population on each schedule
    let trajs: Vec<Trajectory> = (0..n)
        .into_par_iter()
        .map(|i| {
            let seq = if i % 2 == 0 { &treated } else { &control };
            simulate_with_rng(&scm, 0, &Regime::Explicit(seq.clone()), t, &mut rng_for(3, i)).unwrap()
        })
        .collect();
    for k in 1..=t {
        let e = parallel_contrast(&trajs, k, 0.95).unwrap();
        let m1 = scm.mean_under(0, &treated).unwrap()[k - 1];
        let m0 = scm.mean_under(0, &control).unwrap()[k - 1];
        let (hi, lo) = if treated[k - 1] == 1 { (m1, m0) } else { (m0, m1) };
        assert!((e.point - (hi - lo)).abs() <= 3.0 * e.se, "k = {k}: {} vs {}", e.point, hi - lo);
    }
}

/// Test-only model outside the stationary families: the control-arm mean
/// rises with time, so the within-person mean difference is biased while a
/// same-time contrast is not.
struct Drifting;

impl StructuralModel for Drifting {
    fn u_count(&self) -> usize {
        1
    }

    fn draw_noise(&self, t: usize, rng: &mut dyn rand::RngCore) -> NoiseRecord {
        AdditiveScm::gaussian(0.0, 0.0, 1.0).unwrap().draw_noise(t, rng)
    }

    fn realize(&self, _u: usize, treatments: &[u8], noise: &NoiseRecord) -> Result<Trajectory, ScmError> {
        let base = AdditiveScm::gaussian(0.5, 0.0, 1.0).unwrap().realize(0, treatments, noise)?;
        let t = treatments.len() as f64;
        let y = base.outcomes().iter().enumerate().map(|(i, y)| y + 2.0 * i as f64 / t).collect();
        Ok(Trajectory::new(treatments.to_vec(), y).unwrap())
    }
}

#[test]
fn drift_biases_the_mean_difference_but_not_the_parallel_contrast() {
    let t = 20;
    // treated first then control, so the drift lowers the difference
    let first_half = Schedule::blocks(10, 10).unwrap();
    let trajs = series_of(&Drifting, &[1.0], &Regime::Natural(first_half.clone()), 4_000, t, 4);
    let taus: Vec<f64> = trajs.iter().map(|tr| tau_hat(tr).unwrap()).collect();
    let agg = aggregate_tau(&taus, 0.95).unwrap();
    assert!((agg.point - 0.5).abs() > 10.0 * agg.se, "{agg:?}");

    let mixed: Vec<Trajectory> = (0..4_000u64)
        .into_par_iter()
        .map(|i| {
            let z = if i % 2 == 0 { first_half.expand(t) } else { first_half.expand(t).iter().map(|a| 1 - a).collect() };
            simulate_with_rng(&Drifting, 0, &Regime::Explicit(z), t, &mut rng_for(5, i)).unwrap()
        })
        .collect();
    for k in [1, 10, 20] {
        let e = parallel_contrast(&mixed, k, 0.95).unwrap();
        assert!((e.point - 0.5).abs() <= 3.0 * e.se, "k = {k}: {e:?}");
    }
}
