use nof1_core::oracle::{enumerate_mean, random_scm, RandomScmSpec};
use nof1_core::scm::*;
use nof1_core::seeding::{rng_for, rng_from_seed};
use nof1_core::{Schedule, Trajectory};
use proptest::prelude::*;
use rayon::prelude::*;

fn bernoulli_basic(p1: f64, p0: f64) -> DiscreteScm {
    DiscreteScm::builder(Variant::Basic)
        .y_values(vec![0.0, 1.0])
        .u_level("u", 1.0, move |k| if k.a == 1 { vec![1.0 - p1, p1] } else { vec![1.0 - p0, p0] }, |_| vec![])
        .build()
        .unwrap()
}

#[test]
fn treated_draws_follow_the_kernel_entry() {
    let scm = bernoulli_basic(0.7, 0.2);
    let tr = simulate(&scm, 0, &Regime::Always(1), 100_000, 4).unwrap();
    let freq = tr.outcomes().iter().sum::<f64>() / tr.len() as f64;
    assert!((freq - 0.7).abs() <= 0.005, "{freq}");
}

#[test]
fn point_mass_and_constant_examples() {
    let scm = bernoulli_basic(1.0, 0.0);
    let tr = simulate(&scm, 0, &Regime::Natural("10".parse().unwrap()), 4, 0).unwrap();
    assert_eq!(tr.outcomes(), &[1.0, 0.0, 1.0, 0.0]);
    let add = AdditiveScm::constant(1.0, 0.0);
    assert_eq!(simulate(&add, 0, &Regime::Always(1), 5, 0).unwrap().outcomes(), &[1.0; 5]);
    for k in 1..6 {
        assert_eq!(exact_counterfactual_mean(&scm, 0, k, 1).unwrap(), 1.0);
        assert_eq!(exact_counterfactual_mean(&scm, 0, k, 0).unwrap(), 0.0);
    }
}

#[test]
fn natural_regime_is_consistent_with_its_explicit_sequence() {
    let spec = RandomScmSpec::new(Variant::Relaxed, 3, 2);
    let scm = random_scm(&mut rng_from_seed(3), &spec).unwrap();
    let z: Schedule = "0011010".parse().unwrap();
    for seed in 0..20 {
        let noise = scm.draw_noise(30, &mut rng_from_seed(seed));
        let natural = scm.realize(0, &Regime::Natural(z.clone()).treatments(30).unwrap(), &noise).unwrap();
        let explicit = scm.realize(0, &z.expand(30), &noise).unwrap();
        assert_eq!(natural, explicit);
    }
    assert_eq!(simulate(&scm, 0, &Regime::Natural(z.clone()), 30, 8).unwrap(), simulate(&scm, 0, &Regime::Natural(z), 30, 8).unwrap());
}

#[test]
fn basic_model_has_no_carryover_and_is_stationary() {
    let mut rng = rng_from_seed(11);
    for _ in 0..10 {
        let scm = random_scm(&mut rng, &RandomScmSpec::new(Variant::Basic, 3, 1)).unwrap();
        let reference = [exact_counterfactual_mean(&scm, 0, 1, 0).unwrap(), exact_counterfactual_mean(&scm, 0, 1, 1).unwrap()];
        for t in 1..=4 {
            for bits in 0..1u32 << t {
                let regime: Vec<u8> = (0..t).map(|i| (bits >> i & 1) as u8).collect();
                let means = scm.mean_under(0, &regime).unwrap();
                for (k, m) in means.iter().enumerate() {
                    assert!((m - reference[regime[k] as usize]).abs() < 1e-14, "regime {regime:?} k {}", k + 1);
                }
            }
        }
    }
}

#[test]
fn dp_matches_path_enumeration_at_k_four() {
    let mut rng = rng_from_seed(21);
    for variant in [Variant::Relaxed, Variant::TimeTrend] {
        for _ in 0..5 {
            let scm = random_scm(&mut rng, &RandomScmSpec { initial_a: InitialTreatment::Fixed(1), ..RandomScmSpec::new(variant, 2, 2) }).unwrap();
            for x in [0u8, 1] {
                let dp = exact_counterfactual_mean(&scm, 0, 4, x).unwrap();
                assert!((dp - enumerate_mean(&scm, 0, &[x; 4])).abs() < 1e-12);
            }
            // arbitrary sequences too
            let seq = [1u8, 0, 0, 1, 1];
            let dp = scm.mean_under(0, &seq).unwrap()[4];
            assert!((dp - enumerate_mean(&scm, 0, &seq)).abs() < 1e-12);
        }
    }
}

#[test]
fn carryover_makes_the_ucate_vary_with_time() {
    let scm = nof1_core::verify::three_level_relaxed();
    let series = true_ucate_series(&scm, 0, 4).unwrap();
    assert!((series[0] - series[3]).abs() > 1e-3, "{series:?}");
}

#[test]
fn averaged_ice_matches_the_ucate() {
    let scm = nof1_core::verify::three_level_relaxed();
    let k = 4;
    let truth = true_ucate(&scm, 0, k).unwrap();
    let ice: Vec<f64> =
        (0..100_000u64).into_par_iter().map(|i| ice_given_noise(&scm, 0, &scm.draw_noise(k, &mut rng_for(5, i)), k).unwrap()).collect();
    let m = nof1_core::numeric::mean(&ice);
    let se = (nof1_core::numeric::sample_variance(&ice) / ice.len() as f64).sqrt();
    assert!((m - truth).abs() <= 3.0 * se, "{m} vs {truth} (se {se})");
}

#[test]
fn ace_matches_a_monte_carlo_population() {
    let scm = random_scm(&mut rng_from_seed(8), &RandomScmSpec { n_u: 3, ..RandomScmSpec::new(Variant::Basic, 3, 1) }).unwrap();
    let weights = scm.u_weights();
    let ace = true_ace(&scm, 1).unwrap();
    let contrasts: Vec<f64> = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(9, i);
            let v: f64 = rand::Rng::random(&mut rng);
            let mut acc = 0.0;
            let u = weights.iter().position(|w| {
                acc += w;
                v < acc
            });
            ice_given_noise(&scm, u.unwrap_or(weights.len() - 1), &scm.draw_noise(1, &mut rng), 1).unwrap()
        })
        .collect();
    let m = nof1_core::numeric::mean(&contrasts);
    let se = (nof1_core::numeric::sample_variance(&contrasts) / contrasts.len() as f64).sqrt();
    assert!((m - ace).abs() <= 3.0 * se, "{m} vs {ace} (se {se})");
}

#[test]
fn homogeneous_levels_make_ace_equal_each_ucate() {
    let row = |k: nof1_core::kernel::ParentKey| if k.a == 1 { vec![0.2, 0.5, 0.3] } else { vec![0.4, 0.4, 0.2] };
    let scm = DiscreteScm::builder(Variant::Basic)
        .y_values(vec![0.0, 1.0, 2.0])
        .u_level("a", 0.3, row, |_| vec![])
        .u_level("b", 0.7, row, |_| vec![])
        .build()
        .unwrap();
    let ace = true_ace(&scm, 2).unwrap();
    for u in 0..2 {
        assert!((true_ucate(&scm, u, 2).unwrap() - ace).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), t in 1usize..40) {
        let scm = nof1_core::verify::two_level_relaxed();
        let z: Schedule = "0110".parse().unwrap();
        let a: Trajectory = simulate(&scm, 1, &Regime::Natural(z.clone()), t, seed).unwrap();
        let b = simulate(&scm, 1, &Regime::Natural(z), t, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
