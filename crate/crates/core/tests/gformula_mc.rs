use nof1_core::gformula::*;
use nof1_core::oracle::enumerate_theta;
use nof1_core::scm::*;
use nof1_core::seeding::derive_seed;
use nof1_core::verify::three_level_relaxed;
use nof1_core::Schedule;
use rayon::prelude::*;

#[test]
fn gcomputation_agrees_with_the_exact_ucate() {
    let scm = three_level_relaxed();
    let model = CategoricalModel::from_scm(&scm, 0);
    let t = 10;
    let exact = true_ucate_series(&scm, 0, t).unwrap();
    let start = Start::Initial { state: State { y: 0.0, l: vec![0.0] }, a0: InitialTreatment::MatchFirst };
    let within = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let mc = gcomputation_mc(&model, &McContrast::always(t), &start, 2_000, derive_seed(31, s)).unwrap();
            (mc.mean[t - 1] - exact[t - 1]).abs() <= 3.0 * mc.se[t - 1]
        })
        .count();
    assert!(within >= 99, "{within} of 100 seeds within 3 se");
}

#[test]
fn true_kernels_reproduce_the_structural_means() {
    let scm = three_level_relaxed();
    let kernels = GKernels::from_scm(&scm, 0);
    let start = StartState { y: 0, l: 0 };
    let exact = true_ucate_series(&scm, 0, 6).unwrap();
    let dp = ucate_series(&kernels, 6, start).unwrap();
    for k in 1..=6 {
        assert!((dp[k - 1] - exact[k - 1]).abs() < 1e-12);
        let brute = enumerate_theta(&kernels, k, 1, start) - enumerate_theta(&kernels, k, 0, start);
        assert!((brute - dp[k - 1]).abs() < 1e-12);
    }
}

#[test]
fn fitted_kernels_survive_a_dump_round_trip() {
    let scm = three_level_relaxed();
    let tr = simulate(&scm, 0, &Regime::Natural(Schedule::blocks(4, 4).unwrap()), 400, 12).unwrap();
    let domains = Domains::infer(&tr, Some("L")).unwrap();
    let fitted = fit_kernels(&tr, &domains, Some("L"), Origin::FirstObservation, 0.5).unwrap();
    let back = GKernels::from_toml(&fitted.to_toml()).unwrap();
    assert_eq!(back, fitted);
    let start = StartState::first_observation(&tr, &domains, Some("L")).unwrap();
    assert_eq!(ucate_series(&back, 30, start).unwrap(), ucate_series(&fitted, 30, start).unwrap());
}

#[test]
fn basic_model_embeds_in_the_relaxed_family() {
    let row = |a: usize| if a == 1 { vec![0.2, 0.3, 0.5] } else { vec![0.5, 0.3, 0.2] };
    let basic = DiscreteScm::builder(Variant::Basic).y_values(vec![0.0, 1.0, 2.0]).u_level("u", 1.0, move |k| row(k.a), |_| vec![]).build().unwrap();
    let relaxed = DiscreteScm::builder(Variant::Relaxed)
        .y_values(vec![0.0, 1.0, 2.0])
        .l_values(vec![0.0])
        .u_level("u", 1.0, move |k| row(k.a), |_| vec![1.0])
        .build()
        .unwrap();
    assert_eq!(true_ucate_series(&basic, 0, 5).unwrap(), true_ucate_series(&relaxed, 0, 5).unwrap());
    let z = Schedule::blocks(2, 3).unwrap().expand(50);
    for seed in 0..10 {
        let noise = relaxed.draw_noise(50, &mut nof1_core::seeding::rng_from_seed(seed));
        let a = basic.realize(0, &z, &noise).unwrap();
        let b = relaxed.realize(0, &z, &noise).unwrap();
        assert_eq!(a.outcomes(), b.outcomes());
    }
    // the g-formula on relaxed kernels gives the basic contrast at every k
    let kr = GKernels::from_scm(&relaxed, 0);
    let series = ucate_series(&kr, 5, StartState { y: 0, l: 0 }).unwrap();
    assert!(series.iter().all(|v| (v - 0.6).abs() < 1e-12), "{series:?}");
}
