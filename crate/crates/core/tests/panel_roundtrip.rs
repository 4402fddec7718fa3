use nof1_core::gformula::{fit_kernels, Domains, Origin};
use nof1_core::panel::{default_map_for, read_panel_file, write_panel_file};
use nof1_core::scm::{simulate, Regime};
use nof1_core::Schedule;

#[test]
fn simulated_panel_round_trips_through_a_file() {
    let scm = nof1_core::verify::three_level_relaxed();
    let tr = simulate(&scm, 0, &Regime::Natural(Schedule::blocks(3, 3).unwrap()), 120, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    write_panel_file(&path, &tr).unwrap();
    let back = read_panel_file(&path, &default_map_for(&tr)).unwrap();
    assert_eq!(back.trajectory.treatments(), tr.treatments());
    assert_eq!(back.trajectory.outcomes(), tr.outcomes());
    assert_eq!(back.trajectory.covariate("L"), tr.covariate("L"));
    let domains = Domains::infer(&tr, Some("L")).unwrap();
    let a = fit_kernels(&tr, &domains, Some("L"), Origin::FirstObservation, 1.0).unwrap();
    let b = fit_kernels(&back.trajectory, &domains, Some("L"), Origin::FirstObservation, 1.0).unwrap();
    assert_eq!(a, b);
}
