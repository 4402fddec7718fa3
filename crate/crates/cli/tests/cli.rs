use std::path::Path;
use std::process::{Command, Output};

use nof1_core::panel::{default_map_for, read_panel_file};
use nof1_core::scm::config::model_from_table;
use nof1_core::scm::{simulate_with_rng, Regime};
use nof1_core::seeding::rng_for;
use serde_json::Value;

const RELAXED: &str = r#"
[model]
variant = "relaxed"
[model.y_domain]
values = [0.0, 1.0]
[model.l_domain]
values = [0.0, 1.0]
[model.initial]
y = 0
l = 0
a = "match"
[[model.u]]
name = "typical"
weight = 1.0
l_kernel = [[[[0.7, 0.3], [0.4, 0.6]], [[0.6, 0.4], [0.3, 0.7]]], [[[0.5, 0.5], [0.3, 0.7]], [[0.4, 0.6], [0.2, 0.8]]]]
y_kernel = [[[[[[0.8, 0.2], [0.7, 0.3]], [[0.7, 0.3], [0.6, 0.4]]], [[[0.6, 0.4], [0.5, 0.5]], [[0.5, 0.5], [0.4, 0.6]]]], [[[[0.6, 0.4], [0.5, 0.5]], [[0.5, 0.5], [0.4, 0.6]]], [[[0.4, 0.6], [0.3, 0.7]], [[0.3, 0.7], [0.2, 0.8]]]]], [[[[[0.7, 0.3], [0.6, 0.4]], [[0.6, 0.4], [0.5, 0.5]]], [[[0.5, 0.5], [0.4, 0.6]], [[0.4, 0.6], [0.3, 0.7]]]], [[[[0.5, 0.5], [0.4, 0.6]], [[0.4, 0.6], [0.3, 0.7]]], [[[0.3, 0.7], [0.2, 0.8]], [[0.2, 0.8], [0.1, 0.9]]]]]]
"#;

const NULL_ADDITIVE: &str = r#"
[model]
variant = "additive"
beta = 0.0
u_value = 1.0
noise_sd = 1.0
"#;

fn nof1(cmd: &str, config: &Path, out: &Path, env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nof1"));
    c.arg(cmd).arg("--config").arg(config).arg("--out").arg(out);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn simulate_config(dir: &Path, model: &str, individuals: usize, schedule: &str) -> std::path::PathBuf {
    let text = format!("seed = 42\nt = 48\nindividuals = {individuals}\nregime = {{ natural = \"{schedule}\" }}\n{model}");
    write(dir, "sim.toml", &text)
}

#[test]
fn simulate_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), RELAXED, 3, "000000111111");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(nof1("simulate", &cfg, &a, &[]).status.success());
    assert!(nof1("simulate", &cfg, &b, &[("RAYON_NUM_THREADS", "3")]).status.success());
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    assert_eq!(std::fs::read(a.join("manifest.csv")).unwrap(), std::fs::read(b.join("manifest.csv")).unwrap());

    // the written panel is exactly the library's draw for individual 0
    let table: toml::Table = std::fs::read_to_string(&cfg).unwrap().parse().unwrap();
    let model = model_from_table(table["model"].as_table().unwrap(), "model").unwrap();
    let regime = Regime::Natural("000000111111".parse().unwrap());
    let mut rng = rng_for(42, 0);
    let u = nof1_core::scm::draw_u(&[1.0], &mut rng);
    let expected = simulate_with_rng(&model, u, &regime, 48, &mut rng).unwrap();
    let back = read_panel_file(&a.join("panels/individual_0001.csv"), &default_map_for(&expected)).unwrap();
    assert_eq!(back.trajectory.treatments(), expected.treatments());
    assert_eq!(back.trajectory.outcomes(), expected.outcomes());
    assert_eq!(back.trajectory.covariate("L"), expected.covariate("L"));
}

#[test]
fn null_estimate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), NULL_ADDITIVE, 1, "01");
    let sim = dir.path().join("sim");
    assert!(nof1("simulate", &cfg, &sim, &[]).status.success());
    let est = write(dir.path(), "est.toml", "[data]\npath = \"sim/panels/individual_0001.csv\"\n");
    let runs: Vec<Value> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("est{i}"));
            let o = nof1("estimate", &est, &out, &[]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            report(&out)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let p = runs[0]["results"]["t_test"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(runs[0]["results"]["tau_hat"]["n_treated"], 24);
}

#[test]
fn gformula_monte_carlo_matches_the_forward_pass() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("seed = 9\nsource = \"model\"\nmethod = \"mc\"\nreps = 10000\nk_max = 10\n{RELAXED}");
    let cfg = write(dir.path(), "gf.toml", &text);
    let out = dir.path().join("gf");
    let o = nof1("gformula", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = report(&out)["results"]["effects"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 10);
    for r in rows {
        let (p, o, se) = (r["point"].as_f64().unwrap(), r["oracle"].as_f64().unwrap(), r["se"].as_f64().unwrap());
        assert!((p - o).abs() <= 3.0 * se, "{r}");
    }
}

#[test]
fn gformula_on_a_panel_reports_k_two_to_t() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), RELAXED, 1, "000000111111");
    assert!(nof1("simulate", &cfg, &dir.path().join("sim"), &[]).status.success());
    let text = r#"
seed = 3
source = "data"
covariate = "L"
smoothing = 0.5
[data]
path = "sim/panels/individual_0001.csv"
[data.columns]
covariates = ["L"]
[bootstrap]
replicates = 100
"#;
    let gf = write(dir.path(), "gf.toml", text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(nof1("gformula", &gf, &a, &[("RAYON_NUM_THREADS", "1")]).status.success());
    assert!(nof1("gformula", &gf, &b, &[("RAYON_NUM_THREADS", "4")]).status.success());
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    let table = std::fs::read_to_string(a.join("effects.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 1 + 47);
    assert!(lines[1].starts_with("2,") && lines[47].starts_with("48,"));
    assert!(std::fs::read_to_string(a.join("effects.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn exit_codes_distinguish_bad_input_from_failed_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let gap = write(dir.path(), "gap.csv", "time,treatment,outcome\n1,0,0.5\n3,1,0.75\n");
    let cfg = write(dir.path(), "est.toml", &format!("[data]\npath = {:?}\n", gap));
    let o = nof1("estimate", &cfg, &dir.path().join("o1"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));

    let one_arm = write(dir.path(), "one.csv", "time,treatment,outcome\n1,1,0.5\n2,1,0.75\n3,1,0.1\n");
    let cfg = write(dir.path(), "est2.toml", &format!("[data]\npath = {:?}\n", one_arm));
    assert_eq!(nof1("estimate", &cfg, &dir.path().join("o2"), &[]).status.code(), Some(2));

    let cfg = write(dir.path(), "bad.toml", "levle = 0.9\n[data]\npath = \"x.csv\"\n");
    let o = nof1("estimate", &cfg, &dir.path().join("o3"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("levle"));

    let cfg = write(dir.path(), "noseed.toml", &format!("t = 4\nregime = {{ always = 1 }}\n{NULL_ADDITIVE}"));
    let o = nof1("simulate", &cfg, &dir.path().join("o4"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn one_sided_series_gives_an_empty_table_and_no_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), NULL_ADDITIVE, 4, "01");
    assert!(nof1("simulate", &cfg, &dir.path().join("sim"), &[]).status.success());
    let agg = write(dir.path(), "agg.toml", "manifest = \"sim/manifest.csv\"\nmethod = \"parallel\"\n");
    let out = dir.path().join("agg");
    let o = nof1("aggregate", &agg, &out, &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(std::fs::read_to_string(out.join("effects.csv")).unwrap().lines().count(), 1);
    assert!(!out.join("effects.svg").exists());

    let tau = write(dir.path(), "tau.toml", "manifest = \"sim/manifest.csv\"\nmethod = \"tau\"\n");
    let out = dir.path().join("tau");
    assert!(nof1("aggregate", &tau, &out, &[]).status.success());
    assert_eq!(report(&out)["results"]["per_individual"].as_array().unwrap().len(), 4);
}

#[test]
fn manifest_schedule_must_match_the_panel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), NULL_ADDITIVE, 2, "01");
    assert!(nof1("simulate", &cfg, &dir.path().join("sim"), &[]).status.success());
    let m = std::fs::read_to_string(dir.path().join("sim/manifest.csv")).unwrap().replacen(",01,", ",10,", 1);
    std::fs::write(dir.path().join("sim/manifest.csv"), m).unwrap();
    let agg = write(dir.path(), "agg.toml", "manifest = \"sim/manifest.csv\"\nmethod = \"tau\"\n");
    let o = nof1("aggregate", &agg, &dir.path().join("agg"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("do not follow schedule"));
}

#[test]
fn validate_prints_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.toml", "seed = 7\ncriteria = [1, 6]\n");
    let out = dir.path().join("v");
    let o = nof1("validate", &cfg, &out, &[("NOF1_ACNE_DIR", "")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("criterion 1 SKIP")));
    assert!(text.lines().any(|l| l.starts_with("criterion 6 PASS")));
    assert_eq!(report(&out)["results"]["criteria"].as_array().unwrap().len(), 2);
    assert!(!std::fs::read_to_string(out.join("report.json")).unwrap().contains("seconds"));
}
