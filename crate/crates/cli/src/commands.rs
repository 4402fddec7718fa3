use std::path::Path;

use nof1_core::diagnostics::{split_distribution_check, stationarity_rank_test, stationarity_trend_test};
use nof1_core::estimate::{arm_variances, constant_noise_check, t_test, tau_hat, tau_hat_ci, Estimate};
use nof1_core::gformula::{
    fit_kernels, gcomputation_mc, parametric_bootstrap, ucate_series, BootstrapConfig, BootstrapResult, CategoricalModel,
    Domains, GKernels, GaussianLinearModel, McContrast, Origin, Start, StartState, State,
};
use nof1_core::kernel::ParentMask;
use nof1_core::panel::{read_panel_file, write_panel_file, Panel};
use nof1_core::scm::config::{model_from_table, AnyScm};
use nof1_core::scm::{draw_u, simulate_with_rng, true_ace, true_ucate, ExactModel, InitialTreatment, Regime, StructuralModel, Variant};
use nof1_core::seeding::{derive_seed, rng_for};
use nof1_core::series::{aggregate_gformula, aggregate_tau, parallel_contrast, SeriesError};
use nof1_core::verify::{run_criterion, Status, VerifyConfig, CRITERIA};
use nof1_core::{Schedule, Trajectory};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::failure::{Classify, Failure};
use crate::output::{EffectRow, Run};

pub fn run(name: &str, config: &Path, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    match name {
        "simulate" => simulate(config, seed, out),
        "estimate" => estimate(config, seed, out),
        "gformula" => gformula(config, seed, out),
        "diagnose" => diagnose(config, seed, out),
        "aggregate" => aggregate(config, seed, out),
        "validate" => validate(config, seed, out),
        _ => Err(Failure::invalid(format!("unknown subcommand {name:?}"))),
    }
}

fn check_level(level: f64) -> Result<(), Failure> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Failure::invalid(format!("level must lie in (0, 1), got {level}")))
    }
}

fn model_table<'a, T>(cfg: &'a Loaded<T>) -> Result<&'a toml::Table, Failure> {
    cfg.raw.get("model").and_then(|v| v.as_table()).ok_or_else(|| Failure::invalid("missing [model] table"))
}

fn ingest<T>(cfg: &Loaded<T>, data: &DataSection) -> Result<Panel, Failure> {
    read_panel_file(&cfg.resolve(&data.path), &data.columns).invalid(&format!("ingest {}", data.path.display()))
}

fn data_block(data: &DataSection, panel: &Panel) -> Value {
    let tr = &panel.trajectory;
    let n1 = tr.treatments().iter().filter(|&&a| a == 1).count();
    json!({
        "file": data.path,
        "t": tr.len(),
        "n_treated": n1,
        "n_control": tr.len() - n1,
        "coding": panel.coding,
    })
}

fn simulate(path: &Path, flag: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg: Loaded<SimulateConfig> = load(path)?;
    let b = &cfg.body;
    let seed = resolve_seed(flag, b.seed, true)?.unwrap_or_default();
    let model = model_from_table(model_table(&cfg)?, "model").invalid("model")?;
    if b.individuals == 0 {
        return Err(Failure::invalid("individuals must be at least 1"));
    }
    b.regime.treatments(b.t).invalid("regime")?;
    let names: Vec<String> = (0..model.u_count()).map(|u| model.u_name(u)).collect();
    let fixed_u = match &b.u {
        Some(name) => Some(names.iter().position(|n| n == name).ok_or_else(|| Failure::invalid(format!("u: no latent level named {name:?}")))?),
        None => None,
    };
    let weights = model.u_weights();
    let run = Run::start("simulate", Some(seed), cfg.sha256.clone(), out)?;

    let trajs: Vec<(usize, Trajectory)> = (0..b.individuals as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let u = fixed_u.unwrap_or_else(|| draw_u(&weights, &mut rng));
            simulate_with_rng(&model, u, &b.regime, b.t, &mut rng).map(|tr| (u, tr))
        })
        .collect::<Result<_, _>>()
        .estimation("simulate")?;

    std::fs::create_dir_all(run.path("panels")).invalid("creating panels directory")?;
    let schedule = match &b.regime {
        Regime::Natural(z) => z.to_string(),
        _ => String::new(),
    };
    let mut manifest = csv::Writer::from_writer(Vec::new());
    manifest.write_record(["id", "file", "schedule", "u"]).invalid("manifest")?;
    let mut panels = Vec::new();
    for (i, (u, tr)) in trajs.iter().enumerate() {
        let id = format!("individual_{:04}", i + 1);
        let file = format!("panels/{id}.csv");
        write_panel_file(&run.path(&file), tr).invalid(&format!("writing {file}"))?;
        manifest.write_record([id.as_str(), file.as_str(), schedule.as_str(), names[*u].as_str()]).invalid("manifest")?;
        panels.push(json!({ "id": id, "file": file, "u": names[*u], "tau_hat": tau_hat(tr).ok() }));
    }
    let bytes = manifest.into_inner().map_err(|e| Failure::invalid(format!("manifest: {e}")))?;
    crate::output::write(&run.path("manifest.csv"), &bytes)?;

    let truth: Vec<Value> = (0..names.len())
        .map(|u| Ok(json!({ "u": names[u], "weight": weights[u], "ucate_at_t": true_ucate(&model, u, b.t)? })))
        .collect::<Result<_, nof1_core::ScmError>>()
        .estimation("exact effects")?;
    let kind = match &model {
        AnyScm::Discrete(m) => m.variant().name().to_string(),
        AnyScm::Additive(_) => "additive".into(),
    };
    let results = json!({
        "model": kind,
        "t": b.t,
        "regime": b.regime,
        "individuals": b.individuals,
        "truth": truth,
        "ace_at_t": true_ace(&model, b.t).estimation("exact effects")?,
        "panels": panels,
    });
    println!("wrote {} panel(s) and manifest.csv to {}", trajs.len(), out.display());
    run.finish(results, None)
}

fn estimate(path: &Path, flag: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg: Loaded<EstimateConfig> = load(path)?;
    let b = &cfg.body;
    check_level(b.level)?;
    let seed = resolve_seed(flag, b.seed, false)?;
    let panel = ingest(&cfg, &b.data)?;
    let tr = &panel.trajectory;
    let run = Run::start("estimate", seed, cfg.sha256.clone(), out)?;
    let est = tau_hat_ci(tr, b.level).estimation("mean difference")?;
    let test = t_test(tr).estimation("t-test")?;
    let (v1, v0) = arm_variances(tr).estimation("arm variances")?;
    println!(
        "tau_hat = {:.4} ({:.4}, {:.4}) at level {}; Welch t = {:.3}, df = {:.1}, p = {:.4}",
        est.point, est.ci_low, est.ci_high, b.level, test.statistic, test.df, test.p_value
    );
    let results = json!({
        "data": data_block(&b.data, &panel),
        "tau_hat": est,
        "t_test": test,
        "arm_variances": { "treated": v1, "control": v0 },
    });
    run.finish(results, None)
}

fn diagnose(path: &Path, flag: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg: Loaded<DiagnoseConfig> = load(path)?;
    let b = &cfg.body;
    let seed = resolve_seed(flag, b.seed, false)?;
    let panel = ingest(&cfg, &b.data)?;
    let tr = &panel.trajectory;
    let run = Run::start("diagnose", seed, cfg.sha256.clone(), out)?;
    let mut rows = Vec::new();
    let row = |test: &str, arm: u8, r: Result<(f64, f64), String>| match r {
        Ok((statistic, p)) => json!({ "test": test, "arm": arm, "statistic": statistic, "p_value": p, "note": null }),
        Err(note) => json!({ "test": test, "arm": arm, "statistic": null, "p_value": null, "note": note }),
    };
    for arm in [1u8, 0] {
        rows.push(row("trend", arm, stationarity_trend_test(tr, arm).map(|r| (r.statistic, r.p_value)).map_err(|e| e.to_string())));
        rows.push(row("rank", arm, stationarity_rank_test(tr, arm).map(|r| (r.z, r.p_value)).map_err(|e| e.to_string())));
        rows.push(row("split", arm, split_distribution_check(tr, arm).map(|r| (r.d, r.p_value)).map_err(|e| e.to_string())));
    }
    let noise = constant_noise_check(tr, b.tolerance);
    println!("{:<6} {:>3} {:>10} {:>8}", "test", "arm", "statistic", "p");
    for r in &rows {
        match r["p_value"].as_f64() {
            Some(p) => println!("{:<6} {:>3} {:>10.4} {:>8.4}", r["test"].as_str().unwrap_or(""), r["arm"], r["statistic"].as_f64().unwrap_or(f64::NAN), p),
            None => println!("{:<6} {:>3} {}", r["test"].as_str().unwrap_or(""), r["arm"], r["note"].as_str().unwrap_or("")),
        }
    }
    println!("constant noise: {}", if noise.passed { "consistent" } else { "rejected" });
    let results = json!({
        "data": data_block(&b.data, &panel),
        "diagnostics": rows,
        "constant_noise": { "tolerance": b.tolerance, "passed": noise.passed, "witnesses": noise.witnesses },
    });
    run.finish(results, None)
}

fn rows_from(times: &[usize], point: &[f64], se: Option<&[f64]>, oracle: Option<&[f64]>) -> Vec<EffectRow> {
    times
        .iter()
        .enumerate()
        .map(|(i, &k)| EffectRow { k, point: point[i], se: se.map(|s| s[i]), ci_low: None, ci_high: None, oracle: oracle.map(|o| o[i]) })
        .collect()
}

fn estimate_rows(times: &[usize], est: &[Estimate]) -> Vec<EffectRow> {
    times
        .iter()
        .zip(est)
        .map(|(&k, e)| EffectRow { k, point: e.point, se: Some(e.se), ci_low: Some(e.ci_low), ci_high: Some(e.ci_high), oracle: None })
        .collect()
}

fn bootstrap_block(res: &BootstrapResult, cfg: &BootstrapConfig) -> Value {
    json!({
        "replicates": cfg.replicates,
        "interval": cfg.interval,
        "level": cfg.level,
        "succeeded": res.succeeded,
        "failed": res.failed,
        "failure_examples": res.failure_examples,
    })
}

fn gformula(path: &Path, flag: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg: Loaded<GformulaConfig> = load(path)?;
    let b = &cfg.body;
    check_level(b.level)?;
    let seed = resolve_seed(flag, b.seed, true)?.unwrap_or_default();
    if b.method == Some(Evaluation::Mc) && b.reps == 0 {
        return Err(Failure::invalid("reps must be at least 1"));
    }
    if b.bootstrap.is_some() && b.source != Source::Data {
        return Err(Failure::invalid("bootstrap bands need source = \"data\""));
    }
    let run = Run::start("gformula", Some(seed), cfg.sha256.clone(), out)?;
    let mc_seed = derive_seed(seed, 1);
    let mut extra = json!({});
    let rows = match b.source {
        Source::Model => {
            let scm = match model_from_table(model_table(&cfg)?, "model").invalid("model")? {
                AnyScm::Discrete(m) => m,
                AnyScm::Additive(_) => return Err(Failure::invalid("model: the g-formula needs a discrete variant")),
            };
            let u = match &b.u {
                Some(name) => scm.u_index(name).invalid("u")?,
                None => 0,
            };
            let k_max = b.k_max.ok_or_else(|| Failure::invalid("k_max is required with source = \"model\""))?;
            let init = scm.initial();
            let oracle = ucate_series(&GKernels::from_scm(&scm, u), k_max, StartState { y: init.y, l: init.l }).estimation("forward pass")?;
            let times: Vec<usize> = (1..=k_max).collect();
            match b.method.unwrap_or(Evaluation::Dp) {
                Evaluation::Dp => rows_from(&times, &oracle, None, Some(&oracle)),
                Evaluation::Mc => {
                    let model = CategoricalModel::from_scm(&scm, u);
                    let l = if scm.variant().has_covariate() { vec![scm.l_values()[init.l]] } else { vec![] };
                    // the g-formula takes the origin's treatment to equal the intervention's
                    let start = Start::Initial { state: State { y: scm.y_values()[init.y], l }, a0: InitialTreatment::MatchFirst };
                    let mc = gcomputation_mc(&model, &McContrast::always(k_max), &start, b.reps, mc_seed).estimation("g-computation")?;
                    extra["mc_reps"] = json!(b.reps);
                    rows_from(&mc.times, &mc.mean, Some(&mc.se), Some(&oracle))
                }
            }
        }
        Source::Kernels => {
            let p = b.kernels.as_ref().ok_or_else(|| Failure::invalid("source = \"kernels\" needs a kernels path"))?;
            let text = std::fs::read_to_string(cfg.resolve(p)).invalid(&format!("reading {}", p.display()))?;
            let kernels = GKernels::from_toml(&text).invalid("kernels")?;
            let k_max = b.k_max.ok_or_else(|| Failure::invalid("k_max is required with source = \"kernels\""))?;
            if b.method == Some(Evaluation::Mc) {
                return Err(Failure::invalid("method = \"mc\" needs a generative model; use source = \"model\" or \"data\""));
            }
            if b.start.y >= kernels.domains.n_y() || b.start.l >= kernels.domains.n_l() {
                return Err(Failure::invalid("start: level index outside the kernel domains"));
            }
            let point = ucate_series(&kernels, k_max, StartState { y: b.start.y, l: b.start.l }).estimation("forward pass")?;
            rows_from(&(1..=k_max).collect::<Vec<_>>(), &point, None, None)
        }
        Source::Data => {
            let data = b.data.as_ref().ok_or_else(|| Failure::invalid("source = \"data\" needs a [data] section"))?;
            let panel = ingest(&cfg, data)?;
            extra["data"] = data_block(data, &panel);
            gformula_on_data(b, &panel.trajectory, seed, &run, &mut extra)?
        }
    };
    for r in &rows {
        match (r.ci_low, r.ci_high) {
            (Some(lo), Some(hi)) => println!("k = {:>4}  {:>9.5}  ({:.5}, {:.5})", r.k, r.point, lo, hi),
            _ => println!("k = {:>4}  {:>9.5}", r.k, r.point),
        }
    }
    run.effects("g-formula effect by time", &rows)?;
    let mut results = json!({
        "source": b.source,
        "method": b.method.unwrap_or(if b.fit == Fit::Gaussian { Evaluation::Mc } else { Evaluation::Dp }),
        "effects": rows,
    });
    if let (Value::Object(r), Value::Object(e)) = (&mut results, extra) {
        r.extend(e);
    }
    run.finish(results, None)
}

fn gformula_on_data(b: &GformulaConfig, tr: &Trajectory, seed: u64, run: &Run, extra: &mut Value) -> Result<Vec<EffectRow>, Failure> {
    let t = tr.len();
    if t < 2 {
        return Err(Failure::invalid("the g-formula on data needs at least two time points"));
    }
    let k_max = b.k_max.unwrap_or(t - 1);
    if k_max == 0 {
        return Err(Failure::invalid("k_max must be at least 1"));
    }
    let origin = Origin::FirstObservation;
    let contrast = McContrast::always(k_max + 1);
    let observed = Start::observed(tr);
    let (mc_seed, boot_seed, inner_seed) = (derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3));
    let boot_cfg = b.bootstrap.as_ref().map(|s| BootstrapConfig { interval: s.interval, ..BootstrapConfig::new(s.replicates, b.level, boot_seed) });
    let times: Vec<usize> = (2..=k_max + 1).collect();
    let cov = b.covariate.as_deref();
    extra["fit"] = json!(b.fit);

    let (point, se, boot) = match b.fit {
        Fit::Categorical => {
            if !b.covariate_rules.is_empty() {
                return Err(Failure::invalid("covariate_rules apply to fit = \"gaussian\"; use covariate for categorical fits"));
            }
            let domains = Domains::infer(tr, cov).invalid("domains")?;
            let kernels = fit_kernels(tr, &domains, cov, origin, b.smoothing).estimation("fitting kernels")?;
            if b.dump_kernels {
                crate::output::write(&run.path("kernels.toml"), kernels.to_toml().as_bytes())?;
            }
            let start = StartState::first_observation(tr, &domains, cov).invalid("start state")?;
            let cov_mask = if cov.is_some() { Variant::Relaxed.covariate_mask() } else { ParentMask::NONE };
            let fit_model = |d: &Trajectory| CategoricalModel::fit(d, &domains, cov, Variant::Relaxed.outcome_mask(), cov_mask, origin, b.smoothing);
            let method = b.method.unwrap_or(Evaluation::Dp);
            let (point, se) = match method {
                Evaluation::Dp => (ucate_series(&kernels, k_max, start).estimation("forward pass")?, None),
                Evaluation::Mc => {
                    let model = fit_model(tr).estimation("fitting model")?;
                    let mc = gcomputation_mc(&model, &contrast, &observed, b.reps, mc_seed).estimation("g-computation")?;
                    extra["mc_reps"] = json!(b.reps);
                    (mc.mean, Some(mc.se))
                }
            };
            let boot = match &boot_cfg {
                None => None,
                Some(c) => {
                    let model = fit_model(tr).estimation("fitting bootstrap model")?;
                    let inner = b.bootstrap.as_ref().map_or(1_000, |s| s.reps);
                    let estimator = |d: &Trajectory| -> Result<Vec<f64>, nof1_core::GfError> {
                        match method {
                            Evaluation::Dp => {
                                let k = fit_kernels(d, &domains, cov, origin, b.smoothing)?;
                                ucate_series(&k, k_max, StartState::first_observation(d, &domains, cov)?)
                            }
                            Evaluation::Mc => Ok(gcomputation_mc(&fit_model(d)?, &contrast, &Start::observed(d), inner, inner_seed)?.mean),
                        }
                    };
                    Some(parametric_bootstrap(&model, tr.treatments(), &observed, &point, estimator, c).estimation("bootstrap")?)
                }
            };
            (point, se, boot)
        }
        Fit::Gaussian => {
            if cov.is_some() {
                return Err(Failure::invalid("fit = \"gaussian\" takes covariate_rules, not covariate"));
            }
            if b.method == Some(Evaluation::Dp) {
                return Err(Failure::invalid("fit = \"gaussian\" is evaluated by Monte Carlo; use method = \"mc\""));
            }
            let model = GaussianLinearModel::fit(tr, b.covariate_rules.clone()).estimation("fitting Gaussian model")?;
            let mc = gcomputation_mc(&model, &contrast, &observed, b.reps, mc_seed).estimation("g-computation")?;
            extra["mc_reps"] = json!(b.reps);
            let boot = match &boot_cfg {
                None => None,
                Some(c) => {
                    let inner = b.bootstrap.as_ref().map_or(1_000, |s| s.reps);
                    let estimator = |d: &Trajectory| -> Result<Vec<f64>, nof1_core::GfError> {
                        let m = GaussianLinearModel::fit(d, b.covariate_rules.clone())?;
                        Ok(gcomputation_mc(&m, &contrast, &Start::observed(d), inner, inner_seed)?.mean)
                    };
                    Some(parametric_bootstrap(&model, tr.treatments(), &observed, &mc.mean, estimator, c).estimation("bootstrap")?)
                }
            };
            (mc.mean, Some(mc.se), boot)
        }
    };
    Ok(match (boot, &boot_cfg) {
        (Some(res), Some(c)) => {
            extra["bootstrap"] = bootstrap_block(&res, c);
            let mut rows = estimate_rows(&times, &res.estimates);
            if let Some(se) = &se {
                extra["mc_se"] = json!(se);
            }
            for (r, p) in rows.iter_mut().zip(&point) {
                r.point = *p;
            }
            rows
        }
        _ => rows_from(&times, &point, se.as_deref(), None),
    })
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    id: String,
    file: std::path::PathBuf,
    #[serde(default)]
    schedule: Option<String>,
}

fn aggregate(path: &Path, flag: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg: Loaded<AggregateConfig> = load(path)?;
    let b = &cfg.body;
    check_level(b.level)?;
    let seed = resolve_seed(flag, b.seed, false)?;
    let manifest_path = cfg.resolve(&b.manifest);
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&manifest_path).invalid("manifest")?;
    let entries: Vec<ManifestRow> = rdr.deserialize().collect::<Result<_, _>>().invalid("manifest")?;
    if entries.len() < 2 {
        return Err(Failure::invalid(format!("manifest lists {} individual(s); at least 2 are required", entries.len())));
    }
    let mut trajs = Vec::with_capacity(entries.len());
    for e in &entries {
        let p = if e.file.is_absolute() { e.file.clone() } else { base.join(&e.file) };
        let panel = read_panel_file(&p, &b.columns).invalid(&format!("individual {}: ingest {}", e.id, e.file.display()))?;
        if let Some(z) = e.schedule.as_deref().filter(|s| !s.is_empty()) {
            let z: Schedule = z.parse().invalid(&format!("individual {}: schedule", e.id))?;
            let tr = &panel.trajectory;
            if z.expand(tr.len()) != tr.treatments() {
                return Err(Failure::invalid(format!("individual {}: treatments do not follow schedule {z}", e.id)));
            }
        }
        trajs.push(panel.trajectory);
    }
    let run = Run::start("aggregate", seed, cfg.sha256.clone(), out)?;
    let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    let min_t = trajs.iter().map(Trajectory::len).min().unwrap_or(0);
    let mut results = json!({ "method": b.method, "individuals": ids.len() });
    match b.method {
        Aggregation::Tau => {
            let taus: Vec<f64> = trajs
                .par_iter()
                .zip(&ids)
                .map(|(tr, id)| tau_hat(tr).map_err(|e| Failure::Estimation(anyhow::anyhow!("individual {id}: {e}"))))
                .collect::<Result<_, _>>()?;
            let agg = aggregate_tau(&taus, b.level).estimation("aggregate")?;
            println!("aggregate tau = {:.4} ({:.4}, {:.4}) over {} individuals", agg.point, agg.ci_low, agg.ci_high, taus.len());
            results["per_individual"] = ids.iter().zip(&taus).map(|(id, t)| json!({ "id": id, "tau_hat": t })).collect();
            results["aggregate"] = json!(agg);
        }
        Aggregation::Gformula => {
            let k_max = b.k_max.unwrap_or(min_t.saturating_sub(1));
            if k_max == 0 || k_max >= min_t {
                return Err(Failure::invalid(format!("k_max must lie in 1..{min_t} (shortest panel has t = {min_t})")));
            }
            let cov = b.covariate.as_deref();
            let per: Vec<Result<Vec<f64>, String>> = trajs
                .par_iter()
                .map(|tr| {
                    let domains = Domains::infer(tr, cov).map_err(|e| e.to_string())?;
                    let k = fit_kernels(tr, &domains, cov, Origin::FirstObservation, b.smoothing).map_err(|e| e.to_string())?;
                    let start = StartState::first_observation(tr, &domains, cov).map_err(|e| e.to_string())?;
                    ucate_series(&k, k_max, start).map_err(|e| e.to_string())
                })
                .collect();
            let mut series = Vec::new();
            let mut dropped = Vec::new();
            for (id, r) in ids.iter().zip(per) {
                match r {
                    Ok(s) => series.push(s),
                    Err(reason) => dropped.push(json!({ "id": id, "reason": reason })),
                }
            }
            if !dropped.is_empty() {
                eprintln!("warning: {} individual(s) not estimable and dropped", dropped.len());
            }
            let est = aggregate_gformula(&series, b.level).estimation("aggregate")?;
            let rows = estimate_rows(&(2..=k_max + 1).collect::<Vec<_>>(), &est);
            run.effects("aggregate g-formula effect by time", &rows)?;
            println!("aggregated {} g-formula series over k = 2..{}", series.len(), k_max + 1);
            results["used"] = json!(series.len());
            results["dropped"] = json!(dropped);
            results["effects"] = json!(rows);
        }
        Aggregation::Parallel => {
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            for k in 1..=min_t {
                match parallel_contrast(&trajs, k, b.level) {
                    Ok(e) => rows.extend(estimate_rows(&[k], &[e])),
                    Err(err @ SeriesError::OneSided { .. }) => skipped.push(json!({ "k": k, "reason": err.to_string() })),
                    Err(err) => return Err(Failure::Estimation(anyhow::anyhow!("parallel contrast: {err}"))),
                }
            }
            run.effects("parallel contrast by time", &rows)?;
            println!("parallel contrast at {} of {min_t} time points", rows.len());
            results["skipped"] = json!(skipped);
            results["effects"] = json!(rows);
        }
    }
    run.finish(results, None)
}

fn validate(path: &Path, flag: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg: Loaded<ValidateConfig> = load(path)?;
    let b = &cfg.body;
    let seed = resolve_seed(flag, b.seed, true)?.unwrap_or_default();
    let known: Vec<u8> = CRITERIA.iter().map(|(id, _)| *id).collect();
    let ids = b.criteria.clone().unwrap_or_else(|| known.clone());
    if let Some(bad) = ids.iter().find(|id| !known.contains(id)) {
        return Err(Failure::invalid(format!("criteria: no criterion {bad}")));
    }
    let acne_dir = match &b.acne_dir {
        Some(p) => Some(cfg.resolve(p)),
        None => std::env::var_os("NOF1_ACNE_DIR").filter(|v| !v.is_empty()).map(std::path::PathBuf::from),
    };
    let vc = VerifyConfig { seed, acne_dir };
    let run = Run::start("validate", Some(seed), cfg.sha256.clone(), out)?;
    let reports: Vec<_> = ids
        .iter()
        .map(|&id| {
            let r = run_criterion(id, &vc);
            println!("{r}");
            r
        })
        .collect();
    let results: Vec<Value> =
        reports.iter().map(|r| json!({ "id": r.id, "name": r.name, "status": r.status, "detail": r.detail })).collect();
    let timings: Vec<Value> =
        reports.iter().map(|r| json!({ "id": r.id, "seconds": r.seconds, "budget_seconds": r.budget_seconds })).collect();
    run.finish(json!({ "criteria": results }), Some(json!(timings)))?;
    let failed = reports.iter().filter(|r| r.status == Status::Fail).count();
    if failed > 0 {
        return Err(Failure::invalid(format!("{failed} criterion(s) failed")));
    }
    Ok(())
}
