//! Report, metadata and effect-table files.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::failure::{Classify, Failure};
use crate::plot;

/// One row of a per-time effect table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectRow {
    pub k: usize,
    pub point: f64,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Exact value when the data came from a known model.
    pub oracle: Option<f64>,
}

pub struct Run {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub out: PathBuf,
    started: SystemTime,
    clock: Instant,
}

fn unix(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl Run {
    pub fn start(command: &'static str, seed: Option<u64>, config_sha256: String, out: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(out).invalid(&format!("creating {}", out.display()))?;
        Ok(Self { command, seed, config_sha256, out: out.to_path_buf(), started: SystemTime::now(), clock: Instant::now() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// `report.json` holds only values determined by (config, seed);
    /// `meta.json` holds timings and the report digest.
    pub fn finish(&self, results: Value, timings: Option<Value>) -> Result<(), Failure> {
        let body = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config_sha256": self.config_sha256,
            "results": results,
        });
        let mut text = serde_json::to_string_pretty(&body).expect("report is plain JSON");
        text.push('\n');
        write(&self.path("report.json"), text.as_bytes())?;
        let mut meta = json!({
            "command": self.command,
            "config_sha256": self.config_sha256,
            "report_sha256": hex::encode(Sha256::digest(text.as_bytes())),
            "started_unix": unix(self.started),
            "finished_unix": unix(SystemTime::now()),
            "elapsed_seconds": self.clock.elapsed().as_secs_f64(),
            "threads": rayon::current_num_threads(),
        });
        if let Some(t) = timings {
            meta["timings"] = t;
        }
        let mut text = serde_json::to_string_pretty(&meta).expect("metadata is plain JSON");
        text.push('\n');
        write(&self.path("meta.json"), text.as_bytes())
    }

    /// `effects.csv` plus `effects.svg`; an empty table gets a warning and
    /// no graphic.
    pub fn effects(&self, title: &str, rows: &[EffectRow]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "point", "se", "ci_low", "ci_high", "oracle"]).invalid("writing effects.csv")?;
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in rows {
            w.write_record([r.k.to_string(), r.point.to_string(), cell(r.se), cell(r.ci_low), cell(r.ci_high), cell(r.oracle)])
                .invalid("writing effects.csv")?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::invalid(format!("writing effects.csv: {e}")))?;
        write(&self.path("effects.csv"), &bytes)?;
        if rows.is_empty() {
            eprintln!("warning: effect series is empty; no plot written");
            return Ok(());
        }
        write(&self.path("effects.svg"), plot::effects_svg(title, rows).as_bytes())
    }
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).invalid(&format!("writing {}", path.display()))
}
