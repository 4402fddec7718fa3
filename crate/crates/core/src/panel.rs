//! Panel CSV ingestion and export.
//!
//! A panel has one row per time point with a time column (1-based,
//! contiguous), a 0/1 treatment column, a decimal outcome column and any
//! number of covariate columns. Covariate columns whose cells all parse as
//! decimals are kept as numbers; otherwise levels are coded 0, 1, 2, ...
//! in order of first appearance and the coding is returned.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("row {row}, column {column:?}: {message}")]
    Cell { row: usize, column: String, message: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("panel has no data rows")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Trajectory(#[from] crate::trajectory::TrajectoryError),
}

/// Which CSV columns hold which variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    /// `None` takes rows in file order as times 1..t.
    pub time: Option<String>,
    pub treatment: String,
    pub outcome: String,
    pub covariates: Vec<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self { time: Some("time".into()), treatment: "treatment".into(), outcome: "outcome".into(), covariates: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelCoding {
    Numeric { column: String },
    /// `levels[i]` was coded as `i`.
    Coded { column: String, levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub trajectory: Trajectory,
    pub coding: Vec<LevelCoding>,
}

pub fn read_panel_file(path: &Path, map: &ColumnMap) -> Result<Panel, PanelError> {
    read_panel(std::fs::File::open(path)?, map)
}

pub fn read_panel<R: Read>(reader: R, map: &ColumnMap) -> Result<Panel, PanelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| PanelError::MissingColumn(name.into()));
    let time_col = map.time.as_deref().map(col).transpose()?;
    let a_col = col(&map.treatment)?;
    let y_col = col(&map.outcome)?;
    let cov_cols = map.covariates.iter().map(|c| col(c)).collect::<Result<Vec<_>, _>>()?;

    let mut a = Vec::new();
    let mut y = Vec::new();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); cov_cols.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let cell = |c: usize, name: &str| -> Result<&str, PanelError> {
            match rec.get(c) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(PanelError::Cell { row, column: name.into(), message: "missing value".into() }),
            }
        };
        let bad = |name: &str, message: String| PanelError::Cell { row, column: name.into(), message };
        if let (Some(c), Some(name)) = (time_col, map.time.as_deref()) {
            let v = cell(c, name)?;
            let k: usize = v.parse().map_err(|_| bad(name, format!("time {v:?} is not a positive integer")))?;
            if k != row {
                return Err(bad(name, format!("time {k} found where {row} was expected (times must be 1, 2, 3, ...)")));
            }
        }
        let v = cell(a_col, &map.treatment)?;
        a.push(match v {
            "0" => 0,
            "1" => 1,
            _ => return Err(bad(&map.treatment, format!("treatment {v:?} must be 0 or 1"))),
        });
        let v = cell(y_col, &map.outcome)?;
        let yv: f64 = v.parse().map_err(|_| bad(&map.outcome, format!("outcome {v:?} is not a number")))?;
        if !yv.is_finite() {
            return Err(bad(&map.outcome, format!("outcome {v:?} is not finite")));
        }
        y.push(yv);
        for (j, &c) in cov_cols.iter().enumerate() {
            raw[j].push(cell(c, &map.covariates[j])?.to_string());
        }
    }
    if a.is_empty() {
        return Err(PanelError::Empty);
    }
    let mut trajectory = Trajectory::new(a, y)?;
    let mut coding = Vec::new();
    for (name, cells) in map.covariates.iter().zip(raw) {
        let numeric: Option<Vec<f64>> = cells.iter().map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        let values = match numeric {
            Some(v) => {
                coding.push(LevelCoding::Numeric { column: name.clone() });
                v
            }
            None => {
                let mut levels: Vec<String> = Vec::new();
                let v = cells
                    .iter()
                    .map(|s| match levels.iter().position(|l| l == s) {
                        Some(i) => i as f64,
                        None => {
                            levels.push(s.clone());
                            (levels.len() - 1) as f64
                        }
                    })
                    .collect();
                coding.push(LevelCoding::Coded { column: name.clone(), levels });
                v
            }
        };
        trajectory = trajectory.with_covariate(name.clone(), values)?;
    }
    Ok(Panel { trajectory, coding })
}

/// Write `time,treatment,outcome,<covariates...>`. Values use the
/// shortest representation that parses back to the same float.
pub fn write_panel<W: Write>(writer: W, traj: &Trajectory) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["time".to_string(), "treatment".into(), "outcome".into()];
    header.extend(traj.covariates().iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for k in 1..=traj.len() {
        let mut rec = vec![k.to_string(), traj.treatment(k).to_string(), traj.outcome(k).to_string()];
        rec.extend(traj.covariates().iter().map(|c| c.values[k - 1].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_panel_file(path: &Path, traj: &Trajectory) -> Result<(), PanelError> {
    write_panel(std::fs::File::create(path)?, traj)
}

/// The column map matching [`write_panel`] output for `traj`'s covariates.
pub fn default_map_for(traj: &Trajectory) -> ColumnMap {
    ColumnMap { covariates: traj.covariates().iter().map(|c| c.name.clone()).collect(), ..ColumnMap::default() }
}
