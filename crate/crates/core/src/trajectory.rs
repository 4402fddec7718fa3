//! One individual's observed panel: treatments, outcomes and covariates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory is empty")]
    Empty,
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch { what: String, got: usize, expected: usize },
    #[error("treatment at time {k} is {value}; must be 0 or 1")]
    NonBinaryTreatment { k: usize, value: u8 },
    #[error("treatments disagree with schedule {schedule} at time {k}")]
    ScheduleMismatch { schedule: String, k: usize },
    #[error("non-finite {what} at time {k}")]
    NonFinite { what: String, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    a: Vec<u8>,
    y: Vec<f64>,
    covariates: Vec<Covariate>,
    u_label: Option<String>,
    schedule: Option<Schedule>,
}

impl Trajectory {
    pub fn new(a: Vec<u8>, y: Vec<f64>) -> Result<Self, TrajectoryError> {
        if a.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if y.len() != a.len() {
            return Err(TrajectoryError::LengthMismatch {
                what: "outcome".into(),
                got: y.len(),
                expected: a.len(),
            });
        }
        if let Some((i, &v)) = a.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(TrajectoryError::NonBinaryTreatment { k: i + 1, value: v });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(TrajectoryError::NonFinite { what: "outcome".into(), k: i + 1 });
        }
        Ok(Self { a, y, covariates: Vec::new(), u_label: None, schedule: None })
    }

    pub fn with_covariate(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self, TrajectoryError> {
        let name = name.into();
        if values.len() != self.len() {
            return Err(TrajectoryError::LengthMismatch { what: name, got: values.len(), expected: self.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TrajectoryError::NonFinite { what: name, k: i + 1 });
        }
        self.covariates.push(Covariate { name, values });
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Result<Self, TrajectoryError> {
        if let Some(k) = (1..=self.len()).find(|&k| schedule.assign(k) != self.a[k - 1]) {
            return Err(TrajectoryError::ScheduleMismatch { schedule: schedule.to_string(), k });
        }
        self.schedule = Some(schedule);
        Ok(self)
    }

    pub fn with_u_label(mut self, label: impl Into<String>) -> Self {
        self.u_label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn treatments(&self) -> &[u8] {
        &self.a
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.y
    }

    /// Treatment at 1-based time `k`.
    pub fn treatment(&self, k: usize) -> u8 {
        self.a[k - 1]
    }

    /// Outcome at 1-based time `k`.
    pub fn outcome(&self, k: usize) -> f64 {
        self.y[k - 1]
    }

    pub fn covariates(&self) -> &[Covariate] {
        &self.covariates
    }

    pub fn covariate(&self, name: &str) -> Option<&Covariate> {
        self.covariates.iter().find(|c| c.name == name)
    }

    /// All covariate values at 1-based time `k`, in declaration order.
    pub fn covariates_at(&self, k: usize) -> Vec<f64> {
        self.covariates.iter().map(|c| c.values[k - 1]).collect()
    }

    pub fn u_label(&self) -> Option<&str> {
        self.u_label.as_deref()
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        self.schedule.as_ref()
    }

    /// Outcomes observed under arm `x`, with their 1-based times.
    pub fn arm(&self, x: u8) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.a
            .iter()
            .zip(&self.y)
            .enumerate()
            .filter(move |(_, (a, _))| **a == x)
            .map(|(i, (_, y))| (i + 1, *y))
    }

    pub fn arm_values(&self, x: u8) -> Vec<f64> {
        self.arm(x).map(|(_, y)| y).collect()
    }

    /// Copy with every outcome replaced by `f(y)`.
    pub fn map_outcomes(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.y.iter_mut().for_each(|y| *y = f(*y));
        out
    }
}
