//! Longitudinal g-formula: kernel estimation, exact evaluation by a
//! forward pass, g-computation Monte Carlo and parametric bootstrap.
//!
//! Time-point conventions. An [`Origin`] says where the recursion starts.
//! `Origin::Initial` starts from fixed pre-study values `(Y_0, L_0, A_0)`
//! so every time point contributes; `Origin::FirstObservation` conditions
//! on the observed time 1 and targets `k >= 2`. In the g-formula the
//! origin's treatment is taken to equal the intervention's, so the first
//! step uses the repeated-treatment kernel like every other step.

mod bootstrap;
mod gcomp;
mod index;
mod kernels;
mod model;

pub use bootstrap::{parametric_bootstrap, BootstrapConfig, BootstrapResult, IntervalKind};
pub use gcomp::{gcomputation_mc, McContrast, McResult};
pub use index::{index_sets, IndexSets};
pub use kernels::{count_kernels, fit_kernels, theta_dp, theta_series, ucate_hat_gformula, ucate_series, GKernels, KernelBlock, StartState};
pub use model::{
    generate, CategoricalModel, ConditionalModel, CovariateRule, GaussianLinearModel, Start, State,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scm::InitialState;
use crate::trajectory::{Trajectory, TrajectoryError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GfError {
    #[error("no time point has treatment {arm} twice in a row; the schedule must repeat both arms")]
    EmptyDoubledSet { arm: u8 },
    #[error("kernel rows not estimable (never observed): {}", .missing.join(", "))]
    NonEstimable { missing: Vec<String> },
    #[error("{what} value {value} is not in the declared domain")]
    OutOfDomain { what: String, value: f64 },
    #[error("trajectory has no covariate named {0:?}")]
    MissingCovariate(String),
    #[error("state distribution sums to {total} at step {step}")]
    Conservation { step: usize, total: f64 },
    #[error("time point {k} is outside the model horizon")]
    BadTime { k: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("bootstrap aborted: {failures} of {total} replicates failed (first: {first})")]
    BootstrapAborted { failures: usize, total: usize, first: String },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Finite outcome and covariate domains used for tabular estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domains {
    pub y_values: Vec<f64>,
    /// A single level `[0.0]` when there is no covariate.
    pub l_values: Vec<f64>,
}

impl Domains {
    pub fn new(y_values: Vec<f64>, l_values: Vec<f64>) -> Result<Self, GfError> {
        if y_values.is_empty() || l_values.is_empty() {
            return Err(GfError::Invalid("domains must be non-empty".into()));
        }
        Ok(Self { y_values, l_values })
    }

    /// Sorted distinct values seen in the trajectory.
    pub fn infer(traj: &Trajectory, covariate: Option<&str>) -> Result<Self, GfError> {
        let distinct = |v: &[f64]| {
            let mut d = v.to_vec();
            d.sort_by(f64::total_cmp);
            d.dedup();
            d
        };
        let l_values = match covariate {
            Some(name) => distinct(&traj.covariate(name).ok_or_else(|| GfError::MissingCovariate(name.into()))?.values),
            None => vec![0.0],
        };
        Self::new(distinct(traj.outcomes()), l_values)
    }

    pub fn n_y(&self) -> usize {
        self.y_values.len()
    }

    pub fn n_l(&self) -> usize {
        self.l_values.len()
    }

    pub fn y_index(&self, value: f64) -> Result<usize, GfError> {
        self.y_values
            .iter()
            .position(|&v| v == value)
            .ok_or(GfError::OutOfDomain { what: "outcome".into(), value })
    }

    pub fn l_index(&self, value: f64) -> Result<usize, GfError> {
        self.l_values
            .iter()
            .position(|&v| v == value)
            .ok_or(GfError::OutOfDomain { what: "covariate".into(), value })
    }

    /// Outcome and covariate level indices of a trajectory.
    pub fn encode(&self, traj: &Trajectory, covariate: Option<&str>) -> Result<(Vec<usize>, Vec<usize>), GfError> {
        let y = traj.outcomes().iter().map(|&v| self.y_index(v)).collect::<Result<Vec<_>, _>>()?;
        let l = match covariate {
            Some(name) => traj
                .covariate(name)
                .ok_or_else(|| GfError::MissingCovariate(name.into()))?
                .values
                .iter()
                .map(|&v| self.l_index(v))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![0; traj.len()],
        };
        Ok((y, l))
    }
}

/// Where the recursion starts; see the module notes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Initial(InitialState),
    FirstObservation,
}

impl Origin {
    /// Time of the last conditioned-on observation (0 for a pre-study
    /// origin).
    pub fn offset(&self) -> usize {
        match self {
            Origin::Initial(_) => 0,
            Origin::FirstObservation => 1,
        }
    }
}
