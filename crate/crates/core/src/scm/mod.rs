//! Structural causal models for N-of-1 trials and their exact estimands.
//!
//! Two model families implement [`StructuralModel`]:
//!
//! * [`DiscreteScm`]: tabular kernels for the basic, relaxed and time-trend
//!   models. Noise is realized by inverse-transform sampling from shared
//!   uniforms, which gives one valid NPSEM-IE for the declared kernels and
//!   makes cross-world quantities (the ICE) computable.
//! * [`AdditiveScm`]: `Y_k = beta * A_k + u + eps_k`.
//!
//! Exact counterfactual means come from a forward pass over the joint
//! `(Y, L)` state distribution; see [`exact_counterfactual_mean`].

mod additive;
pub mod config;
mod discrete;

pub use additive::{AdditiveScm, NoiseFamily};
pub use discrete::{DiscreteScm, DiscreteScmBuilder, InitialState, InitialTreatment, ULevel, Variant};

use rand::{Rng, RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::KernelError;
use crate::schedule::Schedule;
use crate::seeding::ReplicateRng;
use crate::trajectory::{Trajectory, TrajectoryError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error("u level {0} is out of range")]
    UnknownU(usize),
    #[error("unknown u level {0:?}")]
    UnknownULabel(String),
    #[error("explicit regime has length {got}, horizon is {expected}")]
    RegimeLength { got: usize, expected: usize },
    #[error("treatment value {0} is not binary")]
    NonBinary(u8),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("time point {k} is outside 1..={t}")]
    TimeOutOfRange { k: usize, t: usize },
    #[error("noise record covers {got} time points, {needed} needed")]
    IncompleteNoise { got: usize, needed: usize },
    #[error("{role} kernel for u={u}: {source}")]
    Kernel { role: &'static str, u: String, source: KernelError },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Treatment strategy over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Follow a cyclic schedule.
    Natural(Schedule),
    /// Force treatment `x` at every time.
    Always(u8),
    /// Force an explicit sequence; length must equal the horizon.
    Explicit(Vec<u8>),
}

impl Regime {
    pub fn treatments(&self, t: usize) -> Result<Vec<u8>, ScmError> {
        if t == 0 {
            return Err(ScmError::EmptyHorizon);
        }
        match self {
            Regime::Natural(s) => Ok(s.expand(t)),
            Regime::Always(x) if *x <= 1 => Ok(vec![*x; t]),
            Regime::Always(x) => Err(ScmError::NonBinary(*x)),
            Regime::Explicit(v) => {
                if v.len() != t {
                    return Err(ScmError::RegimeLength { got: v.len(), expected: t });
                }
                if let Some(&x) = v.iter().find(|&&x| x > 1) {
                    return Err(ScmError::NonBinary(x));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Realized exogenous noise for one individual.
///
/// For [`DiscreteScm`] the entries are uniforms on [0, 1) fed to
/// inverse-transform sampling; for [`AdditiveScm`] `outcome` holds the
/// additive errors directly. `covariate` is unused by models without `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub outcome: Vec<f64>,
    pub covariate: Vec<f64>,
}

impl NoiseRecord {
    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    /// Same draw at every time point.
    pub fn constant(t: usize, outcome: f64, covariate: f64) -> Self {
        Self { outcome: vec![outcome; t], covariate: vec![covariate; t] }
    }

    pub(crate) fn check(&self, needed: usize) -> Result<(), ScmError> {
        let got = self.outcome.len().min(self.covariate.len());
        if got < needed {
            return Err(ScmError::IncompleteNoise { got, needed });
        }
        Ok(())
    }
}

pub trait StructuralModel: Sync {
    /// Number of baseline levels `u`.
    fn u_count(&self) -> usize;

    fn u_name(&self, u: usize) -> String {
        u.to_string()
    }

    fn draw_noise(&self, t: usize, rng: &mut dyn RngCore) -> NoiseRecord;

    /// Deterministically evaluate the structural equations for times
    /// 1..=treatments.len() under the given noise.
    fn realize(&self, u: usize, treatments: &[u8], noise: &NoiseRecord) -> Result<Trajectory, ScmError>;
}

pub fn simulate<M: StructuralModel + ?Sized>(
    model: &M,
    u: usize,
    regime: &Regime,
    t: usize,
    seed: u64,
) -> Result<Trajectory, ScmError> {
    let mut rng = ReplicateRng::seed_from_u64(seed);
    simulate_with_rng(model, u, regime, t, &mut rng)
}

pub fn simulate_with_rng<M: StructuralModel + ?Sized>(
    model: &M,
    u: usize,
    regime: &Regime,
    t: usize,
    rng: &mut dyn RngCore,
) -> Result<Trajectory, ScmError> {
    let treatments = regime.treatments(t)?;
    let noise = model.draw_noise(t, rng);
    simulate_with_noise(model, u, regime, &treatments, &noise)
}

fn simulate_with_noise<M: StructuralModel + ?Sized>(
    model: &M,
    u: usize,
    regime: &Regime,
    treatments: &[u8],
    noise: &NoiseRecord,
) -> Result<Trajectory, ScmError> {
    let traj = model.realize(u, treatments, noise)?;
    match regime {
        Regime::Natural(s) => Ok(traj.with_schedule(s.clone())?),
        _ => Ok(traj),
    }
}

/// Individual causal effect at time `k`: `Y_k` under always-treated minus
/// `Y_k` under never-treated, both evaluated on the same noise record.
pub fn ice_given_noise<M: StructuralModel + ?Sized>(
    model: &M,
    u: usize,
    noise: &NoiseRecord,
    k: usize,
) -> Result<f64, ScmError> {
    if k == 0 {
        return Err(ScmError::TimeOutOfRange { k, t: noise.len() });
    }
    noise.check(k)?;
    let treated = model.realize(u, &vec![1; k], noise)?;
    let control = model.realize(u, &vec![0; k], noise)?;
    Ok(treated.outcome(k) - control.outcome(k))
}

/// Index of the latent level selected by one uniform draw against
/// `weights`.
pub fn draw_u<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let v: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if v < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Models whose interventional means can be computed exactly.
pub trait ExactModel {
    fn u_weights(&self) -> Vec<f64>;

    /// `E(Y_m | do(A_1..A_m = treatments[..m]), U = u)` for m = 1..=len.
    fn mean_under(&self, u: usize, treatments: &[u8]) -> Result<Vec<f64>, ScmError>;

    /// `E(Y_k^{always x} | U = u)` for k = 1..=k_max.
    fn counterfactual_means(&self, u: usize, x: u8, k_max: usize) -> Result<Vec<f64>, ScmError> {
        self.mean_under(u, &vec![x; k_max])
    }
}

pub fn exact_counterfactual_mean<M: ExactModel + ?Sized>(model: &M, u: usize, k: usize, x: u8) -> Result<f64, ScmError> {
    if k == 0 {
        return Err(ScmError::TimeOutOfRange { k, t: 0 });
    }
    Ok(model.counterfactual_means(u, x, k)?[k - 1])
}

pub fn true_ucate_series<M: ExactModel + ?Sized>(model: &M, u: usize, k_max: usize) -> Result<Vec<f64>, ScmError> {
    let treated = model.counterfactual_means(u, 1, k_max)?;
    let control = model.counterfactual_means(u, 0, k_max)?;
    Ok(treated.iter().zip(&control).map(|(a, b)| a - b).collect())
}

pub fn true_ucate<M: ExactModel + ?Sized>(model: &M, u: usize, k: usize) -> Result<f64, ScmError> {
    if k == 0 {
        return Err(ScmError::TimeOutOfRange { k, t: 0 });
    }
    Ok(true_ucate_series(model, u, k)?[k - 1])
}

/// Population effect: weight-average of the U-CATE over baseline levels.
pub fn true_ace_series<M: ExactModel + ?Sized>(model: &M, k_max: usize) -> Result<Vec<f64>, ScmError> {
    let weights = model.u_weights();
    let mut ace = vec![0.0; k_max];
    for (u, w) in weights.iter().enumerate() {
        for (acc, v) in ace.iter_mut().zip(true_ucate_series(model, u, k_max)?) {
            *acc += w * v;
        }
    }
    Ok(ace)
}

pub fn true_ace<M: ExactModel + ?Sized>(model: &M, k: usize) -> Result<f64, ScmError> {
    if k == 0 {
        return Err(ScmError::TimeOutOfRange { k, t: 0 });
    }
    Ok(true_ace_series(model, k)?[k - 1])
}
