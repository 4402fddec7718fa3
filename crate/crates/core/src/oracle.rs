//! Independent reference computations used to check the fast paths:
//! exhaustive path enumeration, random model generation and exact
//! averaging over a design's schedule set.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::estimate::{tau_hat, EstimateError};
use crate::gformula::{GKernels, StartState};
use crate::kernel::{CondTable, KernelError, ParentKey, ParentSizes};
use crate::schedule::Design;
use crate::scm::{ice_given_noise, DiscreteScm, InitialState, InitialTreatment, NoiseRecord, ScmError, StructuralModel, Variant};

/// `E(Y_k | do(treatments), U = u)` with `k = treatments.len()`, by summing
/// the probability of every `(y, l)` path.
pub fn enumerate_mean(scm: &DiscreteScm, u: usize, treatments: &[u8]) -> f64 {
    let init = scm.initial();
    let a0 = init.a.resolve(treatments[0]);
    let out = scm.outcome_table(u);
    let cov = scm.covariate_table(u);
    let (n_y, n_l) = (scm.y_values().len(), scm.l_values().len());
    fn walk(
        scm: &DiscreteScm,
        m: usize,
        treatments: &[u8],
        (yp, lp, ap): (usize, usize, u8),
        prob: f64,
        dims: (usize, usize),
        tables: (&CondTable, &CondTable),
    ) -> f64 {
        if m == treatments.len() {
            return prob * scm.y_values()[yp];
        }
        let a = treatments[m];
        let mut total = 0.0;
        for l in 0..dims.1 {
            let key = ParentKey { l, a: a as usize, y_prev: yp, l_prev: lp, a_prev: ap as usize };
            let pl = tables.1.row(key)[l];
            for y in 0..dims.0 {
                let py = tables.0.row(key)[y];
                total += walk(scm, m + 1, treatments, (y, l, a), prob * pl * py, dims, tables);
            }
        }
        total
    }
    walk(scm, 0, treatments, (init.y, init.l, a0), 1.0, (n_y, n_l), (out, cov))
}

/// `theta_k(x)` from g-formula kernels by summing over all paths.
pub fn enumerate_theta(kernels: &GKernels, k: usize, x: u8, start: StartState) -> f64 {
    let (n_y, n_l) = (kernels.domains.n_y(), kernels.domains.n_l());
    fn walk(kr: &GKernels, left: usize, x: u8, yp: usize, lp: usize, prob: f64, n_y: usize, n_l: usize) -> f64 {
        if left == 0 {
            return prob * kr.domains.y_values[yp];
        }
        let mut total = 0.0;
        for l in 0..n_l {
            let pl = kr.gl(x, yp, lp)[l];
            for y in 0..n_y {
                let py = kr.gy(x, l, yp, lp)[y];
                total += walk(kr, left - 1, x, y, l, prob * pl * py, n_y, n_l);
            }
        }
        total
    }
    walk(kernels, k, x, start.y, start.l, 1.0, n_y, n_l)
}

fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| floor + <Exp1 as Distribution<f64>>::sample(&Exp1, rng)).collect();
    let s: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / s).collect()
}

/// Shape of a generated model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomScmSpec {
    pub variant: Variant,
    pub n_y: usize,
    pub n_l: usize,
    pub n_u: usize,
    /// Added to every Exp(1) draw before normalizing rows; larger values
    /// keep rows away from the simplex boundary.
    pub floor: f64,
    pub integer_labels: bool,
    pub initial_a: InitialTreatment,
}

impl RandomScmSpec {
    pub fn new(variant: Variant, n_y: usize, n_l: usize) -> Self {
        Self { variant, n_y, n_l, n_u: 1, floor: 0.05, integer_labels: false, initial_a: InitialTreatment::MatchFirst }
    }
}

/// A strictly positive discrete SCM with random kernels, labels, weights
/// and initial state.
pub fn random_scm<R: Rng + ?Sized>(rng: &mut R, spec: &RandomScmSpec) -> Result<DiscreteScm, RandomScmError> {
    let n_l = if spec.variant.has_covariate() { spec.n_l } else { 1 };
    let y_values: Vec<f64> = if spec.integer_labels {
        let mut v: Vec<f64> = Vec::new();
        while v.len() < spec.n_y {
            let c = rng.random_range(-5i32..=5) as f64;
            if !v.contains(&c) {
                v.push(c);
            }
        }
        v
    } else {
        (0..spec.n_y).map(|i| i as f64 + rng.random_range(-0.4..0.4)).collect()
    };
    let l_values: Vec<f64> = (0..n_l).map(|i| i as f64).collect();
    let weights = random_simplex(rng, spec.n_u, 0.5);
    let mut b = DiscreteScm::builder(spec.variant)
        .y_values(y_values)
        .initial(InitialState { y: rng.random_range(0..spec.n_y), l: rng.random_range(0..n_l), a: spec.initial_a })
        .positive(true);
    if spec.variant.has_covariate() {
        b = b.l_values(l_values);
    }
    // exact weights: the last absorbs rounding so the sum is 1 to 1e-12
    let mut weights = weights;
    let head: f64 = weights[..spec.n_u - 1].iter().sum();
    weights[spec.n_u - 1] = 1.0 - head;
    let sizes = ParentSizes { n_y: spec.n_y, n_l };
    for (i, w) in weights.into_iter().enumerate() {
        let y = CondTable::from_fn(spec.variant.outcome_mask(), sizes, spec.n_y, |_| random_simplex(rng, spec.n_y, spec.floor))?;
        let l = if spec.variant.has_covariate() {
            Some(CondTable::from_fn(spec.variant.covariate_mask(), sizes, n_l, |_| random_simplex(rng, n_l, spec.floor))?)
        } else {
            None
        };
        b = b.u_level_tables(format!("u{i}"), w, y, l);
    }
    Ok(b.build()?)
}

#[derive(Debug, thiserror::Error)]
pub enum RandomScmError {
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Design-weighted average of the mean difference over every schedule in
/// `design`, each realized on the same noise record.
pub fn design_average_tau<M: StructuralModel + ?Sized>(
    model: &M,
    u: usize,
    noise: &NoiseRecord,
    design: &Design,
) -> Result<f64, DesignAverageError> {
    let t = design.horizon();
    let mut acc = 0.0;
    for (z, p) in design.iter() {
        let traj = model.realize(u, &z.expand(t), noise)?;
        acc += p * tau_hat(&traj)?;
    }
    Ok(acc)
}

/// `(1/t) * sum_k ICE_k` on a noise record.
pub fn mean_ice<M: StructuralModel + ?Sized>(model: &M, u: usize, noise: &NoiseRecord, t: usize) -> Result<f64, ScmError> {
    let mut acc = 0.0;
    for k in 1..=t {
        acc += ice_given_noise(model, u, noise, k)?;
    }
    Ok(acc / t as f64)
}

#[derive(Debug, thiserror::Error)]
pub enum DesignAverageError {
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}
