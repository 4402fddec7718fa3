use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Domains, GKernels, GfError, KernelBlock, Origin};
use crate::kernel::{inverse_cdf, CondTable, ParentKey, ParentMask, ParentSizes};
use crate::scm::{DiscreteScm, InitialTreatment};
use crate::trajectory::Trajectory;

/// Outcome and covariate values at one time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub y: f64,
    pub l: Vec<f64>,
}

/// Starting point for sequential generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Pre-study values; every time point is generated.
    Initial { state: State, a0: InitialTreatment },
    /// Observed values at time 1 are kept; generation starts at time 2.
    Observed(State),
}

impl Start {
    pub fn offset(&self) -> usize {
        match self {
            Start::Initial { .. } => 0,
            Start::Observed(_) => 1,
        }
    }

    /// Condition on the first observation of `traj`.
    pub fn observed(traj: &Trajectory) -> Self {
        Start::Observed(State { y: traj.outcome(1), l: traj.covariates_at(1) })
    }
}

/// Sequential generative model for `(L_k, Y_k)` given lag-1 history.
pub trait ConditionalModel: Sync {
    /// Names of the covariates in `State::l`, in order.
    fn covariate_names(&self) -> Vec<String>;

    fn step(&self, k: usize, a: u8, a_prev: u8, prev: &State, rng: &mut dyn RngCore) -> Result<State, GfError>;
}

/// Outcomes for times 1..=treatments.len(); with an observed start the
/// first entry is the observed value.
pub(crate) fn generate_states<M: ConditionalModel + ?Sized>(
    model: &M,
    treatments: &[u8],
    start: &Start,
    rng: &mut dyn RngCore,
    mut visit: impl FnMut(usize, &State),
) -> Result<(), GfError> {
    if treatments.is_empty() {
        return Err(GfError::Invalid("treatment sequence is empty".into()));
    }
    let (mut prev, mut a_prev, first) = match start {
        Start::Initial { state, a0 } => (state.clone(), a0.resolve(treatments[0]), 1),
        Start::Observed(state) => {
            visit(1, state);
            (state.clone(), treatments[0], 2)
        }
    };
    for k in first..=treatments.len() {
        let a = treatments[k - 1];
        let next = model.step(k, a, a_prev, &prev, rng)?;
        visit(k, &next);
        prev = next;
        a_prev = a;
    }
    Ok(())
}

pub fn generate<M: ConditionalModel + ?Sized>(
    model: &M,
    treatments: &[u8],
    start: &Start,
    rng: &mut dyn RngCore,
) -> Result<Trajectory, GfError> {
    let names = model.covariate_names();
    let mut y = Vec::with_capacity(treatments.len());
    let mut l: Vec<Vec<f64>> = vec![Vec::with_capacity(treatments.len()); names.len()];
    generate_states(model, treatments, start, rng, |_, s| {
        y.push(s.y);
        for (col, v) in l.iter_mut().zip(&s.l) {
            col.push(*v);
        }
    })?;
    let mut traj = Trajectory::new(treatments.to_vec(), y)?;
    for (name, values) in names.into_iter().zip(l) {
        traj = traj.with_covariate(name, values)?;
    }
    Ok(traj)
}

/// Tabular model with configurable parent sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalModel {
    domains: Domains,
    covariate: Option<String>,
    smoothing: f64,
    outcome: CondTable,
    outcome_valid: Vec<bool>,
    outcome_counts: Vec<f64>,
    cov: CondTable,
    cov_valid: Vec<bool>,
    cov_counts: Vec<f64>,
}

impl CategoricalModel {
    /// The SCM's true tables at level `u`.
    pub fn from_scm(scm: &DiscreteScm, u: usize) -> Self {
        let domains = Domains { y_values: scm.y_values().to_vec(), l_values: scm.l_values().to_vec() };
        let outcome = scm.outcome_table(u).clone();
        let cov = scm.covariate_table(u).clone();
        Self {
            covariate: scm.variant().has_covariate().then(|| "L".to_string()),
            smoothing: 0.0,
            outcome_valid: vec![true; outcome.n_rows()],
            outcome_counts: Vec::new(),
            cov_valid: vec![true; cov.n_rows()],
            cov_counts: Vec::new(),
            domains,
            outcome,
            cov,
        }
    }

    /// Frequency fit. Rows never observed are invalid unless smoothed, and
    /// sampling from an invalid row fails.
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        traj: &Trajectory,
        domains: &Domains,
        covariate: Option<&str>,
        outcome_mask: ParentMask,
        covariate_mask: ParentMask,
        origin: Origin,
        smoothing: f64,
    ) -> Result<Self, GfError> {
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(GfError::Invalid(format!("smoothing must be finite and >= 0, got {smoothing}")));
        }
        let (ys, ls) = domains.encode(traj, covariate)?;
        let a = traj.treatments();
        let sizes = ParentSizes { n_y: domains.n_y(), n_l: domains.n_l() };
        let n_cov_out = if covariate.is_some() { domains.n_l() } else { 1 };
        let cov_mask = if covariate.is_some() { covariate_mask } else { ParentMask::NONE };
        let y_shape = CondTable::uniform(outcome_mask, sizes, sizes.n_y);
        let l_shape = CondTable::uniform(cov_mask, sizes, n_cov_out);
        let mut y_counts = vec![0.0; y_shape.n_rows() * sizes.n_y];
        let mut l_counts = vec![0.0; l_shape.n_rows() * n_cov_out];
        let first = origin.offset() + 1;
        for k in first..=traj.len() {
            let (yp, lp, ap) = match (k, origin) {
                (1, Origin::Initial(init)) => (init.y, init.l, init.a.resolve(a[0])),
                _ => (ys[k - 2], ls[k - 2], a[k - 2]),
            };
            let key = ParentKey { l: ls[k - 1], a: a[k - 1] as usize, y_prev: yp, l_prev: lp, a_prev: ap as usize };
            let lo = if covariate.is_some() { ls[k - 1] } else { 0 };
            l_counts[l_shape.row_index(key) * n_cov_out + lo] += 1.0;
            y_counts[y_shape.row_index(key) * sizes.n_y + ys[k - 1]] += 1.0;
        }
        let (outcome, outcome_valid) = normalize(outcome_mask, sizes, sizes.n_y, &y_counts, smoothing);
        let (cov, cov_valid) = normalize(cov_mask, sizes, n_cov_out, &l_counts, smoothing);
        Ok(Self {
            domains: domains.clone(),
            covariate: covariate.map(str::to_string),
            smoothing,
            outcome,
            outcome_valid,
            outcome_counts: y_counts,
            cov,
            cov_valid,
            cov_counts: l_counts,
        })
    }

    pub fn domains(&self) -> &Domains {
        &self.domains
    }

    pub fn outcome_table(&self) -> &CondTable {
        &self.outcome
    }

    pub fn covariate_table(&self) -> &CondTable {
        &self.cov
    }

    /// Repeated-treatment rows as g-formula kernels.
    pub fn kernels(&self) -> GKernels {
        let d = &self.domains;
        let (n_y, n_l) = (d.n_y(), d.n_l());
        let block = |n_rows: usize, n_out: usize| KernelBlock {
            n_out,
            probs: vec![0.0; n_rows * n_out],
            counts: vec![0.0; n_rows * n_out],
            valid: vec![false; n_rows],
        };
        let mut gy = [block(n_l * n_y * n_l, n_y), block(n_l * n_y * n_l, n_y)];
        let mut gl = [block(n_y * n_l, n_l), block(n_y * n_l, n_l)];
        for x in 0..2 {
            for yp in 0..n_y {
                for lp in 0..n_l {
                    let key = ParentKey { l: 0, a: x, y_prev: yp, l_prev: lp, a_prev: x };
                    let r = yp * n_l + lp;
                    let cr = self.cov.row_index(key);
                    gl[x].valid[r] = self.cov_valid[cr];
                    if self.covariate.is_some() {
                        gl[x].probs[r * n_l..(r + 1) * n_l].copy_from_slice(self.cov.row(key));
                    } else {
                        gl[x].probs[r] = 1.0;
                    }
                    for l in 0..n_l {
                        let key = ParentKey { l, ..key };
                        let r = (l * n_y + yp) * n_l + lp;
                        gy[x].probs[r * n_y..(r + 1) * n_y].copy_from_slice(self.outcome.row(key));
                        gy[x].valid[r] = self.outcome_valid[self.outcome.row_index(key)];
                    }
                }
            }
        }
        GKernels { smoothing: self.smoothing, domains: d.clone(), gy, gl }
    }
}

fn normalize(mask: ParentMask, sizes: ParentSizes, n_out: usize, counts: &[f64], smoothing: f64) -> (CondTable, Vec<bool>) {
    let mut valid = Vec::new();
    let mut rows = counts.chunks(n_out);
    let table = CondTable::from_fn(mask, sizes, n_out, |_| {
        let row = rows.next().expect("counts cover every row");
        let total: f64 = row.iter().sum::<f64>() + smoothing * n_out as f64;
        valid.push(total > 0.0);
        if total > 0.0 {
            row.iter().map(|c| (c + smoothing) / total).collect()
        } else {
            vec![1.0 / n_out as f64; n_out]
        }
    })
    .expect("rows have the declared width");
    (table, valid)
}

impl ConditionalModel for CategoricalModel {
    fn covariate_names(&self) -> Vec<String> {
        self.covariate.iter().cloned().collect()
    }

    fn step(&self, _k: usize, a: u8, a_prev: u8, prev: &State, rng: &mut dyn RngCore) -> Result<State, GfError> {
        let y_prev = self.domains.y_index(prev.y)?;
        let l_prev = match prev.l.first() {
            Some(&v) if self.covariate.is_some() => self.domains.l_index(v)?,
            _ => 0,
        };
        let key = ParentKey { l: 0, a: a as usize, y_prev, l_prev, a_prev: a_prev as usize };
        let u_l: f64 = rng.random();
        let u_y: f64 = rng.random();
        let l = if self.covariate.is_some() {
            let r = self.cov.row_index(key);
            if !self.cov_valid[r] {
                return Err(GfError::NonEstimable { missing: vec![format!("L{}", key.describe(&self.cov.mask()))] });
            }
            inverse_cdf(self.cov.row_by_index(r), u_l)
        } else {
            0
        };
        let key = ParentKey { l, ..key };
        let r = self.outcome.row_index(key);
        if !self.outcome_valid[r] {
            return Err(GfError::NonEstimable { missing: vec![format!("Y{}", key.describe(&self.outcome.mask()))] });
        }
        let y = inverse_cdf(self.outcome.row_by_index(r), u_y);
        let l = if self.covariate.is_some() { vec![self.domains.l_values[l]] } else { Vec::new() };
        Ok(State { y: self.domains.y_values[y], l })
    }
}

/// How a covariate of the Gaussian-linear model evolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateRule {
    /// Linear-Gaussian in `(1, A_k, Y_{k-1}, own L_{k-1})`, redrawn at
    /// times with `(k - 1) % period == 0` and carried forward otherwise.
    Stochastic { name: String, period: usize },
    /// Deterministic: `L_k = values[(k - 1) % values.len()]`.
    Cyclic { name: String, values: Vec<f64> },
}

impl CovariateRule {
    pub fn name(&self) -> &str {
        match self {
            CovariateRule::Stochastic { name, .. } | CovariateRule::Cyclic { name, .. } => name,
        }
    }
}

/// Gaussian linear outcome equation on
/// `(1, A_k, A_{k-1}, Y_{k-1}, L_k, L_{k-1})` with covariates evolving by
/// [`CovariateRule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLinearModel {
    rules: Vec<CovariateRule>,
    outcome_coef: Vec<f64>,
    outcome_sd: f64,
    /// `(coefficients, sd)` for stochastic rules; `None` for cyclic ones.
    covariate_coef: Vec<Option<(Vec<f64>, f64)>>,
}

impl GaussianLinearModel {
    pub fn outcome_width(n_cov: usize) -> usize {
        4 + 2 * n_cov
    }

    pub fn new(
        rules: Vec<CovariateRule>,
        outcome_coef: Vec<f64>,
        outcome_sd: f64,
        covariate_coef: Vec<Option<(Vec<f64>, f64)>>,
    ) -> Result<Self, GfError> {
        if outcome_coef.len() != Self::outcome_width(rules.len()) {
            return Err(GfError::Invalid(format!(
                "outcome equation needs {} coefficients, got {}",
                Self::outcome_width(rules.len()),
                outcome_coef.len()
            )));
        }
        if covariate_coef.len() != rules.len() {
            return Err(GfError::Invalid("one covariate equation slot per rule is required".into()));
        }
        for (rule, c) in rules.iter().zip(&covariate_coef) {
            match (rule, c) {
                (CovariateRule::Stochastic { period, .. }, Some((b, sd))) if *period >= 1 && b.len() == 4 && *sd >= 0.0 => {}
                (CovariateRule::Cyclic { values, .. }, None) if !values.is_empty() => {}
                _ => return Err(GfError::Invalid(format!("covariate {:?} is misspecified", rule.name()))),
            }
        }
        if !(outcome_sd >= 0.0) {
            return Err(GfError::Invalid("outcome sd must be >= 0".into()));
        }
        Ok(Self { rules, outcome_coef, outcome_sd, covariate_coef })
    }

    /// OLS fit conditioning on the first observation (uses k = 2..t).
    pub fn fit(traj: &Trajectory, rules: Vec<CovariateRule>) -> Result<Self, GfError> {
        let cols: Vec<&[f64]> = rules
            .iter()
            .map(|r| traj.covariate(r.name()).map(|c| c.values.as_slice()).ok_or_else(|| GfError::MissingCovariate(r.name().into())))
            .collect::<Result<_, _>>()?;
        let a = traj.treatments();
        let y = traj.outcomes();
        let t = traj.len();
        let mut design = Vec::new();
        let mut response = Vec::new();
        for k in 2..=t {
            let mut row = vec![1.0, a[k - 1] as f64, a[k - 2] as f64, y[k - 2]];
            row.extend(cols.iter().map(|c| c[k - 1]));
            row.extend(cols.iter().map(|c| c[k - 2]));
            design.push(row);
            response.push(y[k - 1]);
        }
        let (outcome_coef, outcome_sd) = ols(&design, &response)?;
        let mut covariate_coef = Vec::new();
        for (j, rule) in rules.iter().enumerate() {
            match rule {
                CovariateRule::Cyclic { .. } => covariate_coef.push(None),
                CovariateRule::Stochastic { period, .. } => {
                    if *period == 0 {
                        return Err(GfError::Invalid("refresh period must be >= 1".into()));
                    }
                    let mut d = Vec::new();
                    let mut r = Vec::new();
                    for k in (2..=t).filter(|k| (k - 1) % period == 0) {
                        d.push(vec![1.0, a[k - 1] as f64, y[k - 2], cols[j][k - 2]]);
                        r.push(cols[j][k - 1]);
                    }
                    covariate_coef.push(Some(ols(&d, &r)?));
                }
            }
        }
        Self::new(rules, outcome_coef, outcome_sd, covariate_coef)
    }

    pub fn outcome_coefficients(&self) -> &[f64] {
        &self.outcome_coef
    }

    pub fn outcome_sd(&self) -> f64 {
        self.outcome_sd
    }
}

/// Least squares via SVD; returns coefficients and residual SD.
fn ols(design: &[Vec<f64>], response: &[f64]) -> Result<(Vec<f64>, f64), GfError> {
    let n = design.len();
    let p = design.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(GfError::Invalid("no rows to fit".into()));
    }
    let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let yv = DVector::from_column_slice(response);
    let svd = x.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max().max(1.0);
    let rank = svd.rank(tol);
    if n <= rank {
        return Err(GfError::Invalid(format!("{n} observations cannot fit {rank} free coefficients")));
    }
    let beta = svd.solve(&yv, tol).map_err(|e| GfError::Invalid(e.to_string()))?;
    let rss = (&x * &beta - &yv).norm_squared();
    Ok((beta.iter().copied().collect(), (rss / (n - rank) as f64).sqrt()))
}

impl ConditionalModel for GaussianLinearModel {
    fn covariate_names(&self) -> Vec<String> {
        self.rules.iter().map(|r| r.name().to_string()).collect()
    }

    fn step(&self, k: usize, a: u8, a_prev: u8, prev: &State, rng: &mut dyn RngCore) -> Result<State, GfError> {
        if prev.l.len() != self.rules.len() {
            return Err(GfError::Invalid(format!("state has {} covariates, model has {}", prev.l.len(), self.rules.len())));
        }
        let mut l = Vec::with_capacity(self.rules.len());
        for (j, rule) in self.rules.iter().enumerate() {
            let v = match (rule, &self.covariate_coef[j]) {
                (CovariateRule::Cyclic { values, .. }, _) => values[(k - 1) % values.len()],
                (CovariateRule::Stochastic { period, .. }, Some((b, sd))) => {
                    if (k - 1) % period == 0 {
                        let z: f64 = rng.sample(StandardNormal);
                        b[0] + b[1] * a as f64 + b[2] * prev.y + b[3] * prev.l[j] + sd * z
                    } else {
                        prev.l[j]
                    }
                }
                (CovariateRule::Stochastic { .. }, None) => unreachable!("validated at construction"),
            };
            l.push(v);
        }
        let c = &self.outcome_coef;
        let n = self.rules.len();
        let mut mean = c[0] + c[1] * a as f64 + c[2] * a_prev as f64 + c[3] * prev.y;
        for j in 0..n {
            mean += c[4 + j] * l[j] + c[4 + n + j] * prev.l[j];
        }
        let z: f64 = rng.sample(StandardNormal);
        Ok(State { y: mean + self.outcome_sd * z, l })
    }
}
