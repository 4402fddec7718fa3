use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{ExactModel, NoiseRecord, ScmError, StructuralModel};
use crate::kernel::{inverse_cdf, CondTable, KernelError, ParentKey, ParentMask, ParentSizes};
use crate::numeric::compensated_sum;
use crate::trajectory::Trajectory;

/// Which structural equations the kernels encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `Y_k = f(A_k, U, eps_k)`; no covariate.
    Basic,
    /// `L_k = f(A_k, Y_{k-1}, L_{k-1}, U, gamma_k)`,
    /// `Y_k = f(L_k, A_k, Y_{k-1}, L_{k-1}, A_{k-1}, U, eps_k)`.
    Relaxed,
    /// `L_k = f(L_{k-1}, U)`, `Y_k = f(L_k, A_k, L_{k-1}, U)`; no carryover.
    TimeTrend,
}

impl Variant {
    pub fn outcome_mask(self) -> ParentMask {
        match self {
            Variant::Basic => ParentMask::OUTCOME_BASIC,
            Variant::Relaxed => ParentMask::OUTCOME_RELAXED,
            Variant::TimeTrend => ParentMask::OUTCOME_TIME_TREND,
        }
    }

    pub fn covariate_mask(self) -> ParentMask {
        match self {
            Variant::Basic => ParentMask::NONE,
            Variant::Relaxed => ParentMask::COVARIATE_RELAXED,
            Variant::TimeTrend => ParentMask::COVARIATE_TIME_TREND,
        }
    }

    pub fn has_covariate(self) -> bool {
        self != Variant::Basic
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::Relaxed => "relaxed",
            Variant::TimeTrend => "time_trend",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ULevel {
    pub name: String,
    pub weight: f64,
}

/// Value used for `A_0` when evaluating the time-1 kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialTreatment {
    Fixed(u8),
    /// `A_0 = A_1`, so time 1 counts as a repeated treatment.
    MatchFirst,
}

impl InitialTreatment {
    pub fn resolve(self, first: u8) -> u8 {
        match self {
            InitialTreatment::Fixed(a) => a,
            InitialTreatment::MatchFirst => first,
        }
    }
}

/// Fixed values of `(Y_0, L_0, A_0)`, as level indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialState {
    pub y: usize,
    pub l: usize,
    pub a: InitialTreatment,
}

impl Default for InitialState {
    fn default() -> Self {
        Self { y: 0, l: 0, a: InitialTreatment::Fixed(0) }
    }
}

/// Tabular SCM with one outcome and (optionally) one covariate table per
/// baseline level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteScm {
    variant: Variant,
    y_values: Vec<f64>,
    l_values: Vec<f64>,
    u_levels: Vec<ULevel>,
    outcome: Vec<CondTable>,
    covariate: Vec<CondTable>,
    initial: InitialState,
    positive: bool,
}

pub struct DiscreteScmBuilder {
    variant: Variant,
    y_values: Vec<f64>,
    l_values: Vec<f64>,
    initial: InitialState,
    positive: bool,
    levels: Vec<(ULevel, CondTable, CondTable)>,
    error: Option<ScmError>,
}

impl DiscreteScmBuilder {
    /// Outcome labels; must be set before adding levels.
    pub fn y_values(mut self, values: Vec<f64>) -> Self {
        self.y_values = values;
        self
    }

    /// Covariate labels; ignored for the basic variant.
    pub fn l_values(mut self, values: Vec<f64>) -> Self {
        if self.variant.has_covariate() {
            self.l_values = values;
        }
        self
    }

    pub fn initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn positive(mut self, positive: bool) -> Self {
        self.positive = positive;
        self
    }

    fn sizes(&self) -> ParentSizes {
        ParentSizes { n_y: self.y_values.len(), n_l: self.l_values.len() }
    }

    /// Add a baseline level whose kernels are given as functions of the
    /// parent key. `covariate` is not called for the basic variant.
    pub fn u_level(
        mut self,
        name: impl Into<String>,
        weight: f64,
        outcome: impl FnMut(ParentKey) -> Vec<f64>,
        covariate: impl FnMut(ParentKey) -> Vec<f64>,
    ) -> Self {
        let name = name.into();
        let sizes = self.sizes();
        let tables = CondTable::from_fn(self.variant.outcome_mask(), sizes, sizes.n_y, outcome)
            .map_err(|e| (e, "outcome"))
            .and_then(|y| {
                let l = if self.variant.has_covariate() {
                    CondTable::from_fn(self.variant.covariate_mask(), sizes, sizes.n_l, covariate)
                } else {
                    CondTable::from_fn(ParentMask::NONE, sizes, 1, |_| vec![1.0])
                };
                l.map(|l| (y, l)).map_err(|e| (e, "covariate"))
            });
        match tables {
            Ok((y, l)) => self.levels.push((ULevel { name, weight }, y, l)),
            Err((source, role)) => {
                self.error.get_or_insert(ScmError::Kernel { role, u: name, source });
            }
        }
        self
    }

    /// Add a baseline level from prebuilt tables. For the basic variant
    /// `covariate` may be `None`.
    pub fn u_level_tables(
        mut self,
        name: impl Into<String>,
        weight: f64,
        outcome: CondTable,
        covariate: Option<CondTable>,
    ) -> Self {
        let sizes = self.sizes();
        let covariate = covariate.unwrap_or_else(|| CondTable::uniform(ParentMask::NONE, sizes, 1));
        self.levels.push((ULevel { name: name.into(), weight }, outcome, covariate));
        self
    }

    pub fn build(self) -> Result<DiscreteScm, ScmError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let n_y = self.y_values.len();
        let n_l = self.l_values.len();
        if n_y == 0 {
            return Err(ScmError::Invalid("outcome domain is empty".into()));
        }
        if n_l == 0 {
            return Err(ScmError::Invalid("covariate domain is empty".into()));
        }
        if self.y_values.iter().chain(&self.l_values).any(|v| !v.is_finite()) {
            return Err(ScmError::Invalid("domain labels must be finite".into()));
        }
        if self.levels.is_empty() {
            return Err(ScmError::Invalid("at least one u level is required".into()));
        }
        if self.initial.y >= n_y || self.initial.l >= n_l {
            return Err(ScmError::Invalid(format!(
                "initial state (y={}, l={}) is outside the domains",
                self.initial.y, self.initial.l
            )));
        }
        if let InitialTreatment::Fixed(a) = self.initial.a {
            if a > 1 {
                return Err(ScmError::NonBinary(a));
            }
        }
        let sizes = ParentSizes { n_y, n_l };
        let mut u_levels = Vec::new();
        let mut outcome = Vec::new();
        let mut covariate = Vec::new();
        for (level, y, l) in self.levels {
            if !(level.weight >= 0.0 && level.weight.is_finite()) {
                return Err(ScmError::Invalid(format!("u level {:?} has weight {}", level.name, level.weight)));
            }
            if u_levels.iter().any(|u: &ULevel| u.name == level.name) {
                return Err(ScmError::Invalid(format!("duplicate u level {:?}", level.name)));
            }
            let wrap = |role, source| ScmError::Kernel { role, u: level.name.clone(), source };
            check_shape(&y, self.variant.outcome_mask(), sizes, n_y).map_err(|e| wrap("outcome", e))?;
            y.validate(self.positive).map_err(|e| wrap("outcome", e))?;
            if self.variant.has_covariate() {
                check_shape(&l, self.variant.covariate_mask(), sizes, n_l).map_err(|e| wrap("covariate", e))?;
                l.validate(self.positive).map_err(|e| wrap("covariate", e))?;
            }
            u_levels.push(level);
            outcome.push(y);
            covariate.push(l);
        }
        let total = compensated_sum(u_levels.iter().map(|u| u.weight));
        if (total - 1.0).abs() > 1e-12 {
            return Err(ScmError::Invalid(format!("u weights sum to {total}, expected 1")));
        }
        Ok(DiscreteScm {
            variant: self.variant,
            y_values: self.y_values,
            l_values: self.l_values,
            u_levels,
            outcome,
            covariate,
            initial: self.initial,
            positive: self.positive,
        })
    }
}

fn check_shape(t: &CondTable, mask: ParentMask, sizes: ParentSizes, n_out: usize) -> Result<(), KernelError> {
    if t.mask() != mask || t.sizes() != sizes || t.n_out() != n_out {
        return Err(KernelError::RowWidth {
            row: "table shape".into(),
            got: t.n_out(),
            expected: n_out,
        });
    }
    Ok(())
}

impl DiscreteScm {
    pub fn builder(variant: Variant) -> DiscreteScmBuilder {
        DiscreteScmBuilder {
            variant,
            y_values: Vec::new(),
            l_values: vec![0.0],
            initial: InitialState::default(),
            positive: false,
            levels: Vec::new(),
            error: None,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y_values
    }

    /// Covariate labels; a single implicit level for the basic variant.
    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    pub fn sizes(&self) -> ParentSizes {
        ParentSizes { n_y: self.y_values.len(), n_l: self.l_values.len() }
    }

    pub fn u_levels(&self) -> &[ULevel] {
        &self.u_levels
    }

    pub fn u_index(&self, name: &str) -> Result<usize, ScmError> {
        self.u_levels
            .iter()
            .position(|u| u.name == name)
            .ok_or_else(|| ScmError::UnknownULabel(name.into()))
    }

    pub fn outcome_table(&self, u: usize) -> &CondTable {
        &self.outcome[u]
    }

    pub fn covariate_table(&self, u: usize) -> &CondTable {
        &self.covariate[u]
    }

    pub fn initial(&self) -> InitialState {
        self.initial
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    fn check_u(&self, u: usize) -> Result<(), ScmError> {
        if u >= self.u_levels.len() {
            return Err(ScmError::UnknownU(u));
        }
        Ok(())
    }

    /// Joint `(Y_m, L_m)` distribution for m = 1..=len under a forced
    /// treatment sequence. Entry `y * |L| + l` of each vector.
    pub fn state_distributions(&self, u: usize, treatments: &[u8]) -> Result<Vec<Vec<f64>>, ScmError> {
        self.check_u(u)?;
        if let Some(&x) = treatments.iter().find(|&&x| x > 1) {
            return Err(ScmError::NonBinary(x));
        }
        let (n_y, n_l) = (self.y_values.len(), self.l_values.len());
        let out = &self.outcome[u];
        let cov = &self.covariate[u];
        let mut w = vec![0.0; n_y * n_l];
        w[self.initial.y * n_l + self.initial.l] = 1.0;
        let mut a_prev = match treatments.first() {
            Some(&a1) => self.initial.a.resolve(a1),
            None => return Ok(Vec::new()),
        };
        let mut series = Vec::with_capacity(treatments.len());
        for &a in treatments {
            let mut next = vec![0.0; n_y * n_l];
            for yp in 0..n_y {
                for lp in 0..n_l {
                    let mass = w[yp * n_l + lp];
                    if mass == 0.0 {
                        continue;
                    }
                    let base = ParentKey { l: 0, a: a as usize, y_prev: yp, l_prev: lp, a_prev: a_prev as usize };
                    let lrow = cov.row(base);
                    for (l, &pl) in lrow.iter().enumerate() {
                        if pl == 0.0 {
                            continue;
                        }
                        let yrow = out.row(ParentKey { l, ..base });
                        for (y, &py) in yrow.iter().enumerate() {
                            next[y * n_l + l] += mass * pl * py;
                        }
                    }
                }
            }
            series.push(next.clone());
            w = next;
            a_prev = a;
        }
        Ok(series)
    }

    fn draw_step(&self, u: usize, key: ParentKey, u_cov: f64, u_out: f64) -> (usize, usize) {
        let l = if self.variant.has_covariate() {
            inverse_cdf(self.covariate[u].row(key), u_cov)
        } else {
            0
        };
        let y = inverse_cdf(self.outcome[u].row(ParentKey { l, ..key }), u_out);
        (y, l)
    }
}

impl StructuralModel for DiscreteScm {
    fn u_count(&self) -> usize {
        self.u_levels.len()
    }

    fn u_name(&self, u: usize) -> String {
        self.u_levels.get(u).map(|l| l.name.clone()).unwrap_or_else(|| u.to_string())
    }

    fn draw_noise(&self, t: usize, rng: &mut dyn RngCore) -> NoiseRecord {
        let mut outcome = Vec::with_capacity(t);
        let mut covariate = Vec::with_capacity(t);
        for _ in 0..t {
            covariate.push(rng.random::<f64>());
            outcome.push(rng.random::<f64>());
        }
        NoiseRecord { outcome, covariate }
    }

    fn realize(&self, u: usize, treatments: &[u8], noise: &NoiseRecord) -> Result<Trajectory, ScmError> {
        self.check_u(u)?;
        if treatments.is_empty() {
            return Err(ScmError::EmptyHorizon);
        }
        if let Some(&x) = treatments.iter().find(|&&x| x > 1) {
            return Err(ScmError::NonBinary(x));
        }
        noise.check(treatments.len())?;
        let mut y_prev = self.initial.y;
        let mut l_prev = self.initial.l;
        let mut a_prev = self.initial.a.resolve(treatments[0]);
        let mut ys = Vec::with_capacity(treatments.len());
        let mut ls = Vec::with_capacity(treatments.len());
        for (m, &a) in treatments.iter().enumerate() {
            let key = ParentKey { l: 0, a: a as usize, y_prev, l_prev, a_prev: a_prev as usize };
            let (y, l) = self.draw_step(u, key, noise.covariate[m], noise.outcome[m]);
            ys.push(self.y_values[y]);
            ls.push(self.l_values[l]);
            y_prev = y;
            l_prev = l;
            a_prev = a;
        }
        let mut traj = Trajectory::new(treatments.to_vec(), ys)?.with_u_label(self.u_levels[u].name.clone());
        if self.variant.has_covariate() {
            traj = traj.with_covariate("L", ls)?;
        }
        Ok(traj)
    }
}

impl ExactModel for DiscreteScm {
    fn u_weights(&self) -> Vec<f64> {
        self.u_levels.iter().map(|u| u.weight).collect()
    }

    fn mean_under(&self, u: usize, treatments: &[u8]) -> Result<Vec<f64>, ScmError> {
        let n_l = self.l_values.len();
        Ok(self
            .state_distributions(u, treatments)?
            .iter()
            .map(|w| compensated_sum(w.iter().enumerate().map(|(i, p)| p * self.y_values[i / n_l])))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Schedule;
    use crate::scm::{simulate, true_ace, true_ucate, Regime};

    fn point_mass_basic() -> DiscreteScm {
        DiscreteScm::builder(Variant::Basic)
            .y_values(vec![0.0, 1.0])
            .u_level("u", 1.0, |k| if k.a == 1 { vec![0.0, 1.0] } else { vec![1.0, 0.0] }, |_| vec![])
            .build()
            .unwrap()
    }

    #[test]
    fn point_mass_follows_treatment() {
        let scm = point_mass_basic();
        let z: Schedule = "10".parse().unwrap();
        let tr = simulate(&scm, 0, &Regime::Natural(z), 4, 5).unwrap();
        assert_eq!(tr.outcomes(), &[1.0, 0.0, 1.0, 0.0]);
        assert!(tr.covariate("L").is_none());
        assert_eq!(true_ucate(&scm, 0, 3).unwrap(), 1.0);
    }

    #[test]
    fn symmetric_effects_cancel_in_ace() {
        let scm = DiscreteScm::builder(Variant::Basic)
            .y_values(vec![0.0, 1.0])
            .u_level("hi", 0.5, |k| if k.a == 1 { vec![0.3, 0.7] } else { vec![0.5, 0.5] }, |_| vec![])
            .u_level("lo", 0.5, |k| if k.a == 1 { vec![0.7, 0.3] } else { vec![0.5, 0.5] }, |_| vec![])
            .build()
            .unwrap();
        assert!((true_ucate(&scm, 0, 2).unwrap() - 0.2).abs() < 1e-15);
        assert!((true_ucate(&scm, 1, 2).unwrap() + 0.2).abs() < 1e-15);
        assert!(true_ace(&scm, 2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn builder_reports_bad_kernels() {
        let err = DiscreteScm::builder(Variant::Basic)
            .y_values(vec![0.0, 1.0])
            .u_level("u", 1.0, |_| vec![0.5, 0.6], |_| vec![])
            .build()
            .unwrap_err();
        assert!(matches!(err, ScmError::Kernel { role: "outcome", .. }));
        let err = DiscreteScm::builder(Variant::Basic)
            .y_values(vec![0.0, 1.0])
            .u_level("u", 0.7, |_| vec![0.5, 0.5], |_| vec![])
            .build()
            .unwrap_err();
        assert!(matches!(err, ScmError::Invalid(_)));
        let err = DiscreteScm::builder(Variant::Relaxed)
            .y_values(vec![0.0, 1.0])
            .l_values(vec![0.0, 1.0])
            .positive(true)
            .u_level("u", 1.0, |_| vec![0.5, 0.5], |_| vec![1.0, 0.0])
            .build()
            .unwrap_err();
        assert!(matches!(err, ScmError::Kernel { role: "covariate", source: KernelError::NotPositive { .. }, .. }));
    }

    #[test]
    fn relaxed_state_mass_is_conserved() {
        let scm = DiscreteScm::builder(Variant::Relaxed)
            .y_values(vec![0.0, 1.0, 2.0])
            .l_values(vec![0.0, 1.0])
            .u_level(
                "u",
                1.0,
                |k| {
                    let p = 0.1 + 0.1 * (k.l + k.a + k.y_prev + k.a_prev) as f64;
                    vec![p, 0.5 - p / 2.0, 0.5 - p / 2.0]
                },
                |k| {
                    let p = 0.2 + 0.15 * (k.a + k.y_prev) as f64;
                    vec![p, 1.0 - p]
                },
            )
            .build()
            .unwrap();
        for w in scm.state_distributions(0, &[1, 0, 0, 1, 1, 0, 1]).unwrap() {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
