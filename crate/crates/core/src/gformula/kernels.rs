use serde::{Deserialize, Serialize};

use super::{index_sets, Domains, GfError, Origin};
use crate::kernel::ParentKey;
use crate::numeric::compensated_sum;
use crate::scm::DiscreteScm;
use crate::trajectory::Trajectory;

const CONSERVATION_TOL: f64 = 1e-12;

/// Level indices of the state the recursion starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartState {
    pub y: usize,
    pub l: usize,
}

impl StartState {
    /// Observed values at time 1.
    pub fn first_observation(traj: &Trajectory, domains: &Domains, covariate: Option<&str>) -> Result<Self, GfError> {
        let (y, l) = domains.encode(traj, covariate)?;
        Ok(Self { y: y[0], l: l[0] })
    }

    pub fn for_origin(origin: &Origin, traj: &Trajectory, domains: &Domains, covariate: Option<&str>) -> Result<Self, GfError> {
        match origin {
            Origin::Initial(init) => Ok(Self { y: init.y, l: init.l }),
            Origin::FirstObservation => Self::first_observation(traj, domains, covariate),
        }
    }
}

/// Rows of one conditional distribution with their raw counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBlock {
    pub n_out: usize,
    pub probs: Vec<f64>,
    pub counts: Vec<f64>,
    /// False for rows with no observations and no smoothing.
    pub valid: Vec<bool>,
}

impl KernelBlock {
    fn empty(n_rows: usize, n_out: usize) -> Self {
        Self { n_out, probs: vec![0.0; n_rows * n_out], counts: vec![0.0; n_rows * n_out], valid: vec![false; n_rows] }
    }

    pub fn n_rows(&self) -> usize {
        self.valid.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.n_out..(r + 1) * self.n_out]
    }

    pub fn row_count(&self, r: usize) -> f64 {
        self.counts[r * self.n_out..(r + 1) * self.n_out].iter().sum()
    }

    fn normalize(&mut self, smoothing: f64) {
        let n = self.n_out;
        for r in 0..self.n_rows() {
            let total = self.row_count(r) + smoothing * n as f64;
            if total > 0.0 {
                for j in 0..n {
                    self.probs[r * n + j] = (self.counts[r * n + j] + smoothing) / total;
                }
                self.valid[r] = true;
            }
        }
    }
}

/// `gY_x(y | l, y', l')` from times with `A_k = A_{k-1} = x` and
/// `gL_x(l | y', l')` from times with `A_k = x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GKernels {
    pub smoothing: f64,
    pub domains: Domains,
    pub gy: [KernelBlock; 2],
    pub gl: [KernelBlock; 2],
}

impl GKernels {
    pub fn gy_row(&self, l: usize, y_prev: usize, l_prev: usize) -> usize {
        (l * self.domains.n_y() + y_prev) * self.domains.n_l() + l_prev
    }

    pub fn gl_row(&self, y_prev: usize, l_prev: usize) -> usize {
        y_prev * self.domains.n_l() + l_prev
    }

    pub fn gy(&self, x: u8, l: usize, y_prev: usize, l_prev: usize) -> &[f64] {
        self.gy[x as usize].row(self.gy_row(l, y_prev, l_prev))
    }

    pub fn gl(&self, x: u8, y_prev: usize, l_prev: usize) -> &[f64] {
        self.gl[x as usize].row(self.gl_row(y_prev, l_prev))
    }

    fn describe_gy(x: u8, l: usize, y_prev: usize, l_prev: usize) -> String {
        format!("gY[x={x}](l={l}, y_prev={y_prev}, l_prev={l_prev})")
    }

    fn describe_gl(x: u8, y_prev: usize, l_prev: usize) -> String {
        format!("gL[x={x}](y_prev={y_prev}, l_prev={l_prev})")
    }

    /// The g-formula kernels implied by an SCM's true tables at level `u`.
    pub fn from_scm(scm: &DiscreteScm, u: usize) -> Self {
        let domains = Domains { y_values: scm.y_values().to_vec(), l_values: scm.l_values().to_vec() };
        let (n_y, n_l) = (domains.n_y(), domains.n_l());
        let mut gy = [KernelBlock::empty(n_l * n_y * n_l, n_y), KernelBlock::empty(n_l * n_y * n_l, n_y)];
        let mut gl = [KernelBlock::empty(n_y * n_l, n_l), KernelBlock::empty(n_y * n_l, n_l)];
        for x in 0..2 {
            for yp in 0..n_y {
                for lp in 0..n_l {
                    let key = ParentKey { l: 0, a: x, y_prev: yp, l_prev: lp, a_prev: x };
                    let r = yp * n_l + lp;
                    gl[x].probs[r * n_l..(r + 1) * n_l].copy_from_slice(scm.covariate_table(u).row(key));
                    gl[x].valid[r] = true;
                    for l in 0..n_l {
                        let r = (l * n_y + yp) * n_l + lp;
                        gy[x].probs[r * n_y..(r + 1) * n_y].copy_from_slice(scm.outcome_table(u).row(ParentKey { l, ..key }));
                        gy[x].valid[r] = true;
                    }
                }
            }
        }
        Self { smoothing: 0.0, domains, gy, gl }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("kernel dumps contain only numbers and booleans")
    }

    pub fn from_toml(text: &str) -> Result<Self, GfError> {
        let k: Self = toml::from_str(text).map_err(|e| GfError::Invalid(e.to_string()))?;
        let (n_y, n_l) = (k.domains.n_y(), k.domains.n_l());
        for x in 0..2 {
            let shapes = [(&k.gy[x], n_l * n_y * n_l, n_y), (&k.gl[x], n_y * n_l, n_l)];
            for (b, rows, out) in shapes {
                if b.n_out != out || b.valid.len() != rows || b.probs.len() != rows * out || b.counts.len() != rows * out {
                    return Err(GfError::Invalid("kernel dump has inconsistent table shapes".into()));
                }
            }
        }
        Ok(k)
    }

    /// Rows that the forward pass can reach with positive mass over
    /// `steps` steps from `start` but that are not valid.
    pub fn reachable_gaps(&self, start: StartState, steps: usize) -> Vec<String> {
        let (n_y, n_l) = (self.domains.n_y(), self.domains.n_l());
        let mut missing = Vec::new();
        for x in 0..2u8 {
            let mut reach = vec![false; n_y * n_l];
            reach[start.y * n_l + start.l] = true;
            let mut seen = reach.clone();
            for _ in 0..steps {
                let mut next = vec![false; n_y * n_l];
                for yp in 0..n_y {
                    for lp in 0..n_l {
                        if !reach[yp * n_l + lp] {
                            continue;
                        }
                        if !self.gl[x as usize].valid[self.gl_row(yp, lp)] {
                            missing.push(Self::describe_gl(x, yp, lp));
                            continue;
                        }
                        for (l, &pl) in self.gl(x, yp, lp).iter().enumerate() {
                            if pl == 0.0 {
                                continue;
                            }
                            if !self.gy[x as usize].valid[self.gy_row(l, yp, lp)] {
                                missing.push(Self::describe_gy(x, l, yp, lp));
                                continue;
                            }
                            for (y, &py) in self.gy(x, l, yp, lp).iter().enumerate() {
                                if py > 0.0 {
                                    next[y * n_l + l] = true;
                                }
                            }
                        }
                    }
                }
                let fresh: Vec<bool> = next.iter().zip(&seen).map(|(n, s)| *n && !*s).collect();
                if !fresh.iter().any(|&f| f) {
                    break;
                }
                for (s, f) in seen.iter_mut().zip(&fresh) {
                    *s |= *f;
                }
                reach = fresh;
            }
        }
        missing.sort();
        missing.dedup();
        missing
    }
}

/// Frequency estimates of the g-formula kernels from one trajectory.
///
/// Cell probability is `(count + smoothing) / (row total + smoothing * n)`.
/// With zero smoothing, any row the forward pass would need over the
/// trajectory's horizon must have been observed.
pub fn fit_kernels(
    traj: &Trajectory,
    domains: &Domains,
    covariate: Option<&str>,
    origin: Origin,
    smoothing: f64,
) -> Result<GKernels, GfError> {
    let k = count_kernels(traj, domains, covariate, origin, smoothing)?;
    if smoothing == 0.0 {
        let start = StartState::for_origin(&origin, traj, domains, covariate)?;
        let missing = k.reachable_gaps(start, traj.len() - origin.offset());
        if !missing.is_empty() {
            return Err(GfError::NonEstimable { missing });
        }
    }
    Ok(k)
}

/// Like [`fit_kernels`] but leaves unobserved rows flagged instead of
/// failing; [`theta_series`] still refuses to use them.
pub fn count_kernels(
    traj: &Trajectory,
    domains: &Domains,
    covariate: Option<&str>,
    origin: Origin,
    smoothing: f64,
) -> Result<GKernels, GfError> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(GfError::Invalid(format!("smoothing must be finite and >= 0, got {smoothing}")));
    }
    let (ys, ls) = domains.encode(traj, covariate)?;
    let a = traj.treatments();
    let a0 = match origin {
        Origin::Initial(init) => Some(init.a.resolve(a[0])),
        Origin::FirstObservation => None,
    };
    let sets = index_sets(a, a0);
    for x in 0..2u8 {
        if sets.doubled[x as usize].is_empty() {
            return Err(GfError::EmptyDoubledSet { arm: x });
        }
    }
    let (n_y, n_l) = (domains.n_y(), domains.n_l());
    let mut k = GKernels {
        smoothing,
        domains: domains.clone(),
        gy: [KernelBlock::empty(n_l * n_y * n_l, n_y), KernelBlock::empty(n_l * n_y * n_l, n_y)],
        gl: [KernelBlock::empty(n_y * n_l, n_l), KernelBlock::empty(n_y * n_l, n_l)],
    };
    let parents = |t: usize| -> (usize, usize) {
        match (t, origin) {
            (1, Origin::Initial(init)) => (init.y, init.l),
            _ => (ys[t - 2], ls[t - 2]),
        }
    };
    for x in 0..2 {
        for &t in &sets.single[x] {
            let (yp, lp) = parents(t);
            let r = k.gl_row(yp, lp);
            k.gl[x].counts[r * n_l + ls[t - 1]] += 1.0;
        }
        for &t in &sets.doubled[x] {
            let (yp, lp) = parents(t);
            let r = k.gy_row(ls[t - 1], yp, lp);
            k.gy[x].counts[r * n_y + ys[t - 1]] += 1.0;
        }
        k.gl[x].normalize(smoothing);
        k.gy[x].normalize(smoothing);
    }
    Ok(k)
}

/// `theta_m(x)` for m = 1..=k_max steps after the start state.
pub fn theta_series(kernels: &GKernels, k_max: usize, x: u8, start: StartState) -> Result<Vec<f64>, GfError> {
    if x > 1 {
        return Err(GfError::Invalid(format!("treatment {x} is not binary")));
    }
    let (n_y, n_l) = (kernels.domains.n_y(), kernels.domains.n_l());
    if start.y >= n_y || start.l >= n_l {
        return Err(GfError::Invalid("start state is outside the domains".into()));
    }
    let xi = x as usize;
    let mut w = vec![0.0; n_y * n_l];
    w[start.y * n_l + start.l] = 1.0;
    let mut out = Vec::with_capacity(k_max);
    for step in 1..=k_max {
        let mut next = vec![0.0; n_y * n_l];
        for yp in 0..n_y {
            for lp in 0..n_l {
                let mass = w[yp * n_l + lp];
                if mass == 0.0 {
                    continue;
                }
                if !kernels.gl[xi].valid[kernels.gl_row(yp, lp)] {
                    return Err(GfError::NonEstimable { missing: vec![GKernels::describe_gl(x, yp, lp)] });
                }
                for (l, &pl) in kernels.gl(x, yp, lp).iter().enumerate() {
                    if pl == 0.0 {
                        continue;
                    }
                    if !kernels.gy[xi].valid[kernels.gy_row(l, yp, lp)] {
                        return Err(GfError::NonEstimable { missing: vec![GKernels::describe_gy(x, l, yp, lp)] });
                    }
                    for (y, &py) in kernels.gy(x, l, yp, lp).iter().enumerate() {
                        next[y * n_l + l] += mass * pl * py;
                    }
                }
            }
        }
        let total = compensated_sum(next.iter().copied());
        if (total - 1.0).abs() > CONSERVATION_TOL {
            return Err(GfError::Conservation { step, total });
        }
        out.push(compensated_sum(next.iter().enumerate().map(|(i, p)| p * kernels.domains.y_values[i / n_l])));
        w = next;
    }
    Ok(out)
}

pub fn theta_dp(kernels: &GKernels, k: usize, x: u8, start: StartState) -> Result<f64, GfError> {
    if k == 0 {
        return Err(GfError::BadTime { k });
    }
    Ok(theta_series(kernels, k, x, start)?[k - 1])
}

/// `theta(1) - theta(0)` for m = 1..=k_max.
pub fn ucate_series(kernels: &GKernels, k_max: usize, start: StartState) -> Result<Vec<f64>, GfError> {
    let t1 = theta_series(kernels, k_max, 1, start)?;
    let t0 = theta_series(kernels, k_max, 0, start)?;
    Ok(t1.iter().zip(&t0).map(|(a, b)| a - b).collect())
}

pub fn ucate_hat_gformula(kernels: &GKernels, k: usize, start: StartState) -> Result<f64, GfError> {
    Ok(theta_dp(kernels, k, 1, start)? - theta_dp(kernels, k, 0, start)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Schedule;
    use crate::scm::{simulate, InitialState, InitialTreatment, Regime, Variant};

    fn relaxed() -> DiscreteScm {
        DiscreteScm::builder(Variant::Relaxed)
            .y_values(vec![0.0, 1.0])
            .l_values(vec![0.0, 1.0])
            .initial(InitialState { y: 0, l: 0, a: InitialTreatment::MatchFirst })
            .u_level(
                "u",
                1.0,
                |k| {
                    let p = 0.15 + 0.2 * k.a as f64 + 0.1 * k.a_prev as f64 + 0.2 * k.y_prev as f64 + 0.1 * k.l as f64;
                    vec![1.0 - p, p]
                },
                |k| {
                    let p = 0.3 + 0.2 * k.a as f64 + 0.2 * k.y_prev as f64 - 0.1 * k.l_prev as f64;
                    vec![1.0 - p, p]
                },
            )
            .build()
            .unwrap()
    }

    #[test]
    fn point_mass_trajectory_gives_point_mass_rows() {
        let scm = DiscreteScm::builder(Variant::Basic)
            .y_values(vec![0.0, 1.0])
            .u_level("u", 1.0, |k| if k.a == 1 { vec![0.0, 1.0] } else { vec![1.0, 0.0] }, |_| vec![])
            .build()
            .unwrap();
        let tr = simulate(&scm, 0, &Regime::Natural("0011".parse().unwrap()), 16, 1).unwrap();
        let d = Domains::new(vec![0.0, 1.0], vec![0.0]).unwrap();
        assert!(matches!(fit_kernels(&tr, &d, None, Origin::FirstObservation, 0.0), Err(GfError::NonEstimable { .. })));
        let k = count_kernels(&tr, &d, None, Origin::FirstObservation, 0.0).unwrap();
        assert!(k.gy[1].valid.iter().any(|&v| v));
        for r in 0..k.gy[1].n_rows() {
            if k.gy[1].valid[r] {
                assert_eq!(k.gy[1].row(r), &[0.0, 1.0]);
            }
        }
    }

    #[test]
    fn true_kernels_reproduce_exact_means() {
        let scm = relaxed();
        let k = GKernels::from_scm(&scm, 0);
        let start = StartState { y: 0, l: 0 };
        for x in 0..2u8 {
            let theta = theta_series(&k, 6, x, start).unwrap();
            let exact = crate::scm::ExactModel::counterfactual_means(&scm, 0, x, 6).unwrap();
            for (a, b) in theta.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn long_trajectory_recovers_kernels() {
        let scm = relaxed();
        // rare parent rows need ~10^6 steps for a 0.02 bound on every cell
        let tr = simulate(&scm, 0, &Regime::Natural(Schedule::blocks(3, 3).unwrap()), 1_000_000, 17).unwrap();
        let d = Domains::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let origin = Origin::Initial(scm.initial());
        let fitted = fit_kernels(&tr, &d, Some("L"), origin, 0.0).unwrap();
        let truth = GKernels::from_scm(&scm, 0);
        for x in 0..2 {
            for (a, b) in fitted.gy[x].probs.iter().zip(&truth.gy[x].probs) {
                assert!((a - b).abs() < 0.02, "{a} vs {b}");
            }
            for (a, b) in fitted.gl[x].probs.iter().zip(&truth.gl[x].probs) {
                assert!((a - b).abs() < 0.02, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn short_trajectory_is_not_estimable() {
        let tr = Trajectory::new(vec![1, 0, 0], vec![1.0, 0.0, 1.0]).unwrap().with_covariate("L", vec![0.0, 1.0, 1.0]).unwrap();
        let d = Domains::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let origin = Origin::Initial(InitialState { y: 0, l: 0, a: InitialTreatment::MatchFirst });
        match fit_kernels(&tr, &d, Some("L"), origin, 0.0) {
            Err(GfError::NonEstimable { missing }) => assert!(!missing.is_empty(), "{missing:?}"),
            other => panic!("{other:?}"),
        }
        assert!(fit_kernels(&tr, &d, Some("L"), origin, 0.5).is_ok());
        let alt = Trajectory::new(vec![1, 0, 1, 0], vec![0.0; 4]).unwrap();
        let d1 = Domains::new(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(
            fit_kernels(&alt, &d1, None, Origin::FirstObservation, 0.0),
            Err(GfError::EmptyDoubledSet { arm: 0 })
        );
    }

    #[test]
    fn smoothing_vanishes_to_raw_frequencies() {
        let scm = relaxed();
        let tr = simulate(&scm, 0, &Regime::Natural("0011".parse().unwrap()), 400, 2).unwrap();
        let d = Domains::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let raw = fit_kernels(&tr, &d, Some("L"), Origin::FirstObservation, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for kappa in [1.0, 0.1, 0.01, 0.001] {
            let s = fit_kernels(&tr, &d, Some("L"), Origin::FirstObservation, kappa).unwrap();
            let gap = s.gy[1].probs.iter().zip(&raw.gy[1].probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap <= prev);
            prev = gap;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn dump_round_trip() {
        let scm = relaxed();
        let tr = simulate(&scm, 0, &Regime::Natural("0011".parse().unwrap()), 200, 5).unwrap();
        let d = Domains::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let k = fit_kernels(&tr, &d, Some("L"), Origin::FirstObservation, 0.0).unwrap();
        let back = GKernels::from_toml(&k.to_toml()).unwrap();
        assert_eq!(back, k);
        let start = StartState { y: 1, l: 0 };
        assert_eq!(ucate_series(&back, 10, start).unwrap(), ucate_series(&k, 10, start).unwrap());
    }

    #[test]
    fn null_kernels_have_no_effect() {
        let scm = DiscreteScm::builder(Variant::Relaxed)
            .y_values(vec![0.0, 1.0, 2.0])
            .l_values(vec![0.0, 1.0])
            .u_level("u", 1.0, |k| if k.y_prev == 2 { vec![0.5, 0.3, 0.2] } else { vec![0.2, 0.3, 0.5] }, |k| {
                if k.l_prev == 1 { vec![0.6, 0.4] } else { vec![0.1, 0.9] }
            })
            .build()
            .unwrap();
        let k = GKernels::from_scm(&scm, 0);
        for m in 1..6 {
            assert!(ucate_hat_gformula(&k, m, StartState { y: 0, l: 0 }).unwrap().abs() < 1e-15);
        }
    }
}
