use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ExactModel, NoiseRecord, ScmError, StructuralModel};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// Centered uniform with standard deviation `noise_sd`.
    Uniform,
    /// No noise: `eps_k = 0`.
    Constant,
}

/// `Y_k = beta * A_k + u_value + eps_k` with i.i.d. errors.
///
/// There is a single baseline level (index 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveScm {
    beta: f64,
    u_value: f64,
    noise_sd: f64,
    noise_family: NoiseFamily,
}

impl AdditiveScm {
    pub fn new(beta: f64, u_value: f64, noise_sd: f64, noise_family: NoiseFamily) -> Result<Self, ScmError> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(ScmError::Invalid(format!("noise_sd must be finite and >= 0, got {noise_sd}")));
        }
        if noise_family == NoiseFamily::Constant && noise_sd != 0.0 {
            return Err(ScmError::Invalid("constant noise family requires noise_sd = 0".into()));
        }
        if !beta.is_finite() || !u_value.is_finite() {
            return Err(ScmError::Invalid("beta and u_value must be finite".into()));
        }
        Ok(Self { beta, u_value, noise_sd, noise_family })
    }

    pub fn gaussian(beta: f64, u_value: f64, noise_sd: f64) -> Result<Self, ScmError> {
        Self::new(beta, u_value, noise_sd, NoiseFamily::Gaussian)
    }

    pub fn constant(beta: f64, u_value: f64) -> Self {
        Self { beta, u_value, noise_sd: 0.0, noise_family: NoiseFamily::Constant }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    fn draw_eps(&self, rng: &mut dyn RngCore) -> f64 {
        match self.noise_family {
            NoiseFamily::Gaussian => self.noise_sd * rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::Uniform => {
                let half = self.noise_sd * 3f64.sqrt();
                rng.random_range(-half..=half)
            }
            NoiseFamily::Constant => 0.0,
        }
    }
}

impl StructuralModel for AdditiveScm {
    fn u_count(&self) -> usize {
        1
    }

    fn draw_noise(&self, t: usize, rng: &mut dyn RngCore) -> NoiseRecord {
        let outcome = (0..t).map(|_| self.draw_eps(rng)).collect();
        NoiseRecord { outcome, covariate: vec![0.0; t] }
    }

    fn realize(&self, u: usize, treatments: &[u8], noise: &NoiseRecord) -> Result<Trajectory, ScmError> {
        if u != 0 {
            return Err(ScmError::UnknownU(u));
        }
        if treatments.is_empty() {
            return Err(ScmError::EmptyHorizon);
        }
        if noise.outcome.len() < treatments.len() {
            return Err(ScmError::IncompleteNoise { got: noise.outcome.len(), needed: treatments.len() });
        }
        let y = treatments
            .iter()
            .zip(&noise.outcome)
            .map(|(&a, &e)| self.beta * a as f64 + self.u_value + e)
            .collect();
        Ok(Trajectory::new(treatments.to_vec(), y)?)
    }
}

impl ExactModel for AdditiveScm {
    fn u_weights(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn mean_under(&self, u: usize, treatments: &[u8]) -> Result<Vec<f64>, ScmError> {
        if u != 0 {
            return Err(ScmError::UnknownU(u));
        }
        Ok(treatments.iter().map(|&a| self.beta * a as f64 + self.u_value).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{ice_given_noise, simulate, true_ucate, Regime};
    use crate::seeding::rng_from_seed;

    #[test]
    fn constant_noise_is_deterministic() {
        let m = AdditiveScm::constant(1.0, 0.0);
        let tr = simulate(&m, 0, &Regime::Always(1), 5, 3).unwrap();
        assert_eq!(tr.outcomes(), &[1.0; 5]);
    }

    #[test]
    fn ice_equals_beta_for_any_noise() {
        let m = AdditiveScm::gaussian(0.5, 2.0, 3.0).unwrap();
        let noise = m.draw_noise(10, &mut rng_from_seed(1));
        for k in 1..=10 {
            assert!((ice_given_noise(&m, 0, &noise, k).unwrap() - 0.5).abs() < 1e-12);
        }
        assert_eq!(true_ucate(&m, 0, 7).unwrap(), 0.5);
    }

    #[test]
    fn uniform_family_has_requested_sd() {
        let m = AdditiveScm::new(0.0, 0.0, 2.0, NoiseFamily::Uniform).unwrap();
        let noise = m.draw_noise(200_000, &mut rng_from_seed(9));
        let var = crate::numeric::sample_variance(&noise.outcome);
        assert!((var - 4.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(AdditiveScm::new(0.0, 0.0, -1.0, NoiseFamily::Gaussian).is_err());
        assert!(AdditiveScm::new(0.0, 0.0, 1.0, NoiseFamily::Constant).is_err());
    }
}
