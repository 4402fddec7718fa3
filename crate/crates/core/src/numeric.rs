//! Small numerical helpers shared by the estimators.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Neumaier compensated summation.
///
/// Per-k Monte Carlo means are accumulated with this so results do not
/// depend on how replicates were chunked across threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance (denominator n - 1). Two-pass for stability.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Two-sided normal critical value for a confidence level, z_{(1+level)/2}.
pub fn normal_critical(level: f64) -> f64 {
    normal_quantile(0.5 * (1.0 + level))
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    (2.0 * Normal::standard().sf(z.abs())).min(1.0)
}

/// Two-sided p-value of a Student t statistic with (possibly fractional) df.
pub fn student_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df must be positive");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1e16, 1.0, -1e16];
        values.extend(std::iter::repeat_n(1.0, 10));
        assert_eq!(compensated_sum(values), 11.0);
    }

    #[test]
    fn variance_of_pair() {
        assert_abs_diff_eq!(sample_variance(&[0.0, 2.0]), 2.0, epsilon = 1e-15);
        assert_eq!(sample_variance(&[3.0, 3.0, 3.0]), 0.0);
    }

    #[test]
    fn normal_critical_value_95() {
        assert_abs_diff_eq!(normal_critical(0.95), 1.959963984540054, epsilon = 1e-12);
    }

    #[test]
    fn student_p_matches_reference() {
        // t = 2.0, df = 10: two-sided p = 0.0733880...
        assert_abs_diff_eq!(student_two_sided_p(2.0, 10.0), 0.07338803, epsilon = 1e-7);
        assert_eq!(student_two_sided_p(0.0, 3.0), 1.0);
    }
}
