//! Conditional probability tables over the lag-1 parent set.
//!
//! Full parent set of `Y_k` is `(L_k, A_k, Y_{k-1}, L_{k-1}, A_{k-1})`;
//! `L_k` uses `(A_k, Y_{k-1}, L_{k-1})`. A [`ParentMask`] selects which
//! parents a table actually conditions on; excluded axes collapse to a
//! single row so the table cannot depend on them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::compensated_sum;

pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("row {row} has {got} entries, expected {expected}")]
    RowWidth { row: String, got: usize, expected: usize },
    #[error("row {row} has entry {value} that is negative or not finite")]
    BadEntry { row: String, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    NotNormalized { row: String, sum: f64 },
    #[error("row {row} has a zero entry but the model is declared positive")]
    NotPositive { row: String },
}

/// Values of the lag-1 parents, as level indices (treatments as 0/1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ParentKey {
    pub l: usize,
    pub a: usize,
    pub y_prev: usize,
    pub l_prev: usize,
    pub a_prev: usize,
}

impl ParentKey {
    fn as_array(&self) -> [usize; 5] {
        [self.l, self.a, self.y_prev, self.l_prev, self.a_prev]
    }

    fn from_array(v: [usize; 5]) -> Self {
        Self { l: v[0], a: v[1], y_prev: v[2], l_prev: v[3], a_prev: v[4] }
    }

    pub fn describe(&self, mask: &ParentMask) -> String {
        let names = ["l", "a", "y_prev", "l_prev", "a_prev"];
        let parts: Vec<String> = mask
            .as_array()
            .iter()
            .zip(self.as_array())
            .zip(names)
            .filter(|((on, _), _)| **on)
            .map(|((_, v), n)| format!("{n}={v}"))
            .collect();
        if parts.is_empty() {
            "(unconditional)".into()
        } else {
            format!("({})", parts.join(", "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParentMask {
    pub l: bool,
    pub a: bool,
    pub y_prev: bool,
    pub l_prev: bool,
    pub a_prev: bool,
}

impl ParentMask {
    pub const NONE: Self = Self { l: false, a: false, y_prev: false, l_prev: false, a_prev: false };
    /// `Y_k` in the relaxed model: every lag-1 parent.
    pub const OUTCOME_RELAXED: Self = Self { l: true, a: true, y_prev: true, l_prev: true, a_prev: true };
    /// `Y_k` in the basic model: current treatment only.
    pub const OUTCOME_BASIC: Self = Self { a: true, ..Self::NONE };
    /// `Y_k` under a pure time trend: `(L_k, A_k, L_{k-1})`.
    pub const OUTCOME_TIME_TREND: Self = Self { l: true, a: true, l_prev: true, ..Self::NONE };
    /// `L_k` in the relaxed model: `(A_k, Y_{k-1}, L_{k-1})`.
    pub const COVARIATE_RELAXED: Self = Self { a: true, y_prev: true, l_prev: true, ..Self::NONE };
    /// `L_k` under a pure time trend: `L_{k-1}` only.
    pub const COVARIATE_TIME_TREND: Self = Self { l_prev: true, ..Self::NONE };

    fn as_array(&self) -> [bool; 5] {
        [self.l, self.a, self.y_prev, self.l_prev, self.a_prev]
    }

    /// Zero out excluded parents.
    pub fn project(&self, key: ParentKey) -> ParentKey {
        let m = self.as_array();
        let mut v = key.as_array();
        for (x, on) in v.iter_mut().zip(m) {
            if !on {
                *x = 0;
            }
        }
        ParentKey::from_array(v)
    }
}

/// Cardinalities of the parent axes: `|L|`, 2, `|Y|`, `|L|`, 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentSizes {
    pub n_y: usize,
    pub n_l: usize,
}

impl ParentSizes {
    fn full(&self) -> [usize; 5] {
        [self.n_l, 2, self.n_y, self.n_l, 2]
    }
}

/// A conditional distribution table `P(out | masked parents)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondTable {
    mask: ParentMask,
    sizes: ParentSizes,
    n_out: usize,
    probs: Vec<f64>,
}

impl CondTable {
    /// Build by calling `f` once per distinct masked parent key; excluded
    /// parents are passed as 0.
    pub fn from_fn(
        mask: ParentMask,
        sizes: ParentSizes,
        n_out: usize,
        mut f: impl FnMut(ParentKey) -> Vec<f64>,
    ) -> Result<Self, KernelError> {
        let mut probs = Vec::new();
        let mut table = Self { mask, sizes, n_out, probs: Vec::new() };
        for key in table.keys() {
            let row = f(key);
            if row.len() != n_out {
                return Err(KernelError::RowWidth { row: key.describe(&mask), got: row.len(), expected: n_out });
            }
            probs.extend(row);
        }
        table.probs = probs;
        Ok(table)
    }

    /// Uniform rows.
    pub fn uniform(mask: ParentMask, sizes: ParentSizes, n_out: usize) -> Self {
        let rows = Self { mask, sizes, n_out, probs: Vec::new() }.n_rows();
        Self { mask, sizes, n_out, probs: vec![1.0 / n_out as f64; rows * n_out] }
    }

    pub fn mask(&self) -> ParentMask {
        self.mask
    }

    pub fn sizes(&self) -> ParentSizes {
        self.sizes
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    fn dims(&self) -> [usize; 5] {
        let full = self.sizes.full();
        let m = self.mask.as_array();
        let mut d = [1; 5];
        for i in 0..5 {
            if m[i] {
                d[i] = full[i];
            }
        }
        d
    }

    pub fn n_rows(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn row_index(&self, key: ParentKey) -> usize {
        let d = self.dims();
        let v = self.mask.project(key).as_array();
        v.iter().zip(d).fold(0, |acc, (x, n)| {
            debug_assert!(*x < n, "parent index out of range");
            acc * n + x
        })
    }

    pub fn row(&self, key: ParentKey) -> &[f64] {
        let r = self.row_index(key);
        &self.probs[r * self.n_out..(r + 1) * self.n_out]
    }

    pub fn row_by_index(&self, r: usize) -> &[f64] {
        &self.probs[r * self.n_out..(r + 1) * self.n_out]
    }

    pub fn set_row(&mut self, key: ParentKey, values: &[f64]) {
        let r = self.row_index(key);
        self.probs[r * self.n_out..(r + 1) * self.n_out].copy_from_slice(values);
    }

    /// Distinct masked parent keys in row order.
    pub fn keys(&self) -> Vec<ParentKey> {
        let d = self.dims();
        let total: usize = d.iter().product();
        (0..total)
            .map(|mut r| {
                let mut v = [0; 5];
                for i in (0..5).rev() {
                    v[i] = r % d[i];
                    r /= d[i];
                }
                ParentKey::from_array(v)
            })
            .collect()
    }

    pub fn validate(&self, positive: bool) -> Result<(), KernelError> {
        for (r, key) in self.keys().into_iter().enumerate() {
            let row = self.row_by_index(r);
            let name = || key.describe(&self.mask);
            if let Some(&v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(KernelError::BadEntry { row: name(), value: v });
            }
            let sum = compensated_sum(row.iter().copied());
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(KernelError::NotNormalized { row: name(), sum });
            }
            if positive && row.iter().any(|&v| v <= 0.0) {
                return Err(KernelError::NotPositive { row: name() });
            }
        }
        Ok(())
    }

    pub fn all_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

/// Inverse-transform draw: smallest index whose cumulative mass exceeds `u`.
pub fn inverse_cdf(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left the cumulative sum just below 1; take the last level with mass
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_axes_collapse() {
        let sizes = ParentSizes { n_y: 3, n_l: 2 };
        let t = CondTable::from_fn(ParentMask::OUTCOME_BASIC, sizes, 3, |k| {
            if k.a == 1 { vec![0.1, 0.2, 0.7] } else { vec![0.5, 0.5, 0.0] }
        })
        .unwrap();
        assert_eq!(t.n_rows(), 2);
        let key = ParentKey { l: 1, a: 1, y_prev: 2, l_prev: 1, a_prev: 0 };
        assert_eq!(t.row(key), &[0.1, 0.2, 0.7]);
        assert!(t.validate(false).is_ok());
        assert!(matches!(t.validate(true), Err(KernelError::NotPositive { .. })));
    }

    #[test]
    fn full_mask_rows() {
        let sizes = ParentSizes { n_y: 2, n_l: 3 };
        let t = CondTable::uniform(ParentMask::OUTCOME_RELAXED, sizes, 2);
        assert_eq!(t.n_rows(), 3 * 2 * 2 * 3 * 2);
        let keys = t.keys();
        for (r, k) in keys.iter().enumerate() {
            assert_eq!(t.row_index(*k), r);
        }
    }

    #[test]
    fn detects_unnormalized_rows() {
        let sizes = ParentSizes { n_y: 2, n_l: 1 };
        let t = CondTable::from_fn(ParentMask::OUTCOME_BASIC, sizes, 2, |_| vec![0.5, 0.6]).unwrap();
        assert!(matches!(t.validate(false), Err(KernelError::NotNormalized { .. })));
    }

    #[test]
    fn inverse_cdf_edges() {
        assert_eq!(inverse_cdf(&[0.3, 0.7], 0.0), 0);
        assert_eq!(inverse_cdf(&[0.3, 0.7], 0.3), 1);
        assert_eq!(inverse_cdf(&[0.0, 1.0], 0.0), 1);
        assert_eq!(inverse_cdf(&[0.5, 0.5 - 1e-17, 0.0], 0.9999999999999999), 1);
    }
}
