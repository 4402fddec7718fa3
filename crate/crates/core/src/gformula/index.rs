use serde::{Deserialize, Serialize};

/// Time points contributing to the covariate and outcome kernels.
///
/// `single[x]` holds `{k : A_k = x}` and `doubled[x]` holds
/// `{k : A_k = A_{k-1} = x}`, both 1-based. Without a known `A_0` the
/// first time point has no parents and is excluded from both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSets {
    pub single: [Vec<usize>; 2],
    pub doubled: [Vec<usize>; 2],
}

impl IndexSets {
    pub fn doubled_nonempty(&self) -> bool {
        !self.doubled[0].is_empty() && !self.doubled[1].is_empty()
    }
}

pub fn index_sets(a: &[u8], a0: Option<u8>) -> IndexSets {
    let mut single: [Vec<usize>; 2] = Default::default();
    let mut doubled: [Vec<usize>; 2] = Default::default();
    let first = if a0.is_some() { 1 } else { 2 };
    for k in first..=a.len() {
        let x = a[k - 1];
        let prev = if k == 1 { a0.unwrap_or(u8::MAX) } else { a[k - 2] };
        single[x as usize].push(k);
        if prev == x {
            doubled[x as usize].push(k);
        }
    }
    IndexSets { single, doubled }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Schedule;

    #[test]
    fn reads_adjacent_pairs() {
        let s = index_sets(&[0, 0, 1, 1, 0, 0, 1, 1], None);
        assert_eq!(s.doubled[1], vec![4, 8]);
        assert_eq!(s.doubled[0], vec![2, 6]);
        assert_eq!(s.single[1], vec![3, 4, 7, 8]);
        let s = index_sets(&[1, 0, 1, 0], None);
        assert!(s.doubled[0].is_empty() && s.doubled[1].is_empty());
        assert!(!s.doubled_nonempty());
    }

    #[test]
    fn acne_design_counts() {
        let a = Schedule::blocks(6, 6).unwrap().expand(48);
        let s = index_sets(&a, None);
        // brute force over all adjacent pairs of the expanded sequence
        for x in 0..2u8 {
            let brute: Vec<usize> = (2..=48).filter(|&k| a[k - 1] == x && a[k - 2] == x).collect();
            assert_eq!(s.doubled[x as usize], brute);
            assert_eq!(brute.len(), 20);
        }
    }

    #[test]
    fn known_initial_treatment_includes_time_one() {
        let s = index_sets(&[1, 1, 0], Some(1));
        assert_eq!(s.doubled[1], vec![1, 2]);
        assert_eq!(s.single[0], vec![3]);
        let s = index_sets(&[1, 1, 0], Some(0));
        assert_eq!(s.doubled[1], vec![2]);
    }
}
