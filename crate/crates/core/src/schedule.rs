//! Cyclic treatment schedules and schedule designs.
//!
//! A [`Schedule`] is a block of `q` binary cells (0 = comparator,
//! 1 = treatment) repeated until the study horizon. Time is 1-based
//! everywhere in the public interface.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::compensated_sum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("schedule must have at least 2 cells, got {0}")]
    TooShort(usize),
    #[error("schedule cell {position} is {value}; cells must be 0 or 1")]
    NonBinary { position: usize, value: u8 },
    #[error("invalid schedule character {ch:?} at position {position}")]
    BadChar { position: usize, ch: char },
    #[error("schedule never assigns treatment (sum of cells is 0)")]
    NoTreatment,
    #[error("schedule never assigns the comparator (sum of cells is q)")]
    NoComparator,
    #[error("no adjacent pair of equal cells within one cycle for arm(s) {arms:?}")]
    NoAdjacentPair { arms: Vec<u8> },
    #[error("design needs at least one schedule")]
    EmptyDesign,
    #[error("design schedules have different cycle lengths ({0} vs {1})")]
    MixedCycleLength(usize, usize),
    #[error("design has {schedules} schedules but {probabilities} probabilities")]
    ProbabilityCount { schedules: usize, probabilities: usize },
    #[error("design probability {0} is negative or not finite")]
    BadProbability(f64),
    #[error("design probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("horizon {horizon} is shorter than the cycle length {q}")]
    HorizonTooShort { horizon: usize, q: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Schedule {
    cells: Vec<u8>,
}

impl Schedule {
    pub fn new(cells: Vec<u8>) -> Result<Self, ScheduleError> {
        if cells.len() < 2 {
            return Err(ScheduleError::TooShort(cells.len()));
        }
        if let Some((i, &v)) = cells.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(ScheduleError::NonBinary { position: i + 1, value: v });
        }
        Ok(Self { cells })
    }

    /// `n0` comparator cells followed by `n1` treatment cells.
    pub fn blocks(n0: usize, n1: usize) -> Result<Self, ScheduleError> {
        let mut cells = vec![0; n0];
        cells.extend(std::iter::repeat_n(1, n1));
        Self::new(cells)
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cycle_len(&self) -> usize {
        self.cells.len()
    }

    pub fn treated_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }

    /// Treatment assigned at time `k` (1-based): `cells[((k - 1) mod q) + 1]`.
    ///
    /// Panics if `k == 0`.
    pub fn assign(&self, k: usize) -> u8 {
        assert!(k >= 1, "time points are 1-based");
        self.cells[(k - 1) % self.cells.len()]
    }

    /// Treatment sequence for times 1..=t.
    pub fn expand(&self, t: usize) -> Vec<u8> {
        (1..=t).map(|k| self.assign(k)).collect()
    }

    /// Both treatment and comparator appear at least once in the cycle.
    pub fn validate_basic(&self) -> Result<(), ScheduleError> {
        match self.treated_count() {
            0 => Err(ScheduleError::NoTreatment),
            n if n == self.cells.len() => Err(ScheduleError::NoComparator),
            _ => Ok(()),
        }
    }

    /// Each arm is assigned twice in a row at least once within one cycle
    /// (pairs (k, k+1) with k <= q - 1; the wrap-around pair is not counted).
    pub fn validate_relaxed(&self) -> Result<(), ScheduleError> {
        let missing: Vec<u8> = [0u8, 1]
            .into_iter()
            .filter(|&x| !self.cells.windows(2).any(|w| w[0] == x && w[1] == x))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ScheduleError::NoAdjacentPair { arms: missing })
        }
    }

    /// Proportion of treated cells in the cycle.
    pub fn treated_fraction(&self) -> Result<f64, ScheduleError> {
        self.validate_basic()?;
        Ok(self.treated_count() as f64 / self.cells.len() as f64)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cells {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Schedule {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cells = s
            .trim()
            .chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(ScheduleError::BadChar { position: i + 1, ch }),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Schedule::new(cells)
    }
}

impl TryFrom<String> for Schedule {
    type Error = ScheduleError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Schedule> for String {
    fn from(s: Schedule) -> String {
        s.to_string()
    }
}

/// A set of schedules with assignment probabilities and a study horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    schedules: Vec<Schedule>,
    probabilities: Vec<f64>,
    horizon: usize,
}

impl Design {
    pub fn new(
        schedules: Vec<Schedule>,
        probabilities: Vec<f64>,
        horizon: usize,
    ) -> Result<Self, ScheduleError> {
        let first = schedules.first().ok_or(ScheduleError::EmptyDesign)?;
        let q = first.cycle_len();
        if let Some(s) = schedules.iter().find(|s| s.cycle_len() != q) {
            return Err(ScheduleError::MixedCycleLength(q, s.cycle_len()));
        }
        if probabilities.len() != schedules.len() {
            return Err(ScheduleError::ProbabilityCount {
                schedules: schedules.len(),
                probabilities: probabilities.len(),
            });
        }
        if let Some(&p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(ScheduleError::BadProbability(p));
        }
        let total = compensated_sum(probabilities.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(ScheduleError::ProbabilitySum(total));
        }
        if horizon < q {
            return Err(ScheduleError::HorizonTooShort { horizon, q });
        }
        Ok(Self { schedules, probabilities, horizon })
    }

    /// Uniform probabilities over the given schedules.
    pub fn uniform(schedules: Vec<Schedule>, horizon: usize) -> Result<Self, ScheduleError> {
        let n = schedules.len().max(1);
        Self::new(schedules, vec![1.0 / n as f64; n], horizon)
    }

    pub fn schedules(&self) -> &[Schedule] {
        &self.schedules
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cycle_len(&self) -> usize {
        self.schedules[0].cycle_len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Schedule, f64)> {
        self.schedules.iter().zip(self.probabilities.iter().copied())
    }

    /// Probability that treatment is assigned at time `k`.
    pub fn treatment_probability(&self, k: usize) -> f64 {
        compensated_sum(self.iter().map(|(s, p)| p * s.assign(k) as f64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedDesign {
    pub name: &'static str,
    pub description: &'static str,
    pub design: Design,
}

/// Commonly used N-of-1 designs at their smallest cycle length.
pub fn canonical_designs() -> Vec<NamedDesign> {
    let block = |n0, n1| Schedule::blocks(n0, n1).expect("static schedule");
    let fixed = |s: Schedule, t| Design::new(vec![s], vec![1.0], t).expect("static design");

    let q = 14;
    let randomized: Vec<Schedule> = (1u32..(1 << q) - 1)
        .map(|bits| {
            let cells = (0..q).map(|i| ((bits >> (q - 1 - i)) & 1) as u8).collect();
            Schedule::new(cells).expect("static schedule")
        })
        .collect();

    vec![
        NamedDesign {
            name: "AB",
            description: "7 days of no-treatment followed by 7 days of treatment",
            design: fixed(block(7, 7), 14),
        },
        NamedDesign {
            name: "ABAB",
            description: "alternate 7 days of no-treatment and 7 days of treatment for 4 weeks",
            design: fixed(block(7, 7), 28),
        },
        NamedDesign {
            name: "ABA",
            description: "10 days of no-treatment, 10 days of treatment, 10 days of no-treatment",
            design: fixed(block(10, 10), 30),
        },
        NamedDesign {
            name: "ABBA",
            description: "7 days of no-treatment, 14 days of treatment, 7 days of no-treatment",
            design: fixed(block(7, 14), 28),
        },
        NamedDesign {
            name: "daily-random",
            description: "treatment status drawn uniformly for every day",
            design: Design::uniform(randomized, 14).expect("static design"),
        },
    ]
}
