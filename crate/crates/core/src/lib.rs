//! Simulation, exact causal oracles and estimators for N-of-1 crossover
//! trials.

pub mod diagnostics;
pub mod estimate;
pub mod gformula;
pub mod kernel;
pub mod numeric;
pub mod oracle;
pub mod panel;
pub mod schedule;
pub mod scm;
pub mod seeding;
pub mod series;
pub mod trajectory;
pub mod verify;

pub use estimate::{Estimate, EstimateError, Method};
pub use gformula::{Domains, GKernels, GfError, Origin, StartState};
pub use schedule::{Design, Schedule, ScheduleError};
pub use scm::{AdditiveScm, DiscreteScm, NoiseRecord, Regime, ScmError, Variant};
pub use trajectory::{Trajectory, TrajectoryError};
