//! Benchmark fixtures shared by the criterion targets.

use nof1_core::oracle::{random_scm, RandomScmSpec};
use nof1_core::seeding::rng_from_seed;
use nof1_core::{DiscreteScm, Variant};

/// A fixed three-by-three relaxed model.
pub fn relaxed_fixture() -> DiscreteScm {
    random_scm(&mut rng_from_seed(1), &RandomScmSpec::new(Variant::Relaxed, 3, 3)).expect("valid model")
}
