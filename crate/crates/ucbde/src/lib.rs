//! Batch Bayesian optimization for inexpensive black-box functions.
//!
//! Each batch starts with one GP-UCB point; the remaining points come from
//! distance exploration — greedy farthest-point picks over a precomputed
//! Sobol candidate pool — so a whole batch costs a single run of the inner
//! acquisition optimizer. The crate also ships the usual batch baselines
//! (random, UCB-Rand, GP-BUCB, Constant Liar), a small benchmark-function
//! registry, and an experiment harness with a CLI for convergence,
//! Sobol-budget, and timing studies.

pub mod acquisition;
pub mod baselines;
pub mod batch_de;
pub mod benchmarks;
pub mod error;
pub mod gp;
pub mod harness;
pub mod sobol;

pub use error::{Error, Result};

/// Derive a child seed for an independent random stream.
///
/// splitmix64 finalization keeps seeds for nearby stream ids uncorrelated;
/// every seeded component of a run (initial design, per-iteration policy
/// seeds, recommendation maximizer) gets its own stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
