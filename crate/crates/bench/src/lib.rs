//! Shared instance builders for the benchmark suite.
//!
//! Capabilities:
//!
//! - Seeded channel draws at fixed sizes, so timings compare across runs.
//! - Mid-region SINR target tuples that exercise the feasibility solvers
//!   away from their trivial all-zero and clearly-infeasible corners.

use wsr_core::sampling::{sample_miso, sample_simo, sample_siso};
use wsr_core::{MisoChannel, SimoChannel, SisoChannel};

pub const USERS: usize = 4;
pub const ANTENNAS: usize = 2;
pub const PMAX: f64 = 3.0;
pub const SIGMA2: f64 = 1.0;

pub fn siso_instance(seed: u64) -> SisoChannel {
    sample_siso(USERS, PMAX, SIGMA2, seed)
}

pub fn simo_instance(seed: u64) -> SimoChannel {
    sample_simo(USERS, ANTENNAS, PMAX, SIGMA2, seed)
}

pub fn miso_instance(seed: u64) -> MisoChannel {
    sample_miso(USERS, ANTENNAS, PMAX, SIGMA2, seed)
}

/// SINR targets equivalent to a uniform per-user rate, strictly inside the
/// region for the benchmark draws.
pub fn uniform_rate_targets(users: usize, rate: f64) -> Vec<f64> {
    vec![2f64.powf(rate) - 1.0; users]
}
