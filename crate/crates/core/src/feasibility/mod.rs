//! Per-topology SINR feasibility solvers.
//!
//! Each solver answers the same question — can every user `k` simultaneously
//! reach SINR target `targets[k]` within the per-user power budgets? — and,
//! when the answer is yes, produces a witness [`Allocation`] that attains the
//! targets (within a 1e-8 relative slack accepted as tight):
//!
//! - [`siso`] — closed form via the normalized interference matrix and a
//!   spectral-radius test.
//! - [`simo`] — SINR balancing over sub-problems with one saturated power
//!   budget, alternating MMSE receive updates with a dominant-eigenpair
//!   solve of the extended coupling matrix.
//! - [`miso`] — a second-order cone feasibility program over stacked
//!   transmit beamformers.
//!
//! Users with a zero target are excluded up front (they transmit nothing and
//! impose no constraint); feasibility is decided on the active subset.

pub mod miso;
pub mod simo;
pub mod siso;

pub use miso::MisoSolver;
pub use simo::SimoSolver;
pub use siso::SisoSolver;

use thiserror::Error;

use crate::channel::Allocation;

/// Relative SINR slack treated as attaining a target: a witness with
/// `sinr[k] >= targets[k] * (1 - WITNESS_SLACK)` counts as tight. Keeps
/// boundary probes from chattering on solver-tolerance noise.
pub const WITNESS_SLACK: f64 = 1e-8;

/// Errors shared by the feasibility solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Minimum-power solve requested for targets whose normalized
    /// interference matrix has spectral radius at or above one.
    #[error("SINR targets unachievable at any power (spectral radius {rho})")]
    SpectralRadius { rho: f64 },
    /// A linear system that should be regular failed to factor.
    #[error("singular system in {context}")]
    Singular { context: &'static str },
    /// SINR balancing found no sub-problem whose solution respects every
    /// budget (theory guarantees one; numerics reported none).
    #[error("no admissible sub-problem index in SINR balancing")]
    NoAdmissibleIndex,
    /// The cone solver returned a status other than solved.
    #[error("cone solver failure: {status}")]
    ConeSolver { status: String },
}

/// A feasibility verdict with an optional attaining allocation.
///
/// `witness` is `Some` whenever `feasible` is true; it re-validates through
/// the channel's SINR evaluation to within [`WITNESS_SLACK`] and respects
/// every power budget.
#[derive(Clone, Debug)]
pub struct FeasibilityOutcome {
    pub feasible: bool,
    pub witness: Option<Allocation>,
}

impl FeasibilityOutcome {
    pub fn infeasible() -> Self {
        FeasibilityOutcome { feasible: false, witness: None }
    }

    pub fn feasible_with(witness: Allocation) -> Self {
        FeasibilityOutcome { feasible: true, witness: Some(witness) }
    }
}

/// Common probe interface the boundary oracle drives.
pub trait SinrFeasibility {
    fn users(&self) -> usize;
    fn check(&self, targets: &[f64]) -> Result<FeasibilityOutcome, Error>;
}

/// Indices of users with strictly positive targets.
pub(crate) fn active_users(targets: &[f64]) -> Vec<usize> {
    targets
        .iter()
        .enumerate()
        .filter_map(|(k, &g)| (g > 0.0).then_some(k))
        .collect()
}
