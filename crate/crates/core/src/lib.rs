//! Globally optimal weighted sum-rate (WSR) operating points for K-user
//! Gaussian interference channels under single-user detection.
//!
//! The rate region of an interference channel treated as noise is non-convex,
//! but it is a *normal* set: reducing any user's rate keeps the tuple
//! achievable. This crate exploits that structure with a monotonic
//! optimization scheme — an outer polyblock approximation that shrinks a
//! vertex-generated cover of the region until the weighted sum-rate gap
//! between cover and incumbent falls below a target accuracy. The returned
//! operating point is a global optimum up to the configured tolerances,
//! independent of convexity.
//!
//! Crate layout:
//!
//! - [`channel`] — channel data model (SISO / SIMO / MISO), SINR and rate
//!   evaluation, JSON (de)serialization.
//! - [`polyblock`] — the outer polyblock approximation engine, generic over a
//!   boundary oracle.
//! - [`boundary`] — rate-profile rays and bisection onto the Pareto boundary,
//!   bridging the engine to per-topology SINR feasibility solvers.
//! - [`feasibility`] — SINR feasibility: closed-form power control (SISO),
//!   SINR balancing via extended coupling matrices (SIMO), second-order cone
//!   programming (MISO).
//! - [`pricing`] — interference-pricing heuristic baselines for SIMO power
//!   control and MISO beamformer updates.
//! - [`oracles`] — slow, independent reference solvers (grid and random
//!   search, finite differences) used to cross-check everything else.
//! - [`sampling`] — seeded random instance generators for benchmarks and
//!   experiments.
//!
//! # Example
//!
//! Solve a two-user scalar channel to within 0.1 bit of the global optimum:
//!
//! ```
//! use wsr_core::channel::SisoChannel;
//! use wsr_core::boundary::RateRegionOracle;
//! use wsr_core::polyblock::{solve, PolyblockConfig};
//!
//! let ch = SisoChannel::new(
//!     vec![vec![1.0, 0.1], vec![0.2, 0.8]], // power gains |h_kj|^2
//!     vec![1.0, 1.0],                       // noise variances
//!     vec![3.0, 3.0],                       // power budgets
//!     vec![1.0, 1.0],                       // rate weights
//! )
//! .unwrap();
//! let oracle = RateRegionOracle::for_siso(&ch, None, 1e-4).unwrap();
//! let cfg = PolyblockConfig { eta: 0.1, ..PolyblockConfig::default() };
//! let sol = solve(&oracle, ch.weights(), &oracle.initial_vertex(), &oracle.origin(), &cfg).unwrap();
//! assert!(sol.upper_bound - sol.best_value <= 0.1 + 1e-9);
//! ```

pub mod boundary;
pub mod channel;
pub mod feasibility;
pub mod fixtures;
pub mod linalg;
pub mod oracles;
pub mod polyblock;
pub mod pricing;
pub mod sampling;

pub use boundary::RateRegionOracle;
pub use channel::{Allocation, Channel, MisoChannel, SimoChannel, SisoChannel};
pub use feasibility::FeasibilityOutcome;
pub use polyblock::{solve, PolyblockConfig, SolveResult, Termination};
