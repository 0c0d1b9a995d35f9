//! Closed-form SINR feasibility for scalar (SISO) interference channels.
//!
//! For targets `gamma` over the active users, form the normalized
//! interference matrix and noise load
//!
//! ```text
//! G[k][j] = gamma[k] * g[k][j] / g[k][k]   (j != k, zero diagonal)
//! eta[k]  = gamma[k] * noise[k] / g[k][k]
//! ```
//!
//! The targets are jointly achievable at *some* finite powers iff
//! `rho(G) < 1`; in that case `p* = (I - G)^{-1} eta` is the unique fixed
//! point of `p = G p + eta` and is componentwise minimal among all power
//! vectors meeting the targets. Budget feasibility is then simply
//! `p* <= pmax` componentwise, and `p*` attains every active target with
//! equality.

use nalgebra::{DMatrix, DVector};

use super::{active_users, Error, FeasibilityOutcome, SinrFeasibility};
use crate::channel::{Allocation, SisoChannel};
use crate::linalg::spectral_radius;

/// Guard band under the `rho(G) < 1` test: radii in `[1 - RHO_GUARD, 1)` are
/// treated as infeasible. So close to one, the minimal powers are enormous
/// and dominated by roundoff; no budget of interest survives anyway.
pub const RHO_GUARD: f64 = 1e-12;

/// Verdict of a SISO feasibility check.
#[derive(Clone, Debug)]
pub struct SisoReport {
    pub outcome: FeasibilityOutcome,
    /// Spectral radius of the normalized interference matrix on the active
    /// set (zero when no user has a positive target).
    pub spectral_radius: f64,
    /// Componentwise-minimal powers meeting the targets, when they exist
    /// (ignores budgets; inactive users get zero).
    pub min_power: Option<Vec<f64>>,
}

/// Decides whether `targets` fit within the channel's power budgets.
pub fn check_feasible(ch: &SisoChannel, targets: &[f64]) -> SisoReport {
    let k = ch.users();
    assert_eq!(targets.len(), k, "target vector length mismatch");
    let active = active_users(targets);
    if active.is_empty() {
        return SisoReport {
            outcome: FeasibilityOutcome::feasible_with(Allocation::Siso { powers: vec![0.0; k] }),
            spectral_radius: 0.0,
            min_power: Some(vec![0.0; k]),
        };
    }
    let rho = spectral_radius(&interference_matrix(ch, targets, &active));
    if rho >= 1.0 - RHO_GUARD {
        return SisoReport { outcome: FeasibilityOutcome::infeasible(), spectral_radius: rho, min_power: None };
    }
    let Some(p) = solve_min_power(ch, targets, &active) else {
        return SisoReport { outcome: FeasibilityOutcome::infeasible(), spectral_radius: rho, min_power: None };
    };
    let within_budget = p.iter().zip(ch.pmax()).all(|(&pi, &cap)| pi <= cap);
    let outcome = if within_budget {
        FeasibilityOutcome::feasible_with(Allocation::Siso { powers: p.clone() })
    } else {
        FeasibilityOutcome::infeasible()
    };
    SisoReport { outcome, spectral_radius: rho, min_power: Some(p) }
}

/// Componentwise-minimal powers meeting `targets`, ignoring budgets.
///
/// # Errors
///
/// [`Error::SpectralRadius`] when `rho(G) >= 1 - RHO_GUARD` (no finite power
/// vector reaches the targets), [`Error::Singular`] if the linear solve
/// unexpectedly fails.
pub fn min_power(ch: &SisoChannel, targets: &[f64]) -> Result<Vec<f64>, Error> {
    let k = ch.users();
    assert_eq!(targets.len(), k, "target vector length mismatch");
    let active = active_users(targets);
    if active.is_empty() {
        return Ok(vec![0.0; k]);
    }
    let rho = spectral_radius(&interference_matrix(ch, targets, &active));
    if rho >= 1.0 - RHO_GUARD {
        return Err(Error::SpectralRadius { rho });
    }
    solve_min_power(ch, targets, &active).ok_or(Error::Singular { context: "SISO minimum power" })
}

/// Normalized interference matrix over the given active users.
fn interference_matrix(ch: &SisoChannel, targets: &[f64], active: &[usize]) -> DMatrix<f64> {
    let n = active.len();
    DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            0.0
        } else {
            let (k, j) = (active[r], active[c]);
            targets[k] * ch.gain(k, j) / ch.gain(k, k)
        }
    })
}

fn solve_min_power(ch: &SisoChannel, targets: &[f64], active: &[usize]) -> Option<Vec<f64>> {
    let n = active.len();
    let g = interference_matrix(ch, targets, active);
    let system = DMatrix::identity(n, n) - g;
    let eta = DVector::from_iterator(
        n,
        active.iter().map(|&k| targets[k] * ch.noise()[k] / ch.gain(k, k)),
    );
    let p_active = system.lu().solve(&eta)?;
    if p_active.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return None;
    }
    let mut p = vec![0.0; ch.users()];
    for (r, &k) in active.iter().enumerate() {
        p[k] = p_active[r];
    }
    Some(p)
}

/// Probe adapter for the boundary oracle.
pub struct SisoSolver<'a> {
    pub ch: &'a SisoChannel,
}

impl SinrFeasibility for SisoSolver<'_> {
    fn users(&self) -> usize {
        self.ch.users()
    }

    fn check(&self, targets: &[f64]) -> Result<FeasibilityOutcome, Error> {
        Ok(check_feasible(self.ch, targets).outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_user(cross: f64, pmax: f64) -> SisoChannel {
        SisoChannel::new(
            vec![vec![1.0, cross], vec![cross, 1.0]],
            vec![1.0, 1.0],
            vec![pmax, pmax],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn single_user_needs_exactly_target_over_gain_times_noise() {
        let ch = SisoChannel::new(vec![vec![2.0]], vec![0.5], vec![1.0], vec![1.0]).unwrap();
        // p = gamma * noise / gain = 3 * 0.5 / 2 = 0.75 <= 1.
        let report = check_feasible(&ch, &[3.0]);
        assert!(report.outcome.feasible);
        assert_relative_eq!(report.min_power.unwrap()[0], 0.75, max_relative = 1e-15);
        // 4.1 would need p = 1.025 > 1.
        assert!(!check_feasible(&ch, &[4.1]).outcome.feasible);
    }

    #[test]
    fn symmetric_two_user_matches_hand_solution() {
        // G = [[0, 0.5], [0.5, 0]], eta = (1, 1): p = (2, 2).
        let ch = two_user(0.5, 2.0);
        let report = check_feasible(&ch, &[1.0, 1.0]);
        assert!(report.outcome.feasible);
        let p = report.min_power.unwrap();
        assert_relative_eq!(p[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(p[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(report.spectral_radius, 0.5, max_relative = 1e-12);
        // Shrinking the budgets below the minimal powers flips the verdict.
        let tight = two_user(0.5, 1.99);
        assert!(!check_feasible(&tight, &[1.0, 1.0]).outcome.feasible);
    }

    #[test]
    fn spectral_radius_at_one_is_infeasible_at_any_budget() {
        // Unit cross gains and unit targets put rho(G) exactly at 1: the
        // required power diverges no matter how large the budget.
        let ch = two_user(1.0, 1e12);
        let report = check_feasible(&ch, &[1.0, 1.0]);
        assert!(!report.outcome.feasible);
        assert_relative_eq!(report.spectral_radius, 1.0, max_relative = 1e-10);
        assert!(min_power(&ch, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_target_users_are_excluded_and_silent() {
        let ch = two_user(0.7, 3.0);
        // User 0 off: user 1 sees no interference, p1 = gamma * noise / gain.
        let report = check_feasible(&ch, &[0.0, 3.0]);
        assert!(report.outcome.feasible);
        let p = report.min_power.unwrap();
        assert_eq!(p[0], 0.0);
        assert_relative_eq!(p[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn min_power_attains_targets_with_equality() {
        let ch = SisoChannel::new(
            vec![vec![0.9, 0.2, 0.05], vec![0.1, 1.1, 0.15], vec![0.07, 0.12, 0.8]],
            vec![0.3, 0.4, 0.5],
            vec![10.0, 10.0, 10.0],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let targets = [1.5, 0.8, 2.2];
        let p = min_power(&ch, &targets).unwrap();
        let sinr = ch.sinr(&p);
        for k in 0..3 {
            assert_relative_eq!(sinr[k], targets[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn min_power_is_componentwise_minimal() {
        // Any power vector that meets the targets must dominate p*: sample
        // random powers, use the SINRs they achieve as targets, and check.
        let ch = SisoChannel::new(
            vec![vec![1.3, 0.3, 0.1], vec![0.2, 0.9, 0.25], vec![0.15, 0.1, 1.6]],
            vec![0.5, 0.5, 0.5],
            vec![100.0, 100.0, 100.0],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let p_rand: Vec<f64> = (0..3).map(|_| 0.05 + 5.0 * next()).collect();
            let achieved = ch.sinr(&p_rand);
            let p_min = min_power(&ch, &achieved).unwrap();
            for k in 0..3 {
                assert!(
                    p_min[k] <= p_rand[k] * (1.0 + 1e-10),
                    "minimal power exceeds a feasible power: {} > {}",
                    p_min[k],
                    p_rand[k]
                );
            }
        }
    }
}
