//! SINR balancing feasibility for SIMO interference channels.
//!
//! Fixing the receive vectors turns the SIMO network into an effective
//! scalar network; the question "can all users reach their targets within
//! budgets" is answered through the *balancing level*
//!
//! ```text
//! C* = max over (p <= pmax, W) of min_k sinr_k(p, W) / targets[k]
//! ```
//!
//! since the targets are feasible iff `C* >= 1`. At a balanced optimum every
//! ratio `sinr_k / targets[k]` equals `C*` and at least one power budget is
//! tight. That structure decomposes the search into K sub-problems: in
//! sub-problem `i` user i's budget is saturated (`p_i = pmax[i]`) and the
//! balanced `(p, 1/C)` pair is the Perron eigenpair of the extended coupling
//! matrix
//!
//! ```text
//! A_i(W) = [ D Psi          D sigma        ]      D     = diag(targets[k] / |w_k^H h_kk|^2)
//!          [ row_i(D Psi)/P_i  row_i(D sigma)/P_i ]      Psi[k][j] = |w_k^H h_kj|^2 (j != k, zero diag)
//! ```                                                    sigma[k]  = noise[k] * ||w_k||^2
//!
//! normalized so its last entry is one: the top block is the power vector
//! and `rho(A_i) = 1/C_i`. Each sub-problem alternates MMSE receive updates
//! (which can only raise every SINR, hence lower `rho`) with the eigenpair
//! solve until `rho` stops improving. Exactly one sub-problem yields powers
//! respecting every budget, and that one carries the network-wide `C*`.

use nalgebra::{DMatrix, DVector};

use super::{active_users, Error, FeasibilityOutcome, SinrFeasibility, WITNESS_SLACK};
use crate::channel::{Allocation, SimoChannel, SisoChannel};
use crate::feasibility::siso;
use crate::linalg::{dominant_eigenpair, Cx};

/// Stop a sub-problem once the per-iteration improvement of `rho = 1/C`
/// falls below this.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Iteration cap per sub-problem; the monotone `rho` sequence converges far
/// earlier in practice.
pub const DEFAULT_MAX_ITERS: usize = 2000;
/// Relative slack allowed when checking a sub-problem's powers against the
/// budgets (the saturated user's power equals its budget only up to the
/// eigensolve's accuracy).
pub const BUDGET_SLACK: f64 = 1e-9;

/// Converged state of one balancing sub-problem.
#[derive(Clone, Debug)]
pub struct SubproblemOutcome {
    /// Balancing level `C_i = 1 / rho(A_i)` at the final receivers.
    pub level: f64,
    /// Balanced powers (full length; zero for users with zero targets,
    /// infinite when the sub-problem's fixed point has no finite powers).
    pub powers: Vec<f64>,
    /// The receive vectors the final eigenpair was computed against (full
    /// length; zero-target users get their MMSE receiver at the final powers).
    pub receivers: Vec<DVector<Cx>>,
    pub iterations: usize,
    /// `rho(A_i)` after each iteration; non-increasing.
    pub rho_trace: Vec<f64>,
    /// Whether the improvement threshold was met within the iteration cap.
    pub converged: bool,
}

/// Result of a full balancing run across sub-problems.
#[derive(Clone, Debug)]
pub struct BalanceOutcome {
    /// Network balancing level `C*`.
    pub level: f64,
    pub powers: Vec<f64>,
    pub receivers: Vec<DVector<Cx>>,
    /// User whose budget is saturated at the balanced optimum.
    pub admissible_index: usize,
    /// Iterations summed over all sub-problems tried.
    pub iterations: usize,
    /// `rho` trace of the admissible sub-problem.
    pub rho_trace: Vec<f64>,
}

/// Feasibility verdict plus balancing diagnostics.
#[derive(Clone, Debug)]
pub struct SimoReport {
    pub outcome: FeasibilityOutcome,
    /// Balancing level `C*` (infinite when no user has a positive target).
    pub level: f64,
    pub iterations: usize,
}

/// MMSE receive vectors for every user at powers `p`.
pub fn mmse_receivers(ch: &SimoChannel, p: &[f64]) -> Vec<DVector<Cx>> {
    (0..ch.users()).map(|k| ch.mmse_receiver(k, p)).collect()
}

/// Extended coupling matrix `A_i(W)` for saturated user `sat`.
///
/// All targets must be positive (callers exclude zero-target users first).
pub fn extended_matrix(
    ch: &SimoChannel,
    receivers: &[DVector<Cx>],
    targets: &[f64],
    sat: usize,
) -> DMatrix<f64> {
    assert!(targets.iter().all(|&g| g > 0.0), "extended_matrix requires positive targets");
    let active: Vec<usize> = (0..ch.users()).collect();
    extended_matrix_active(ch, receivers, targets, &active, sat)
}

/// `A_i(W)` restricted to `active` users; `sat` is a position in `active`.
fn extended_matrix_active(
    ch: &SimoChannel,
    receivers: &[DVector<Cx>],
    targets: &[f64],
    active: &[usize],
    sat: usize,
) -> DMatrix<f64> {
    let n = active.len();
    let d: Vec<f64> = active
        .iter()
        .map(|&k| targets[k] / receivers[k].dotc(ch.h(k, k)).norm_sqr())
        .collect();
    let coupling = |r: usize, c: usize| -> f64 {
        let (k, j) = (active[r], active[c]);
        if k == j {
            0.0
        } else {
            d[r] * receivers[k].dotc(ch.h(k, j)).norm_sqr()
        }
    };
    let noise_load =
        |r: usize| -> f64 { d[r] * ch.noise()[active[r]] * receivers[active[r]].norm_squared() };
    let budget = ch.pmax()[active[sat]];
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for r in 0..n {
        for c in 0..n {
            a[(r, c)] = coupling(r, c);
        }
        a[(r, n)] = noise_load(r);
    }
    for c in 0..n {
        a[(n, c)] = coupling(sat, c) / budget;
    }
    a[(n, n)] = noise_load(sat) / budget;
    a
}

/// Solves balancing sub-problem `sat` (that user's budget held tight).
///
/// `sat` must have a positive target. Alternates MMSE receive updates with
/// the dominant eigenpair of the extended coupling matrix, starting from
/// zero powers (receivers start as matched filters), until the improvement
/// of `rho` drops below `tol`.
pub fn solve_subproblem(
    ch: &SimoChannel,
    targets: &[f64],
    sat: usize,
    tol: f64,
    max_iters: usize,
) -> SubproblemOutcome {
    let k = ch.users();
    assert_eq!(targets.len(), k, "target vector length mismatch");
    assert!(targets[sat] > 0.0, "saturated user must have a positive target");
    let active = active_users(targets);
    let sat_pos = active.iter().position(|&u| u == sat).expect("sat is active");
    let n = active.len();

    let mut powers = vec![0.0; k];
    let mut rho_prev = f64::INFINITY;
    let mut rho_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut receivers = mmse_receivers(ch, &powers);
    loop {
        iterations += 1;
        let a = extended_matrix_active(ch, &receivers, targets, &active, sat_pos);
        let (rho, vec) = dominant_eigenpair(&a);
        let last = vec[n];
        if last.abs() <= 1e-14 * vec.amax() {
            // The fixed point with p_sat = pmax has no finite power vector
            // (interference among the other users dominates); mark the
            // sub-problem inadmissible via infinite powers.
            for &u in &active {
                powers[u] = f64::INFINITY;
            }
            rho_trace.push(rho);
            return SubproblemOutcome {
                level: 1.0 / rho,
                powers,
                receivers,
                iterations,
                rho_trace,
                converged: true,
            };
        }
        for (pos, &u) in active.iter().enumerate() {
            powers[u] = (vec[pos] / last).max(0.0);
        }
        rho_trace.push(rho);
        if rho_prev - rho < tol {
            converged = true;
            break;
        }
        if iterations >= max_iters {
            break;
        }
        rho_prev = rho;
        receivers = mmse_receivers(ch, &powers);
    }
    let level = 1.0 / rho_trace.last().copied().unwrap_or(f64::INFINITY);
    SubproblemOutcome { level, powers, receivers, iterations, rho_trace, converged }
}

/// Runs sub-problems in user order and returns the first whose balanced
/// powers respect every budget (within [`BUDGET_SLACK`] relative).
///
/// # Errors
///
/// [`Error::NoAdmissibleIndex`] if no sub-problem is admissible (theory
/// guarantees exactly one; reaching this indicates a numerical failure).
pub fn balance(
    ch: &SimoChannel,
    targets: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<BalanceOutcome, Error> {
    let active = active_users(targets);
    assert!(!active.is_empty(), "balance requires at least one positive target");
    let mut total_iterations = 0;
    for &sat in &active {
        let sub = solve_subproblem(ch, targets, sat, tol, max_iters);
        total_iterations += sub.iterations;
        let admissible = sub
            .powers
            .iter()
            .zip(ch.pmax())
            .all(|(&p, &cap)| p <= cap * (1.0 + BUDGET_SLACK));
        if admissible {
            return Ok(BalanceOutcome {
                level: sub.level,
                powers: sub.powers,
                receivers: sub.receivers,
                admissible_index: sat,
                iterations: total_iterations,
                rho_trace: sub.rho_trace,
            });
        }
    }
    Err(Error::NoAdmissibleIndex)
}

/// Decides whether `targets` fit within the channel's power budgets.
///
/// Feasible iff the balancing level reaches one (within [`WITNESS_SLACK`]).
/// The witness rescales the balanced powers at the *fixed* final receivers
/// so every active target is met tightly rather than overshot by `C*`.
pub fn check_feasible(
    ch: &SimoChannel,
    targets: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<SimoReport, Error> {
    let k = ch.users();
    assert_eq!(targets.len(), k, "target vector length mismatch");
    if active_users(targets).is_empty() {
        let powers = vec![0.0; k];
        let receivers = mmse_receivers(ch, &powers);
        return Ok(SimoReport {
            outcome: FeasibilityOutcome::feasible_with(Allocation::Simo { powers, receivers }),
            level: f64::INFINITY,
            iterations: 0,
        });
    }
    let bal = balance(ch, targets, tol, max_iters)?;
    if bal.level < 1.0 - WITNESS_SLACK {
        return Ok(SimoReport {
            outcome: FeasibilityOutcome::infeasible(),
            level: bal.level,
            iterations: bal.iterations,
        });
    }
    let powers = rescale_to_targets(ch, targets, &bal).unwrap_or_else(|| bal.powers.clone());
    let powers: Vec<f64> =
        powers.iter().zip(ch.pmax()).map(|(&p, &cap)| p.min(cap)).collect();
    Ok(SimoReport {
        outcome: FeasibilityOutcome::feasible_with(Allocation::Simo {
            powers,
            receivers: bal.receivers,
        }),
        level: bal.level,
        iterations: bal.iterations,
    })
}

/// Minimum powers meeting `targets` exactly at the balanced receivers: the
/// fixed receivers induce an effective scalar network, solved in closed form.
fn rescale_to_targets(ch: &SimoChannel, targets: &[f64], bal: &BalanceOutcome) -> Option<Vec<f64>> {
    let k = ch.users();
    let w = &bal.receivers;
    let gain: Vec<Vec<f64>> =
        (0..k).map(|r| (0..k).map(|c| w[r].dotc(ch.h(r, c)).norm_sqr()).collect()).collect();
    let noise: Vec<f64> = (0..k).map(|r| ch.noise()[r] * w[r].norm_squared()).collect();
    let eff = SisoChannel::new(gain, noise, ch.pmax().to_vec(), vec![1.0; k]).ok()?;
    siso::min_power(&eff, targets).ok()
}

/// Probe adapter for the boundary oracle.
pub struct SimoSolver<'a> {
    pub ch: &'a SimoChannel,
    pub tol: f64,
    pub max_iters: usize,
}

impl<'a> SimoSolver<'a> {
    pub fn new(ch: &'a SimoChannel) -> Self {
        SimoSolver { ch, tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS }
    }
}

impl SinrFeasibility for SimoSolver<'_> {
    fn users(&self) -> usize {
        self.ch.users()
    }

    fn check(&self, targets: &[f64]) -> Result<FeasibilityOutcome, Error> {
        Ok(check_feasible(self.ch, targets, self.tol, self.max_iters)?.outcome)
    }
}
