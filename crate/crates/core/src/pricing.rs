//! Interference-pricing baselines for SIMO power control and MISO
//! beamformer design.
//!
//! Each receiver announces a price — the marginal loss of its own weighted
//! rate per unit of interference — and each transmitter then maximizes its
//! own weighted rate minus the interference tax it pays to everyone else.
//! The updates run in synchronous round-robin sweeps: all prices are
//! announced from the sweep-start state, then users update one after the
//! other (each seeing the updates already made this sweep).
//!
//! These heuristics are the comparison baselines for the global optimizer:
//! fast, greedy, and *not* guaranteed to converge or to reach the optimum.
//! A run that stops improving its weighted sum-rate for a full stall window
//! is reported as "not converged" together with the best state seen;
//! nothing is erred.
//!
//! Formulas (natural log denoted ln, rates in bits):
//!
//! * SIMO price charged by receiver j for transmitter k's power:
//!   `price[j][k] = p_j |u_j^H h_jk|^2 / (ln2 (1 + p_j q_j))` with
//!   `u_j = M_j^{-1} h_jj`, `q_j = h_jj^H u_j`, and `M_j` the
//!   interference-plus-noise covariance at receiver j. This is exactly
//!   `-d R_j / d p_k` of the MMSE rate.
//! * SIMO power update: `p_k = clamp(mu_k / (ln2 T_k) - 1/q_k, 0, pmax_k)`
//!   where `T_k = sum_{j != k} mu_j price[j][k]`; full power when `T_k = 0`.
//! * MISO price of receiver k: `price_k = s_k / (ln2 (s_k + c_k) c_k)` with
//!   `s_k = |h_kk^H v_k|^2` and `c_k` its interference-plus-noise level:
//!   `-d R_k / d interference`.
//! * MISO beam update: maximize
//!   `mu_k log2(1 + |h_kk^H v|^2 / c_k) - v^H B_k v` over `||v||^2 <= pmax_k`
//!   with tax matrix `B_k = sum_{j != k} mu_j price_j h_jk h_jk^H`, solved
//!   exactly by bisection on the budget multiplier (see
//!   [`miso_beam_update`]).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::channel::{
    rates_from_sinrs, weighted_sum, Allocation, MisoChannel, SimoChannel,
};
use crate::linalg::{solve_hpd, Cx};

const LN2: f64 = std::f64::consts::LN_2;

/// Default sweep-to-sweep power-change threshold for convergence.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default sweep cap.
pub const DEFAULT_MAX_SWEEPS: usize = 2_000;
/// Sweeps without any weighted-sum-rate improvement before a run is
/// declared non-convergent.
pub const STALL_WINDOW: usize = 50;

/// Errors from the MISO beam update's inner solve.
#[derive(Debug, Error)]
pub enum PricingError {
    #[error("beam update inner solve failed: {0}")]
    SolverFailure(String),
}

/// One sweep of a pricing run, as written to trajectory CSVs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajectoryRow {
    pub sweep: usize,
    pub wsr: f64,
    /// Largest per-user change this sweep: `|delta p_k|` for SIMO,
    /// `||delta v_k||^2` for MISO (sweep 0 records the initial state with
    /// change 0).
    pub max_power_change: f64,
}

/// Outcome of a pricing run.
///
/// For converged runs the reported state is the fixed point reached; for
/// non-converged runs it is the best state seen along the trajectory.
#[derive(Clone, Debug)]
pub struct PricingRun {
    pub wsr: f64,
    pub rates: Vec<f64>,
    pub allocation: Allocation,
    pub converged: bool,
    /// Completed sweeps (excluding the sweep-0 initial evaluation).
    pub sweeps: usize,
    pub trajectory: Vec<TrajectoryRow>,
}

// --- SIMO: power pricing under MMSE receive beamforming ---

/// Interference-plus-noise covariance at receiver j (own stream excluded).
fn simo_covariance(ch: &SimoChannel, p: &[f64], j: usize) -> DMatrix<Cx> {
    let m = ch.antennas(j);
    let mut cov = DMatrix::<Cx>::identity(m, m) * Cx::new(ch.noise()[j], 0.0);
    for i in 0..ch.users() {
        if i != j && p[i] > 0.0 {
            let h = ch.h(j, i);
            cov += h * h.adjoint() * Cx::new(p[i], 0.0);
        }
    }
    cov
}

/// Whitened direct channel `u_j = M_j^{-1} h_jj` and the effective gain
/// `q_j = h_jj^H u_j` (real positive).
fn whitened_direct(ch: &SimoChannel, p: &[f64], j: usize) -> (DVector<Cx>, f64) {
    let cov = simo_covariance(ch, p, j);
    let u = solve_hpd(&cov, ch.h(j, j))
        .expect("noise keeps the interference covariance positive definite");
    let q = ch.h(j, j).dotc(&u).re;
    (u, q)
}

/// Price matrix: entry `(j, k)` is what receiver j charges transmitter k
/// per unit power, `-d R_j / d p_k` of the MMSE rate; diagonal is 0.
pub fn simo_price(ch: &SimoChannel, p: &[f64]) -> DMatrix<f64> {
    let k = ch.users();
    assert_eq!(p.len(), k, "power vector length");
    let mut prices = DMatrix::zeros(k, k);
    for j in 0..k {
        if p[j] == 0.0 {
            // p_j = 0 zeroes the numerator; skip the solve.
            continue;
        }
        let (u, q) = whitened_direct(ch, p, j);
        let denom = LN2 * (1.0 + p[j] * q);
        for i in 0..k {
            if i != j {
                prices[(j, i)] = p[j] * u.dotc(ch.h(j, i)).norm_sqr() / denom;
            }
        }
    }
    prices
}

/// Best response of user k's power given announced prices and the other
/// users' current powers: water-level closed form, clamped to `[0, pmax]`;
/// full power when nobody charges.
pub fn simo_power_update(
    ch: &SimoChannel,
    p: &[f64],
    prices: &DMatrix<f64>,
    k: usize,
) -> f64 {
    let total: f64 = (0..ch.users())
        .filter(|j| *j != k)
        .map(|j| ch.weights()[j] * prices[(j, k)])
        .sum();
    let pmax = ch.pmax()[k];
    if total == 0.0 {
        return pmax;
    }
    let (_, q) = whitened_direct(ch, p, k);
    (ch.weights()[k] / (LN2 * total) - 1.0 / q).clamp(0.0, pmax)
}

/// Round-robin SIMO pricing from full power.
pub fn run_simo_pricing(ch: &SimoChannel, max_sweeps: usize, tol: f64) -> PricingRun {
    let users = ch.users();
    let mut p: Vec<f64> = ch.pmax().to_vec();

    let evaluate = |p: &[f64]| -> (f64, Vec<f64>, Allocation) {
        let eval = ch.mmse_evaluation(p);
        let rates = rates_from_sinrs(&eval.sinr);
        let wsr = weighted_sum(ch.weights(), &rates);
        (wsr, rates, Allocation::Simo { powers: p.to_vec(), receivers: eval.receivers })
    };

    let (wsr0, rates0, alloc0) = evaluate(&p);
    let mut trajectory = vec![TrajectoryRow { sweep: 0, wsr: wsr0, max_power_change: 0.0 }];
    let mut best = (wsr0, rates0, alloc0, 0usize); // (wsr, rates, allocation, sweep)

    for sweep in 1..=max_sweeps {
        let prices = simo_price(ch, &p);
        let mut max_change = 0.0f64;
        for k in 0..users {
            let updated = simo_power_update(ch, &p, &prices, k);
            max_change = max_change.max((updated - p[k]).abs());
            p[k] = updated;
        }
        let (wsr, rates, alloc) = evaluate(&p);
        trajectory.push(TrajectoryRow { sweep, wsr, max_power_change: max_change });
        if wsr > best.0 {
            best = (wsr, rates.clone(), alloc.clone(), sweep);
        }
        if max_change < tol {
            return PricingRun {
                wsr,
                rates,
                allocation: alloc,
                converged: true,
                sweeps: sweep,
                trajectory,
            };
        }
        if sweep - best.3 >= STALL_WINDOW {
            break; // stalled: no improvement for a full window
        }
    }
    let (wsr, rates, allocation, _) = best;
    PricingRun { wsr, rates, allocation, converged: false, sweeps: trajectory.len() - 1, trajectory }
}

// --- MISO: interference pricing over transmit beamformers ---

/// Per-receiver prices and interference levels for the current beams:
/// `price_k = -d R_k / d interference_k`.
pub fn miso_price(ch: &MisoChannel, beams: &[DVector<Cx>]) -> (Vec<f64>, Vec<f64>) {
    let k = ch.users();
    assert_eq!(beams.len(), k, "beam count");
    let mut prices = vec![0.0; k];
    let mut levels = vec![0.0; k];
    for r in 0..k {
        let s = ch.h(r, r).dotc(&beams[r]).norm_sqr();
        let gamma: f64 =
            (0..k).filter(|j| *j != r).map(|j| ch.h(r, j).dotc(&beams[j]).norm_sqr()).sum();
        let c = gamma + ch.noise()[r];
        levels[r] = gamma;
        if s > 0.0 {
            prices[r] = s / (LN2 * (s + c) * c);
        }
    }
    (prices, levels)
}

/// Best response of user k's transmit beamformer given announced prices and
/// the other users' current beams.
///
/// Maximizes `mu log2(1 + |h^H v|^2 / c) - v^H B v` over `||v||^2 <= pmax`.
/// For any budget multiplier `lambda >= 0` the Lagrangian maximizer is
/// closed-form: `v = sqrt(t) (B + lambda I)^{-1} h` with
/// `t = max(0, mu/(a ln2) - c/a^2)`, `a = h^H (B + lambda I)^{-1} h`, and
/// its squared norm is non-increasing in `lambda`; a bisection on `lambda`
/// therefore pins the budget exactly when the unconstrained maximizer
/// overshoots it.
pub fn miso_beam_update(
    ch: &MisoChannel,
    beams: &[DVector<Cx>],
    prices: &[f64],
    k: usize,
) -> Result<DVector<Cx>, PricingError> {
    let n = ch.antennas(k);
    let h = ch.h(k, k);
    let pmax = ch.pmax()[k];
    let mu = ch.weights()[k];
    if mu == 0.0 {
        // No utility, nonnegative tax: silence is optimal.
        return Ok(DVector::zeros(n));
    }
    let c = ch.noise()[k]
        + (0..ch.users())
            .filter(|j| *j != k)
            .map(|j| ch.h(k, j).dotc(&beams[j]).norm_sqr())
            .sum::<f64>();

    let mut tax = DMatrix::<Cx>::zeros(n, n);
    for j in 0..ch.users() {
        if j != k && ch.weights()[j] * prices[j] > 0.0 {
            let hj = ch.h(j, k);
            tax += hj * hj.adjoint() * Cx::new(ch.weights()[j] * prices[j], 0.0);
        }
    }
    let tax_trace: f64 = tax.diagonal().iter().map(|d| d.re).sum();
    if tax_trace <= 1e-14 {
        // Untaxed rate maximization: matched filtering at full power.
        return Ok(h * Cx::new((pmax.sqrt()) / h.norm(), 0.0));
    }

    // candidate(lambda) -> (squared norm, beamformer scale t, direction u)
    let candidate = |lambda: f64| -> Result<(f64, f64, DVector<Cx>), PricingError> {
        let mut shifted = tax.clone();
        for i in 0..n {
            shifted[(i, i)] += Cx::new(lambda, 0.0);
        }
        let u = solve_hpd(&shifted, h).ok_or_else(|| {
            PricingError::SolverFailure(format!("shifted tax matrix singular at lambda={lambda}"))
        })?;
        let a = h.dotc(&u).re;
        if !(a > 0.0) || !a.is_finite() {
            return Err(PricingError::SolverFailure(format!(
                "effective gain {a} not positive at lambda={lambda}"
            )));
        }
        let t = (mu / (a * LN2) - c / (a * a)).max(0.0);
        Ok((t * u.norm_squared(), t, u))
    };

    let floor = 1e-12 * (1.0 + tax_trace);
    let (norm0, t0, u0) = candidate(floor)?;
    if norm0 <= pmax {
        return Ok(u0 * Cx::new(t0.sqrt(), 0.0));
    }

    let mut lo = floor;
    let mut hi = 1.0f64.max(2.0 * floor);
    let mut at_hi = candidate(hi)?;
    while at_hi.0 > pmax {
        hi *= 2.0;
        if hi > 1e18 {
            return Err(PricingError::SolverFailure("budget multiplier bracket blew up".into()));
        }
        at_hi = candidate(hi)?;
    }
    let mut within = at_hi; // most recent candidate with norm <= pmax
    for _ in 0..200 {
        if (within.0 - pmax).abs() <= 1e-12 * pmax.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let at_mid = candidate(mid)?;
        if at_mid.0 > pmax {
            lo = mid;
        } else {
            hi = mid;
            within = at_mid;
        }
    }
    let (_, t, u) = within;
    Ok(u * Cx::new(t.sqrt(), 0.0))
}

/// Round-robin MISO pricing from matched-filter beams at full power.
pub fn run_miso_pricing(
    ch: &MisoChannel,
    max_sweeps: usize,
    tol: f64,
) -> Result<PricingRun, PricingError> {
    let users = ch.users();
    let mut beams: Vec<DVector<Cx>> = (0..users)
        .map(|k| {
            let h = ch.h(k, k);
            h * Cx::new(ch.pmax()[k].sqrt() / h.norm(), 0.0)
        })
        .collect();

    let evaluate = |beams: &[DVector<Cx>]| -> (f64, Vec<f64>, Allocation) {
        let rates = rates_from_sinrs(&ch.sinr(beams));
        let wsr = weighted_sum(ch.weights(), &rates);
        (wsr, rates, Allocation::Miso { beams: beams.to_vec() })
    };

    let (wsr0, rates0, alloc0) = evaluate(&beams);
    let mut trajectory = vec![TrajectoryRow { sweep: 0, wsr: wsr0, max_power_change: 0.0 }];
    let mut best = (wsr0, rates0, alloc0, 0usize);

    for sweep in 1..=max_sweeps {
        let (prices, _) = miso_price(ch, &beams);
        let mut max_change = 0.0f64;
        for k in 0..users {
            let updated = miso_beam_update(ch, &beams, &prices, k)?;
            max_change = max_change.max((&updated - &beams[k]).norm_squared());
            beams[k] = updated;
        }
        let (wsr, rates, alloc) = evaluate(&beams);
        trajectory.push(TrajectoryRow { sweep, wsr, max_power_change: max_change });
        if wsr > best.0 {
            best = (wsr, rates.clone(), alloc.clone(), sweep);
        }
        if max_change < tol {
            return Ok(PricingRun {
                wsr,
                rates,
                allocation: alloc,
                converged: true,
                sweeps: sweep,
                trajectory,
            });
        }
        if sweep - best.3 >= STALL_WINDOW {
            break;
        }
    }
    let (wsr, rates, allocation, _) = best;
    Ok(PricingRun {
        wsr,
        rates,
        allocation,
        converged: false,
        sweeps: trajectory.len() - 1,
        trajectory,
    })
}
