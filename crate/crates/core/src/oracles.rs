//! Slow, independent reference solvers used to cross-check the fast ones.
//!
//! Everything here is deliberately naive — exhaustive grids, blind random
//! search, textbook iterations — and shares no code path with the solvers
//! under test:
//!
//! * [`grid_wsr_siso`] — exhaustive weighted sum-rate search over a power
//!   grid (the ground truth for small scalar instances).
//! * [`random_wsr_simo`] / [`random_wsr_miso`] — random search over powers
//!   and beamformers; a lower bound on the best weighted sum-rate.
//! * [`random_min_ratio_simo`] — random search for the max-min
//!   SINR-to-target ratio; a lower bound on the balancing level.
//! * [`random_witness_miso`] — random search for an allocation meeting SINR
//!   targets; finding one proves feasibility independently of any solver.
//! * [`siso_fixed_point`] — the classic interference-function iteration
//!   `p <- G p + eta`, whose limit (when it exists) is the componentwise
//!   minimal power meeting the targets.
//! * [`finite_diff`] — central-difference gradients for derivative checks.
//!
//! Random searches take an explicit seed and are fully deterministic.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::channel::{
    rates_from_sinrs, weighted_sum, MisoChannel, SimoChannel, SisoChannel,
};
use crate::linalg::Cx;

/// Hard cap on grid-search size (total grid points).
pub const GRID_POINT_CAP: u128 = 32_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },
    #[error("no grid point satisfies the minimum rates")]
    NoFeasibleGridPoint,
}

/// Best weighted sum-rate over an exhaustive per-user power grid.
#[derive(Clone, Debug)]
pub struct GridSearch {
    pub wsr: f64,
    pub powers: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Exhaustively maximizes the weighted sum-rate of a scalar channel over
/// the grid `{0, pmax/(n-1), ..., pmax}` per user (`n` = `points_per_dim`),
/// skipping points that violate the optional per-user minimum rates.
pub fn grid_wsr_siso(
    ch: &SisoChannel,
    points_per_dim: usize,
    min_rates: Option<&[f64]>,
) -> Result<GridSearch, OracleError> {
    let k = ch.users();
    assert!(points_per_dim >= 2, "need at least the endpoints");
    let total = (points_per_dim as u128).pow(k as u32);
    if total > GRID_POINT_CAP {
        return Err(OracleError::GridTooLarge { points: total, cap: GRID_POINT_CAP });
    }

    let levels: Vec<Vec<f64>> = (0..k)
        .map(|u| {
            (0..points_per_dim)
                .map(|i| ch.pmax()[u] * i as f64 / (points_per_dim - 1) as f64)
                .collect()
        })
        .collect();

    let mut index = vec![0usize; k];
    let mut p = vec![0.0; k];
    let mut best: Option<GridSearch> = None;
    loop {
        for u in 0..k {
            p[u] = levels[u][index[u]];
        }
        let rates = rates_from_sinrs(&ch.sinr(&p));
        let admissible = match min_rates {
            None => true,
            Some(rmin) => rates.iter().zip(rmin.iter()).all(|(r, m)| r >= m),
        };
        if admissible {
            let wsr = weighted_sum(ch.weights(), &rates);
            if best.as_ref().map_or(true, |b| wsr > b.wsr) {
                best = Some(GridSearch { wsr, powers: p.clone(), rates });
            }
        }
        // Odometer increment.
        let mut dim = 0;
        loop {
            if dim == k {
                return best.ok_or(OracleError::NoFeasibleGridPoint);
            }
            index[dim] += 1;
            if index[dim] < points_per_dim {
                break;
            }
            index[dim] = 0;
            dim += 1;
        }
    }
}

fn complex_unit_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<Cx> {
    let v = DVector::from_fn(len, |_, _| {
        Cx::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / Cx::new(norm, 0.0)
}

/// Best weighted sum-rate found by uniform random powers with MMSE
/// receivers.
pub fn random_wsr_simo(ch: &SimoChannel, samples: usize, seed: u64) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ch.users();
    let mut best = (f64::NEG_INFINITY, vec![0.0; k]);
    for _ in 0..samples {
        let p: Vec<f64> = (0..k).map(|u| rng.random::<f64>() * ch.pmax()[u]).collect();
        let rates = rates_from_sinrs(&ch.mmse_evaluation(&p).sinr);
        let wsr = weighted_sum(ch.weights(), &rates);
        if wsr > best.0 {
            best = (wsr, p);
        }
    }
    best
}

/// Best `min_k sinr_k / target_k` found by uniform random powers with MMSE
/// receivers (per-user MMSE is ratio-optimal for any fixed powers, so only
/// powers need sampling). All targets must be positive.
pub fn random_min_ratio_simo(
    ch: &SimoChannel,
    targets: &[f64],
    samples: usize,
    seed: u64,
) -> f64 {
    assert!(targets.iter().all(|t| *t > 0.0), "ratios need positive targets");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ch.users();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let p: Vec<f64> = (0..k).map(|u| rng.random::<f64>() * ch.pmax()[u]).collect();
        let sinrs = ch.mmse_evaluation(&p).sinr;
        let ratio = sinrs
            .iter()
            .zip(targets.iter())
            .map(|(s, t)| s / t)
            .fold(f64::INFINITY, f64::min);
        best = best.max(ratio);
    }
    best
}

fn random_beams(rng: &mut ChaCha8Rng, ch: &MisoChannel) -> Vec<DVector<Cx>> {
    (0..ch.users())
        .map(|j| {
            let scale = (rng.random::<f64>() * ch.pmax()[j]).sqrt();
            complex_unit_vector(rng, ch.antennas(j)) * Cx::new(scale, 0.0)
        })
        .collect()
}

/// Best weighted sum-rate found by uniform random transmit beamformers
/// (uniform direction on the complex sphere, uniform power in the budget).
pub fn random_wsr_miso(ch: &MisoChannel, samples: usize, seed: u64) -> (f64, Vec<DVector<Cx>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: (f64, Vec<DVector<Cx>>) = (f64::NEG_INFINITY, Vec::new());
    for _ in 0..samples {
        let beams = random_beams(&mut rng, ch);
        let wsr = weighted_sum(ch.weights(), &rates_from_sinrs(&ch.sinr(&beams)));
        if wsr > best.0 {
            best = (wsr, beams);
        }
    }
    best
}

/// Random search for beamformers meeting per-user SINR targets. Returns the
/// first hit; `None` proves nothing (random search is sound, not complete).
pub fn random_witness_miso(
    ch: &MisoChannel,
    targets: &[f64],
    samples: usize,
    seed: u64,
) -> Option<Vec<DVector<Cx>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let beams = random_beams(&mut rng, ch);
        let sinrs = ch.sinr(&beams);
        if sinrs.iter().zip(targets.iter()).all(|(s, t)| s >= t) {
            return Some(beams);
        }
    }
    None
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn finite_diff<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Outcome of the interference-function iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum FixedPoint {
    /// Iterates settled; `powers` is the componentwise minimal solution.
    Converged { powers: Vec<f64>, iterations: usize },
    /// Iterates blew past any plausible power scale: targets unachievable
    /// at any power.
    Diverged { iterations: usize },
    /// Neither settled nor blew up within the iteration budget (marginal
    /// coupling grows too slowly to classify). Iterates increase
    /// monotonically toward the minimal solution, so any budget the final
    /// iterate already exceeds is conclusively insufficient.
    Stalled { powers: Vec<f64> },
}

/// Iterates `p <- G p + eta` from `p = 0`, where `G` and `eta` are the
/// normalized cross-gain matrix and noise load for the given SINR targets.
/// Standard interference-function theory: if a power vector meeting the
/// targets exists, the iteration converges monotonically (from below) to
/// the minimal one; otherwise it grows without bound.
pub fn siso_fixed_point(ch: &SisoChannel, targets: &[f64], max_iters: usize) -> FixedPoint {
    let k = ch.users();
    assert_eq!(targets.len(), k);
    // g[k][j] = target_k * gain[k][j] / gain[k][k] (zero diagonal, zero row
    // for zero targets); load[k] = target_k * noise_k / gain[k][k].
    let mut coupling = vec![vec![0.0; k]; k];
    let mut load = vec![0.0; k];
    for r in 0..k {
        load[r] = targets[r] * ch.noise()[r] / ch.gain(r, r);
        for c in 0..k {
            if c != r {
                coupling[r][c] = targets[r] * ch.gain(r, c) / ch.gain(r, r);
            }
        }
    }

    let blowup = 1e12 * (1.0 + load.iter().cloned().fold(0.0, f64::max))
        * (1.0 + ch.pmax().iter().cloned().fold(0.0, f64::max));
    let mut p = vec![0.0; k];
    let mut next = vec![0.0; k];
    let mut floor_hits = 0;
    let mut prev_delta = f64::INFINITY;
    for n in 1..=max_iters {
        let mut delta = 0.0f64;
        let mut scale = 1.0f64;
        for r in 0..k {
            let mut acc = load[r];
            for c in 0..k {
                acc += coupling[r][c] * p[c];
            }
            next[r] = acc;
            delta = delta.max((next[r] - p[r]).abs());
            scale = scale.max(next[r].abs());
        }
        std::mem::swap(&mut p, &mut next);
        if p.iter().any(|x| *x > blowup) {
            return FixedPoint::Diverged { iterations: n };
        }
        if delta <= 5e-16 * scale {
            return FixedPoint::Converged { powers: p, iterations: n };
        }
        // Numerical floor: already-tiny steps that stop shrinking are
        // rounding dither, not progress. (Large non-shrinking steps are the
        // opposite — growth — and must never count as convergence.)
        if delta <= 1e-10 * scale && delta >= prev_delta {
            floor_hits += 1;
            if floor_hits > 200 {
                return FixedPoint::Converged { powers: p, iterations: n };
            }
        } else {
            floor_hits = 0;
        }
        prev_delta = delta;
    }
    FixedPoint::Stalled { powers: p }
}
