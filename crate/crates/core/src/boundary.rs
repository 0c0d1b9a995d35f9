//! Pareto-boundary oracle for achievable rate regions.
//!
//! The region of jointly achievable rate tuples is normal (closed under
//! componentwise decrease), so any ray from an interior origin crosses its
//! upper boundary exactly once. This module locates that crossing by
//! bisection on the *total* rate along a fixed rate profile:
//!
//! * a vertex `z` above `origin` fixes the profile
//!   `alpha = (z - origin) / sum(z - origin)`;
//! * a candidate total `s` maps to the rate tuple
//!   `origin + alpha * (s - sum(origin))` and, via `sinr = 2^rate - 1`, to
//!   per-user SINR targets;
//! * a topology-specific feasibility solver decides each candidate.
//!
//! The bracket starts at the origin's own total (infeasible there means the
//! minimum-rate requirement itself cannot be met) and at the total where
//! the ray exits the bounding box of single-user capacities `z1` (feasible
//! there means the vertex region is fully achievable and the exit point is
//! returned without bisection). The returned point is the last *feasible*
//! probe, so its witness allocation really achieves the reported rates.

use nalgebra::DVector;
use thiserror::Error;

use crate::channel::{rate_to_sinr, Allocation, Channel, MisoChannel, SimoChannel, SisoChannel};
use crate::feasibility::{self, MisoSolver, SimoSolver, SinrFeasibility, SisoSolver};
use crate::polyblock::{BoundaryOracle, OracleError, RayIntersection};

/// Default width of the final bisection bracket on the total rate.
pub const DEFAULT_BISECT_TOL: f64 = 1e-4;

/// Errors raised while constructing a [`RateRegionOracle`].
#[derive(Debug, Error)]
pub enum RegionError {
    #[error("invalid minimum rates: {0}")]
    InvalidMinRates(String),
    #[error("invalid bisection tolerance: {0}")]
    InvalidTolerance(f64),
}

/// Direction of a boundary ray: origin plus nonnegative profile.
#[derive(Clone, Debug)]
pub struct RateProfile {
    origin: DVector<f64>,
    alpha: DVector<f64>,
    origin_sum: f64,
}

impl RateProfile {
    /// Profile of the ray from `origin` through `vertex`; the vertex must
    /// dominate the origin with positive total excess.
    pub fn from_vertex(vertex: &DVector<f64>, origin: &DVector<f64>) -> Result<Self, OracleError> {
        if vertex.len() != origin.len() {
            return Err(OracleError::DegenerateRay(format!(
                "vertex has {} coordinates, origin {}",
                vertex.len(),
                origin.len()
            )));
        }
        let excess = vertex - origin;
        if excess.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(OracleError::DegenerateRay(
                "vertex must dominate the origin componentwise".into(),
            ));
        }
        let total: f64 = excess.sum();
        if total <= 0.0 {
            return Err(OracleError::DegenerateRay(
                "vertex coincides with the origin".into(),
            ));
        }
        Ok(RateProfile { origin: origin.clone(), alpha: excess / total, origin_sum: origin.sum() })
    }

    /// Rate tuple on the ray with total rate `sum`.
    pub fn rates_at(&self, sum: f64) -> DVector<f64> {
        &self.origin + &self.alpha * (sum - self.origin_sum)
    }

    /// Total rate at the origin (the lower end of any bracket).
    pub fn origin_sum(&self) -> f64 {
        self.origin_sum
    }

    /// Largest total for which the ray stays inside the box `[0, z1]`.
    pub fn box_exit_sum(&self, z1: &DVector<f64>) -> f64 {
        let mut excess = f64::INFINITY;
        for i in 0..self.alpha.len() {
            if self.alpha[i] > 0.0 {
                excess = excess.min((z1[i] - self.origin[i]) / self.alpha[i]);
            }
        }
        self.origin_sum + excess.max(0.0)
    }
}

/// SINR targets equivalent to a rate tuple (`2^rate - 1` per user).
pub fn targets_for_rates(rates: &DVector<f64>) -> Vec<f64> {
    rates.iter().map(|r| rate_to_sinr(*r)).collect()
}

/// Bisects the boundary crossing along `profile` for any SINR feasibility
/// solver. `z1` caps the search (per-user single-user capacities).
pub fn intersect_along<P: SinrFeasibility + ?Sized>(
    probe: &P,
    profile: &RateProfile,
    z1: &DVector<f64>,
    tol: f64,
) -> Result<RayIntersection<Allocation>, OracleError> {
    let mut probes = 0;
    let mut check = |sum: f64| -> Result<(DVector<f64>, feasibility::FeasibilityOutcome), OracleError> {
        probes += 1;
        let rates = profile.rates_at(sum);
        let outcome = probe.check(&targets_for_rates(&rates))?;
        Ok((rates, outcome))
    };

    let mut lo = profile.origin_sum();
    let (origin_rates, at_origin) = check(lo)?;
    if !at_origin.feasible {
        return Err(OracleError::OriginInfeasible);
    }
    let mut last = (origin_rates, at_origin.witness);

    let mut hi = profile.box_exit_sum(z1);
    if hi <= lo {
        // Degenerate ray budget: the origin already sits on the box face.
        let (rates, witness) = last;
        return Ok(RayIntersection { rates, witness: expect_witness(witness), probes });
    }
    let (exit_rates, at_exit) = check(hi)?;
    if at_exit.feasible {
        // The whole ray segment is achievable; the box face is the crossing.
        return Ok(RayIntersection {
            rates: exit_rates,
            witness: expect_witness(at_exit.witness),
            probes,
        });
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket narrower than float spacing
        }
        let (rates, outcome) = check(mid)?;
        if outcome.feasible {
            lo = mid;
            last = (rates, outcome.witness);
        } else {
            hi = mid;
        }
    }

    let (rates, witness) = last;
    Ok(RayIntersection { rates, witness: expect_witness(witness), probes })
}

fn expect_witness(witness: Option<Allocation>) -> Allocation {
    // Feasibility solvers always attach a witness to a feasible verdict.
    witness.expect("feasible outcome must carry a witness allocation")
}

// --- rate-region oracle over a concrete channel ---

enum SolverKind<'a> {
    Siso(SisoSolver<'a>),
    Simo(SimoSolver<'a>),
    Miso(MisoSolver<'a>),
}

impl SinrFeasibility for SolverKind<'_> {
    fn users(&self) -> usize {
        match self {
            SolverKind::Siso(s) => s.users(),
            SolverKind::Simo(s) => s.users(),
            SolverKind::Miso(s) => s.users(),
        }
    }

    fn check(&self, targets: &[f64]) -> Result<feasibility::FeasibilityOutcome, feasibility::Error> {
        match self {
            SolverKind::Siso(s) => s.check(targets),
            SolverKind::Simo(s) => s.check(targets),
            SolverKind::Miso(s) => s.check(targets),
        }
    }
}

/// Boundary oracle for a concrete channel: rate-profile bisection through
/// the topology's SINR feasibility solver, with optional per-user minimum
/// rates shifting the ray origin.
pub struct RateRegionOracle<'a> {
    solver: SolverKind<'a>,
    origin: DVector<f64>,
    z1: DVector<f64>,
    bisect_tol: f64,
}

impl<'a> RateRegionOracle<'a> {
    pub fn for_siso(
        ch: &'a SisoChannel,
        min_rates: Option<&[f64]>,
        bisect_tol: f64,
    ) -> Result<Self, RegionError> {
        Self::build(SolverKind::Siso(SisoSolver { ch }), ch.initial_vertex(), min_rates, bisect_tol)
    }

    pub fn for_simo(
        ch: &'a SimoChannel,
        min_rates: Option<&[f64]>,
        bisect_tol: f64,
    ) -> Result<Self, RegionError> {
        Self::build(
            SolverKind::Simo(SimoSolver::new(ch)),
            ch.initial_vertex(),
            min_rates,
            bisect_tol,
        )
    }

    pub fn for_miso(
        ch: &'a MisoChannel,
        min_rates: Option<&[f64]>,
        bisect_tol: f64,
    ) -> Result<Self, RegionError> {
        Self::build(SolverKind::Miso(MisoSolver { ch }), ch.initial_vertex(), min_rates, bisect_tol)
    }

    pub fn for_channel(
        ch: &'a Channel,
        min_rates: Option<&[f64]>,
        bisect_tol: f64,
    ) -> Result<Self, RegionError> {
        match ch {
            Channel::Siso(c) => Self::for_siso(c, min_rates, bisect_tol),
            Channel::Simo(c) => Self::for_simo(c, min_rates, bisect_tol),
            Channel::Miso(c) => Self::for_miso(c, min_rates, bisect_tol),
        }
    }

    fn build(
        solver: SolverKind<'a>,
        z1: DVector<f64>,
        min_rates: Option<&[f64]>,
        bisect_tol: f64,
    ) -> Result<Self, RegionError> {
        if !(bisect_tol > 0.0) || !bisect_tol.is_finite() {
            return Err(RegionError::InvalidTolerance(bisect_tol));
        }
        let k = z1.len();
        let origin = match min_rates {
            None => DVector::zeros(k),
            Some(r) => {
                if r.len() != k {
                    return Err(RegionError::InvalidMinRates(format!(
                        "expected {k} entries, got {}",
                        r.len()
                    )));
                }
                for (i, &ri) in r.iter().enumerate() {
                    if !ri.is_finite() || ri < 0.0 {
                        return Err(RegionError::InvalidMinRates(format!(
                            "rate {ri} for user {i} must be finite and nonnegative"
                        )));
                    }
                    if ri >= z1[i] {
                        return Err(RegionError::InvalidMinRates(format!(
                            "rate {ri} for user {i} reaches its single-user capacity {}",
                            z1[i]
                        )));
                    }
                }
                DVector::from_column_slice(r)
            }
        };
        Ok(RateRegionOracle { solver, origin, z1, bisect_tol })
    }

    /// Ray origin: required minimum rates, or all zeros.
    pub fn origin(&self) -> DVector<f64> {
        self.origin.clone()
    }

    /// Per-user single-user capacities (full own power, no interference):
    /// the initial cover vertex.
    pub fn initial_vertex(&self) -> DVector<f64> {
        self.z1.clone()
    }

    pub fn bisect_tol(&self) -> f64 {
        self.bisect_tol
    }

    pub fn users(&self) -> usize {
        self.z1.len()
    }

    /// Direct feasibility check of a rate tuple (no ray involved).
    pub fn check_rates(
        &self,
        rates: &DVector<f64>,
    ) -> Result<feasibility::FeasibilityOutcome, feasibility::Error> {
        self.solver.check(&targets_for_rates(rates))
    }
}

impl BoundaryOracle for RateRegionOracle<'_> {
    type Witness = Allocation;

    fn intersect(
        &self,
        vertex: &DVector<f64>,
        origin: &DVector<f64>,
    ) -> Result<RayIntersection<Allocation>, OracleError> {
        debug_assert_eq!(origin, &self.origin, "engine must pass the oracle's own origin");
        let profile = RateProfile::from_vertex(vertex, origin)?;
        intersect_along(&self.solver, &profile, &self.z1, self.bisect_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(vals)
    }

    fn symmetric_pair(cross: f64) -> SisoChannel {
        SisoChannel::new(
            vec![vec![1.0, cross], vec![cross, 1.0]],
            vec![1.0, 1.0],
            vec![3.0, 3.0],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn profile_reproduces_vertex_at_its_own_total() {
        let vertex = dv(&[2.0, 1.0, 0.5]);
        let origin = dv(&[0.5, 0.0, 0.25]);
        let profile = RateProfile::from_vertex(&vertex, &origin).unwrap();
        let rates = profile.rates_at(vertex.sum());
        assert_relative_eq!(rates, vertex, epsilon = 1e-12);
        assert_relative_eq!(profile.rates_at(origin.sum()), origin, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_vertex_is_rejected() {
        let origin = dv(&[0.5, 0.5]);
        assert!(matches!(
            RateProfile::from_vertex(&origin.clone(), &origin),
            Err(OracleError::DegenerateRay(_))
        ));
        assert!(matches!(
            RateProfile::from_vertex(&dv(&[0.4, 1.0]), &origin),
            Err(OracleError::DegenerateRay(_))
        ));
    }

    #[test]
    fn single_user_boundary_is_the_capacity() {
        // One user, gain 2, noise 1, power 3: capacity log2(7). The ray
        // through the capacity vertex exits the box exactly there.
        let ch = SisoChannel::new(vec![vec![2.0]], vec![1.0], vec![3.0], vec![1.0]).unwrap();
        let oracle = RateRegionOracle::for_siso(&ch, None, 1e-6).unwrap();
        let inter = oracle.intersect(&oracle.initial_vertex(), &oracle.origin()).unwrap();
        assert_relative_eq!(inter.rates[0], 7.0f64.log2(), epsilon = 1e-9);
        match inter.witness {
            Allocation::Siso { ref powers } => {
                assert_relative_eq!(powers[0], 3.0, epsilon = 1e-6, max_relative = 1e-6)
            }
            _ => panic!("single-carrier witness expected"),
        }
    }

    #[test]
    fn symmetric_ray_crossing_is_tight() {
        // On the 45-degree ray of a symmetric channel the crossing has equal
        // rates; nudging the total up by twice the tolerance must be
        // infeasible, and the witness must achieve the reported rates.
        let ch = symmetric_pair(0.4);
        let tol = 1e-6;
        let oracle = RateRegionOracle::for_siso(&ch, None, tol).unwrap();
        let inter = oracle.intersect(&dv(&[1.0, 1.0]), &oracle.origin()).unwrap();
        assert_relative_eq!(inter.rates[0], inter.rates[1], epsilon = 1e-9);

        let feasible = oracle.check_rates(&inter.rates).unwrap();
        assert!(feasible.feasible, "reported crossing must be feasible");
        let beyond = &inter.rates * (1.0 + 2.0 * tol / inter.rates.sum());
        assert!(
            !oracle.check_rates(&beyond).unwrap().feasible,
            "crossing must sit within tolerance of the boundary"
        );

        let achieved = inter.witness.rates(&crate::channel::Channel::Siso(ch.clone())).unwrap();
        for (a, r) in achieved.iter().zip(inter.rates.iter()) {
            assert!(a + 1e-9 >= *r, "witness rate {a} below reported {r}");
        }
    }

    #[test]
    fn origin_probe_counts_toward_reported_probes() {
        let ch = symmetric_pair(0.4);
        let oracle = RateRegionOracle::for_siso(&ch, None, 1e-4).unwrap();
        let inter = oracle.intersect(&dv(&[1.5, 0.5]), &oracle.origin()).unwrap();
        // At least origin + box exit + one bisection step.
        assert!(inter.probes >= 3, "expected several probes, saw {}", inter.probes);
    }

    #[test]
    fn infeasible_min_rates_surface_as_origin_infeasible() {
        // Strong cross gains: both users near single-user capacity at once
        // is impossible.
        let ch = symmetric_pair(5.0);
        let z1 = ch.initial_vertex();
        let rmin = [z1[0] * 0.95, z1[1] * 0.95];
        let oracle = RateRegionOracle::for_siso(&ch, Some(&rmin), 1e-4).unwrap();
        let vertex = oracle.initial_vertex();
        assert!(matches!(
            oracle.intersect(&vertex, &oracle.origin()),
            Err(OracleError::OriginInfeasible)
        ));
    }

    #[test]
    fn min_rates_must_stay_below_single_user_capacity() {
        let ch = symmetric_pair(0.4);
        let z1 = ch.initial_vertex();
        assert!(matches!(
            RateRegionOracle::for_siso(&ch, Some(&[z1[0], 0.0]), 1e-4),
            Err(RegionError::InvalidMinRates(_))
        ));
        assert!(matches!(
            RateRegionOracle::for_siso(&ch, Some(&[-0.1, 0.0]), 1e-4),
            Err(RegionError::InvalidMinRates(_))
        ));
        assert!(RateRegionOracle::for_siso(&ch, Some(&[0.5, 0.5]), 1e-4).is_ok());
    }

    #[test]
    fn min_rates_shift_the_returned_crossing() {
        let ch = symmetric_pair(0.4);
        let rmin = [0.8, 0.1];
        let oracle = RateRegionOracle::for_siso(&ch, Some(&rmin), 1e-6).unwrap();
        let inter = oracle.intersect(&oracle.initial_vertex(), &oracle.origin()).unwrap();
        assert!(inter.rates[0] >= 0.8 - 1e-12 && inter.rates[1] >= 0.1 - 1e-12);
    }
}
