//! Outer polyblock approximation for monotonic optimization over normal
//! sets.
//!
//! A rate region under interference is generally non-convex but *normal*:
//! with any achievable tuple, every componentwise-smaller tuple is
//! achievable too. Maximizing an increasing objective `U(z) = sum_k
//! weights[k] z[k]` over such a set only needs its upper (Pareto) boundary,
//! which this engine localizes by shrinking an outer cover:
//!
//! 1. Keep a finite vertex set `V`; the polyblock `union of boxes
//!    [origin, v]` always contains the region's part above `origin`.
//! 2. Select the cover vertex with the largest `U` inside the epsilon
//!    strip (every coordinate at least `epsilon` above the origin); its
//!    `U` upper-bounds the optimum.
//! 3. Shoot the ray from the origin through the selected vertex; the
//!    boundary oracle returns its last feasible point `r`, which improves
//!    the incumbent (lower bound).
//! 4. Stop when cover minus incumbent is within `eta`; otherwise replace
//!    the selected vertex `z` by the K children `z - (z[i] - r[i]) e_i`,
//!    which cuts the infeasible corner above `r` out of the cover, and
//!    repeat.
//!
//! The epsilon strip prevents the ray from collapsing onto a coordinate
//! plane (where the boundary intersection stops making progress); its cost
//! is the usual additive `O(epsilon)`-grade approximation on top of `eta`.
//! Children updates deduplicate bit-exact vertices and (by default) drop
//! dominated vertices. Dropping a dominated vertex leaves the cover's
//! union unchanged at that moment, and over a run it tightens the cover:
//! a retained stale vertex can poke into corners its dominator's cuts
//! have already proven empty, and re-cutting those costs iterations.

use nalgebra::DVector;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use thiserror::Error;

/// What the boundary oracle hands back for one ray.
#[derive(Clone, Debug)]
pub struct RayIntersection<W> {
    /// Last feasible point on the ray (on the region's upper boundary, up to
    /// the oracle's own tolerance).
    pub rates: DVector<f64>,
    /// Allocation attaining `rates`.
    pub witness: W,
    /// Feasibility probes the oracle spent on this ray.
    pub probes: usize,
}

/// Errors an oracle may raise while intersecting a ray.
#[derive(Debug, Error)]
pub enum OracleError {
    /// The vertex does not define a usable ray from the origin.
    #[error("vertex does not define a valid ray: {0}")]
    DegenerateRay(String),
    /// The origin itself (e.g. required minimum rates) is infeasible.
    #[error("the ray origin is infeasible")]
    OriginInfeasible,
    /// A feasibility probe failed irrecoverably.
    #[error("feasibility probe failed: {0}")]
    Probe(#[from] crate::feasibility::Error),
}

/// Boundary oracle contract: intersect the ray `origin -> vertex` with the
/// region's upper boundary.
///
/// Implementations must be deterministic; the engine calls `intersect` once
/// per iteration with a vertex strictly above `origin` in every coordinate.
pub trait BoundaryOracle {
    type Witness;
    fn intersect(
        &self,
        vertex: &DVector<f64>,
        origin: &DVector<f64>,
    ) -> Result<RayIntersection<Self::Witness>, OracleError>;
}

/// Engine configuration.
#[derive(Clone, Debug, Serialize)]
pub struct PolyblockConfig {
    /// Half-open selection strip: only vertices with every coordinate at
    /// least `epsilon` above the origin are eligible. Must satisfy
    /// `0 < epsilon < min_k (z1[k] - origin[k])`.
    pub epsilon: f64,
    /// Stop once `upper_bound - best_value <= eta`.
    pub eta: f64,
    /// Hard iteration cap; hitting it is reported as
    /// [`Termination::IterationCap`], never silently.
    pub max_iterations: usize,
    /// Drop vertices dominated componentwise by another vertex. Sound (a
    /// dominated box is contained in its dominator's, so the cover still
    /// contains the region) and usually much faster: stale dominated
    /// vertices would re-enter selection inside corners already proven
    /// empty. Switchable for diagnostics.
    pub prune_dominated: bool,
}

impl Default for PolyblockConfig {
    fn default() -> Self {
        PolyblockConfig { epsilon: 0.01, eta: 0.5, max_iterations: 50_000, prune_dominated: true }
    }
}

/// A cover vertex with its cached objective value.
#[derive(Clone, Debug)]
pub struct Vertex {
    pub z: DVector<f64>,
    pub value: f64,
}

impl Vertex {
    fn new(z: DVector<f64>, weights: &[f64]) -> Self {
        let value = weights.iter().zip(z.iter()).map(|(w, x)| w * x).sum();
        Vertex { z, value }
    }
}

/// Why the solve stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gap closed to within `eta`.
    Converged,
    /// `max_iterations` reached with the gap still open.
    IterationCap,
    /// No vertex left inside the epsilon strip; the incumbent is
    /// epsilon-grade optimal.
    EmptyVertexSet,
}

/// One line of the per-iteration trace.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub num_vertices: usize,
}

/// Outcome of a solve.
#[derive(Clone, Debug)]
pub struct SolveResult<W> {
    /// Best boundary point found (global optimum within the tolerances once
    /// terminated via [`Termination::Converged`]).
    pub best_point: DVector<f64>,
    /// `U(best_point)`.
    pub best_value: f64,
    /// Final cover bound `U(selected vertex)`; always `>= best_value` and an
    /// upper bound on the optimum over the epsilon strip.
    pub upper_bound: f64,
    /// Allocation attaining `best_point`.
    pub witness: W,
    /// Completed iterations.
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
}

/// Errors from [`solve`].
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Per-iteration view handed to the observer of [`solve_observed`].
pub struct IterationView<'a> {
    pub iteration: usize,
    /// Vertex selected this iteration.
    pub selected: &'a DVector<f64>,
    /// Boundary point returned by the oracle.
    pub boundary: &'a DVector<f64>,
    pub upper_bound: f64,
    pub lower_bound: f64,
    /// Vertex set *after* this iteration's update (unchanged on the final
    /// iteration).
    pub vertices: &'a [Vertex],
}

/// Maximizes `U(z) = sum_k weights[k] z[k]` over the oracle's region.
pub fn solve<O: BoundaryOracle>(
    oracle: &O,
    weights: &[f64],
    z1: &DVector<f64>,
    origin: &DVector<f64>,
    cfg: &PolyblockConfig,
) -> Result<SolveResult<O::Witness>, SolveError> {
    solve_observed(oracle, weights, z1, origin, cfg, |_| {})
}

/// [`solve`] with a per-iteration observer (instrumentation for invariant
/// checks and traces beyond [`SolveResult::trace`]).
pub fn solve_observed<O, F>(
    oracle: &O,
    weights: &[f64],
    z1: &DVector<f64>,
    origin: &DVector<f64>,
    cfg: &PolyblockConfig,
    mut observer: F,
) -> Result<SolveResult<O::Witness>, SolveError>
where
    O: BoundaryOracle,
    F: FnMut(&IterationView<'_>),
{
    validate(weights, z1, origin, cfg)?;
    let k = z1.len();

    struct Best<W> {
        point: DVector<f64>,
        value: f64,
        witness: W,
    }

    let mut cover = VertexSet::new(cfg.prune_dominated);
    cover.insert(Vertex::new(z1.clone(), weights));
    let mut best: Option<Best<O::Witness>> = None;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut upper_bound = f64::INFINITY;
    let mut iterations = 0;

    for n in 1..=cfg.max_iterations {
        let Some(idx) = cover.select(origin, cfg.epsilon) else {
            termination = Termination::EmptyVertexSet;
            break;
        };
        iterations = n;
        let selected = cover.vertices[idx].clone();
        let inter = oracle.intersect(&selected.z, origin)?;
        let value: f64 = weights.iter().zip(inter.rates.iter()).map(|(w, x)| w * x).sum();
        if best.as_ref().map_or(true, |b| value > b.value) {
            best = Some(Best { point: inter.rates.clone(), value, witness: inter.witness });
        }
        upper_bound = selected.value;
        let lower_bound = best.as_ref().map(|b| b.value).unwrap_or(f64::NEG_INFINITY);
        trace.push(TraceRow {
            iteration: n,
            upper_bound,
            lower_bound,
            num_vertices: cover.vertices.len(),
        });

        let converged = upper_bound - lower_bound <= cfg.eta;
        if !converged {
            cover.swap_remove(idx);
            for i in 0..k {
                if inter.rates[i] < selected.z[i] {
                    let mut child = selected.z.clone();
                    child[i] = inter.rates[i];
                    cover.insert(Vertex::new(child, weights));
                }
                // A coordinate the boundary did not cut (rates[i] >= z[i])
                // would reproduce the parent; dedup semantics drop it.
            }
        }
        observer(&IterationView {
            iteration: n,
            selected: &selected.z,
            boundary: &inter.rates,
            upper_bound,
            lower_bound,
            vertices: &cover.vertices,
        });
        if converged {
            termination = Termination::Converged;
            break;
        }
    }

    // The initial vertex always lies inside the validated epsilon strip, so
    // at least one iteration ran and produced an incumbent.
    let best = best.expect("first iteration always yields a boundary point");
    Ok(SolveResult {
        best_point: best.point,
        best_value: best.value,
        upper_bound,
        witness: best.witness,
        iterations,
        termination,
        trace,
    })
}

fn validate(
    weights: &[f64],
    z1: &DVector<f64>,
    origin: &DVector<f64>,
    cfg: &PolyblockConfig,
) -> Result<(), SolveError> {
    let k = z1.len();
    let fail = |msg: String| Err(SolveError::Config(msg));
    if k == 0 {
        return fail("empty initial vertex".into());
    }
    if weights.len() != k || origin.len() != k {
        return fail(format!(
            "dimension mismatch: z1 has {k}, weights {}, origin {}",
            weights.len(),
            origin.len()
        ));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
        return fail("weights must be nonnegative, finite, not all zero".into());
    }
    if z1.iter().any(|x| !x.is_finite()) || origin.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return fail("initial vertex and origin must be finite, origin nonnegative".into());
    }
    let min_excess = (z1 - origin).min();
    if min_excess <= 0.0 {
        return fail("initial vertex must exceed the origin in every coordinate".into());
    }
    if !(cfg.epsilon > 0.0) || cfg.epsilon >= min_excess {
        return fail(format!(
            "epsilon must satisfy 0 < epsilon < {min_excess} (smallest initial-vertex excess)"
        ));
    }
    if !(cfg.eta >= 0.0) {
        return fail("eta must be nonnegative".into());
    }
    if cfg.max_iterations == 0 {
        return fail("max_iterations must be at least 1".into());
    }
    Ok(())
}

fn in_strip(z: &DVector<f64>, origin: &DVector<f64>, epsilon: f64) -> bool {
    z.iter().zip(origin.iter()).all(|(zi, oi)| *zi >= oi + epsilon)
}

fn dominates(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x >= y)
}

/// Coordinate bit patterns, used as an exact-equality hash key.
fn bits(z: &DVector<f64>) -> Vec<u64> {
    z.iter().map(|x| x.to_bits()).collect()
}

/// Max-heap entry ordered by objective value, then lexicographically larger
/// coordinates, then smaller (older) id: a deterministic total order.
struct HeapEntry {
    value: f64,
    z: DVector<f64>,
    id: u64,
}

impl HeapEntry {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| {
                for (x, y) in self.z.iter().zip(other.z.iter()) {
                    match x.total_cmp(y) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.key_cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Live cover vertices plus a max-priority index for selection.
///
/// `vertices` is the plain live set (what observers see). Selection goes
/// through a lazy-deletion max-heap keyed by `(value, lex(z))`: entries
/// whose vertex has been removed are skipped on pop, and entries outside
/// the epsilon strip are discarded permanently — strip membership depends
/// only on the vertex's fixed coordinates, so such a vertex can never be
/// selected again even though it stays in the live set (its box still
/// contributes to the cover). Dedup for the no-prune path hashes exact
/// coordinate bit patterns instead of scanning.
struct VertexSet {
    vertices: Vec<Vertex>,
    /// Stable id of each live vertex, parallel to `vertices`.
    ids: Vec<u64>,
    /// id -> current index in `vertices`; `usize::MAX` once removed.
    pos: Vec<usize>,
    heap: BinaryHeap<HeapEntry>,
    /// Live coordinate patterns (maintained only when `prune` is off).
    seen: HashSet<Vec<u64>>,
    prune: bool,
}

impl VertexSet {
    fn new(prune: bool) -> Self {
        VertexSet {
            vertices: Vec::new(),
            ids: Vec::new(),
            pos: Vec::new(),
            heap: BinaryHeap::new(),
            seen: HashSet::new(),
            prune,
        }
    }

    fn insert(&mut self, candidate: Vertex) {
        if self.prune {
            if self.vertices.iter().any(|v| dominates(&v.z, &candidate.z)) {
                return;
            }
            let doomed: Vec<usize> = (0..self.vertices.len())
                .filter(|&i| dominates(&candidate.z, &self.vertices[i].z))
                .collect();
            for &i in doomed.iter().rev() {
                self.swap_remove(i);
            }
        } else if !self.seen.insert(bits(&candidate.z)) {
            return;
        }
        let id = self.pos.len() as u64;
        self.pos.push(self.vertices.len());
        self.ids.push(id);
        self.heap.push(HeapEntry { value: candidate.value, z: candidate.z.clone(), id });
        self.vertices.push(candidate);
    }

    fn swap_remove(&mut self, idx: usize) {
        self.pos[self.ids[idx] as usize] = usize::MAX;
        if !self.prune {
            self.seen.remove(&bits(&self.vertices[idx].z));
        }
        self.vertices.swap_remove(idx);
        self.ids.swap_remove(idx);
        if idx < self.vertices.len() {
            self.pos[self.ids[idx] as usize] = idx;
        }
    }

    /// Index of the highest-value vertex inside the epsilon strip; value
    /// ties broken toward the lexicographically largest coordinate vector
    /// (deterministic).
    fn select(&mut self, origin: &DVector<f64>, epsilon: f64) -> Option<usize> {
        while let Some(top) = self.heap.pop() {
            let p = self.pos[top.id as usize];
            if p == usize::MAX || !in_strip(&top.z, origin, epsilon) {
                continue;
            }
            // Still the freshest entry for a live in-strip vertex: put it
            // back so a converged final iteration leaves the heap intact.
            self.heap.push(top);
            return Some(p);
        }
        None
    }
}
