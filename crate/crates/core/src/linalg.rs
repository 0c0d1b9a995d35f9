//! Small dense linear-algebra helpers shared by the solvers.
//!
//! Everything here operates on heap-allocated `nalgebra` matrices at the
//! sizes this crate cares about (a handful of users, a handful of antennas),
//! so clarity wins over cleverness throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

/// Complex scalar used for channel vectors and beamformers.
pub type Cx = Complex<f64>;

/// Relative residual at which a power iteration counts as converged.
const POWER_TOL: f64 = 1e-14;
/// Iteration cap before the power iteration defers to a full eigensolve.
const POWER_CAP: usize = 4000;

/// Spectral radius of a nonnegative square matrix.
///
/// Runs a power iteration on the shifted matrix `A + cI` from the
/// deterministic all-ones start vector. For a nonnegative matrix the Perron
/// root is itself an eigenvalue, so `rho(A + cI) = rho(A) + c`, and the shift
/// keeps the iteration from cycling on periodic structure (where eigenvalues
/// of equal modulus would otherwise stall it). If the iteration has not met
/// its residual target within the cap, falls back to a full Schur eigensolve.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), a.ncols(), "spectral_radius requires a square matrix");
    if a.nrows() == 0 {
        return 0.0;
    }
    // The max row sum bounds rho from above and sets the problem's scale.
    let scale = max_row_sum(a);
    if scale == 0.0 {
        return 0.0;
    }
    let shift = 0.1 * scale;
    let shifted = shifted_copy(a, shift);
    match power_iteration(&shifted) {
        Some((lam, _)) => (lam - shift).max(0.0),
        None => schur_radius(a),
    }
}

/// Dominant eigenvalue and eigenvector of a nonnegative square matrix.
///
/// The eigenvector is scaled to unit Euclidean norm with nonnegative
/// orientation (the Perron vector of a nonnegative matrix can always be
/// oriented that way). Falls back to a Schur eigensolve plus inverse
/// iteration when the power iteration stalls.
pub fn dominant_eigenpair(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    assert_eq!(a.nrows(), a.ncols(), "dominant_eigenpair requires a square matrix");
    let n = a.nrows();
    let scale = max_row_sum(a);
    if n == 0 || scale == 0.0 {
        return (0.0, DVector::from_element(n.max(1), 1.0).normalize());
    }
    let shift = 0.1 * scale;
    let shifted = shifted_copy(a, shift);
    if let Some((lam, v)) = power_iteration(&shifted) {
        return ((lam - shift).max(0.0), orient_nonnegative(v));
    }
    let rho = schur_radius(a);
    let v = inverse_iteration(a, rho);
    (rho, orient_nonnegative(v))
}

/// Eigenvector estimate for a (near-)eigenvalue of a real matrix via inverse
/// iteration with a slightly displaced shift, from the all-ones start vector.
///
/// Intended for simple real eigenvalues; returns a unit-norm vector.
pub fn inverse_iteration(a: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let n = a.nrows();
    // Displace the shift so A - sigma*I stays invertible at an exact
    // eigenvalue; the nearest eigenvalue to sigma is still lambda.
    let sigma = lambda + (1e-10 * lambda.abs()).max(1e-12);
    let shifted = shifted_copy(a, -sigma);
    let lu = shifted.lu();
    let mut x = DVector::from_element(n, 1.0).normalize();
    for _ in 0..50 {
        let Some(y) = lu.solve(&x) else { break };
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        let next = y / norm;
        let delta = (&next - &x).norm().min((&next + &x).norm());
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

/// Solves the Hermitian positive-definite system `A x = b` (Cholesky with an
/// LU fallback for numerically borderline inputs).
pub fn solve_hpd(a: &DMatrix<Cx>, b: &DVector<Cx>) -> Option<DVector<Cx>> {
    if let Some(chol) = a.clone().cholesky() {
        return Some(chol.solve(b));
    }
    a.clone().lu().solve(b)
}

// ---------------------------------------------------------------------------
// internals
// ---------------------------------------------------------------------------

fn max_row_sum(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn shifted_copy(a: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += shift;
    }
    m
}

/// Power iteration returning `(lambda, v)` with `v` unit-norm, or `None` if
/// the residual target was not met within the cap.
fn power_iteration(a: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    let n = a.nrows();
    let mut x = DVector::from_element(n, 1.0).normalize();
    for _ in 0..POWER_CAP {
        let y = a * &x;
        let lam = x.dot(&y);
        let resid = (&y - &x * lam).norm();
        let norm = y.norm();
        if norm == 0.0 {
            return Some((0.0, x));
        }
        x = y / norm;
        if resid <= POWER_TOL * lam.abs().max(f64::MIN_POSITIVE) {
            let y = a * &x;
            return Some((x.dot(&y), x));
        }
    }
    None
}

fn schur_radius(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn orient_nonnegative(v: DVector<f64>) -> DVector<f64> {
    if v.sum() < 0.0 {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_radius_matches_closed_form_for_two_by_two() {
        // [[0, a], [b, 0]] has eigenvalues +-sqrt(ab); also exercises the
        // shift (this matrix is periodic, so the unshifted iteration cycles).
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 1.0, 0.0]);
        assert!((spectral_radius(&a) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_of_zero_matrix_is_zero() {
        let a = DMatrix::zeros(3, 3);
        assert_eq!(spectral_radius(&a), 0.0);
    }

    #[test]
    fn spectral_radius_agrees_with_schur_on_random_nonnegative_matrices() {
        // Deterministic pseudo-random fill; compares the iteration path
        // against the independent Schur path.
        let mut state = 0x2545F4914F6CDD1Du64;
        for n in 1..=8 {
            let mut vals = Vec::with_capacity(n * n);
            for _ in 0..n * n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                vals.push((state >> 11) as f64 / (1u64 << 53) as f64);
            }
            let a = DMatrix::from_row_slice(n, n, &vals);
            let by_iteration = spectral_radius(&a);
            let by_schur = schur_radius(&a);
            assert!(
                (by_iteration - by_schur).abs() <= 1e-10 * by_schur.max(1.0),
                "n = {n}: {by_iteration} vs {by_schur}"
            );
        }
    }

    #[test]
    fn dominant_eigenpair_returns_consistent_pair() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 0.3, 1.5, 0.2, 0.1, 0.4, 1.0]);
        let (lam, v) = dominant_eigenpair(&a);
        let resid = (&a * &v - &v * lam).norm();
        assert!(resid < 1e-10, "eigen residual {resid}");
        assert!(v.iter().all(|&x| x >= -1e-12), "Perron vector should be nonnegative");
    }

    #[test]
    fn solve_hpd_inverts_a_known_system() {
        let a = DMatrix::from_row_slice(2, 2, &[
            Cx::new(2.0, 0.0),
            Cx::new(0.5, 0.5),
            Cx::new(0.5, -0.5),
            Cx::new(3.0, 0.0),
        ]);
        let b = DVector::from_column_slice(&[Cx::new(1.0, 0.0), Cx::new(0.0, 1.0)]);
        let x = solve_hpd(&a, &b).expect("HPD system must solve");
        let resid = (&a * &x - &b).norm();
        assert!(resid < 1e-12, "solve residual {resid}");
    }
}
