//! Seeded random channel instances for experiments, benchmarks, and tests.
//!
//! Channel coefficients are drawn i.i.d. circularly-symmetric complex
//! Gaussian with unit variance (real and imaginary parts `N(0, 1/2)`);
//! scalar instances store the squared magnitudes. Noise variance and power
//! budget are uniform across users and all rate weights are one. Draws use
//! a counter-based generator, so equal seeds give bit-identical instances
//! on every platform.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{MisoChannel, SimoChannel, SisoChannel};
use crate::linalg::Cx;

fn unit_cscg(rng: &mut ChaCha8Rng) -> Cx {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cx::new(re * half, im * half)
}

/// Scalar interference channel with `|h|^2` power gains.
pub fn sample_siso(users: usize, pmax: f64, sigma2: f64, seed: u64) -> SisoChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gain = (0..users)
        .map(|_| (0..users).map(|_| unit_cscg(&mut rng).norm_sqr()).collect())
        .collect();
    SisoChannel::new(gain, vec![sigma2; users], vec![pmax; users], vec![1.0; users])
        .expect("sampled instance is always valid")
}

/// Receive-array channel: `antennas` receive antennas per user.
pub fn sample_simo(
    users: usize,
    antennas: usize,
    pmax: f64,
    sigma2: f64,
    seed: u64,
) -> SimoChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (0..users)
        .map(|_| {
            (0..users)
                .map(|_| DVector::from_fn(antennas, |_, _| unit_cscg(&mut rng)))
                .collect()
        })
        .collect();
    SimoChannel::new(h, vec![sigma2; users], vec![pmax; users], vec![1.0; users])
        .expect("sampled instance is always valid")
}

/// Transmit-array channel: `antennas` transmit antennas per user.
pub fn sample_miso(
    users: usize,
    antennas: usize,
    pmax: f64,
    sigma2: f64,
    seed: u64,
) -> MisoChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (0..users)
        .map(|_| {
            (0..users)
                .map(|_| DVector::from_fn(antennas, |_, _| unit_cscg(&mut rng)))
                .collect()
        })
        .collect();
    MisoChannel::new(h, vec![sigma2; users], vec![pmax; users], vec![1.0; users])
        .expect("sampled instance is always valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_give_identical_instances() {
        let a = sample_siso(3, 3.0, 1.0, 11);
        let b = sample_siso(3, 3.0, 1.0, 11);
        for k in 0..3 {
            for j in 0..3 {
                assert_eq!(a.gain(k, j), b.gain(k, j));
            }
        }
        let c = sample_siso(3, 3.0, 1.0, 12);
        assert_ne!(a.gain(0, 0), c.gain(0, 0), "different seeds must differ");
    }

    #[test]
    fn sampled_dimensions_and_parameters_land_where_requested() {
        let simo = sample_simo(4, 2, 3.0, 0.1, 5);
        assert_eq!(simo.users(), 4);
        assert_eq!(simo.antennas(2), 2);
        assert_eq!(simo.noise(), &[0.1; 4]);
        assert_eq!(simo.pmax(), &[3.0; 4]);

        let miso = sample_miso(4, 2, 3.0, 0.1, 5);
        assert_eq!(miso.users(), 4);
        assert_eq!(miso.antennas(1), 2);
        assert_eq!(miso.weights(), &[1.0; 4]);
    }

    #[test]
    fn gains_average_to_about_unit_power() {
        // 200 draws of a 3x3 gain matrix: the mean of |h|^2 should sit near
        // its expectation 1 (very loose band, just catching scale bugs).
        let mut sum = 0.0;
        let mut count = 0;
        for seed in 0..200 {
            let ch = sample_siso(3, 3.0, 1.0, seed);
            for k in 0..3 {
                for j in 0..3 {
                    sum += ch.gain(k, j);
                    count += 1;
                }
            }
        }
        let mean = sum / count as f64;
        assert!((0.85..1.15).contains(&mean), "mean squared gain {mean} far from 1");
    }
}
