//! Channel data model for K-user Gaussian interference networks under
//! single-user detection (interference treated as noise).
//!
//! Three antenna topologies are supported:
//!
//! - [`SisoChannel`] — scalar links, described directly by power gains
//!   `g[k][j] = |h_kj|^2` from transmitter j into receiver k.
//! - [`SimoChannel`] — multi-antenna receivers; `h[k][j]` is the length-M_k
//!   vector channel from transmitter j into receiver k's array.
//! - [`MisoChannel`] — multi-antenna transmitters; `h[k][j]` is the
//!   length-N_j vector channel from transmitter j's array into receiver k.
//!
//! All three evaluate per-user SINRs for a given allocation and expose the
//! single-user rate box corner `z[k] = log2(1 + pmax[k] * ||h_kk||^2 /
//! noise[k])` used to seed the outer approximation.
//!
//! # Wire format
//!
//! Channels serialize to JSON with an internal `"topology"` tag
//! (`"siso" | "simo" | "miso"`). Complex scalars are `[re, im]` pairs and
//! matrices are row-major nested arrays:
//!
//! ```json
//! {
//!   "topology": "siso",
//!   "gain": [[0.4310, 0.0022], [0.0200, 0.4102]],
//!   "noise": [0.1, 0.1],
//!   "pmax": [3.0, 3.0],
//!   "weights": [1.0, 1.0]
//! }
//! ```
//!
//! For `"simo"` and `"miso"` the `"gain"` field is replaced by `"channels"`,
//! indexed `[receiver][transmitter]`, each entry a list of `[re, im]` pairs
//! (length M_k for SIMO rows, length N_j for MISO columns).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_hpd, Cx};

/// Errors from channel construction, JSON decoding, or allocation mismatch.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel must have at least one user")]
    NoUsers,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("allocation is {allocation} but channel is {channel}")]
    TopologyMismatch {
        allocation: &'static str,
        channel: &'static str,
    },
    #[error("malformed channel JSON: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// rate / SINR conversions
// ---------------------------------------------------------------------------

/// Shannon rate (bits/channel use) at a given SINR: `log2(1 + sinr)`.
pub fn sinr_to_rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// SINR required to support a rate: `2^rate - 1`. Nonpositive rates map to 0.
pub fn rate_to_sinr(rate: f64) -> f64 {
    if rate <= 0.0 {
        0.0
    } else {
        rate.exp2() - 1.0
    }
}

/// Elementwise [`sinr_to_rate`].
pub fn rates_from_sinrs(sinrs: &[f64]) -> Vec<f64> {
    sinrs.iter().map(|&g| sinr_to_rate(g)).collect()
}

/// Weighted sum `sum_k weights[k] * values[k]`.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

// ---------------------------------------------------------------------------
// SISO
// ---------------------------------------------------------------------------

/// Scalar interference channel: `gain[k][j] = |h_kj|^2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SisoWire", into = "SisoWire")]
pub struct SisoChannel {
    gain: Vec<Vec<f64>>,
    noise: Vec<f64>,
    pmax: Vec<f64>,
    weights: Vec<f64>,
}

impl SisoChannel {
    pub fn new(
        gain: Vec<Vec<f64>>,
        noise: Vec<f64>,
        pmax: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        let k = gain.len();
        validate_common(k, &noise, &pmax, &weights)?;
        for (i, row) in gain.iter().enumerate() {
            if row.len() != k {
                return Err(ChannelError::Dimension(format!(
                    "gain row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            for (j, &g) in row.iter().enumerate() {
                if !g.is_finite() || g < 0.0 {
                    return Err(ChannelError::Invalid(format!("gain[{i}][{j}] = {g}")));
                }
            }
            if row[i] <= 0.0 {
                return Err(ChannelError::Invalid(format!(
                    "direct gain for user {i} must be positive, got {}",
                    row[i]
                )));
            }
        }
        Ok(Self { gain, noise, pmax, weights })
    }

    pub fn users(&self) -> usize {
        self.gain.len()
    }

    /// Power gain `|h_kj|^2` from transmitter `j` into receiver `k`.
    pub fn gain(&self, k: usize, j: usize) -> f64 {
        self.gain[k][j]
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn pmax(&self) -> &[f64] {
        &self.pmax
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-user SINRs at transmit powers `p`:
    /// `sinr[k] = p[k] g[k][k] / (noise[k] + sum_{j != k} p[j] g[k][j])`.
    pub fn sinr(&self, p: &[f64]) -> Vec<f64> {
        let k = self.users();
        assert_eq!(p.len(), k, "power vector length mismatch");
        (0..k)
            .map(|i| {
                let interference: f64 = (0..k)
                    .filter(|&j| j != i)
                    .map(|j| p[j] * self.gain[i][j])
                    .sum();
                p[i] * self.gain[i][i] / (self.noise[i] + interference)
            })
            .collect()
    }

    /// Single-user rate box corner `z[k] = log2(1 + pmax[k] g[k][k] / noise[k])`.
    pub fn initial_vertex(&self) -> DVector<f64> {
        initial_vertex_from(&self.pmax, &self.noise, |k| self.gain[k][k])
    }
}

#[derive(Serialize, Deserialize)]
struct SisoWire {
    gain: Vec<Vec<f64>>,
    noise: Vec<f64>,
    pmax: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<SisoWire> for SisoChannel {
    type Error = ChannelError;
    fn try_from(w: SisoWire) -> Result<Self, ChannelError> {
        SisoChannel::new(w.gain, w.noise, w.pmax, w.weights)
    }
}

impl From<SisoChannel> for SisoWire {
    fn from(c: SisoChannel) -> Self {
        SisoWire { gain: c.gain, noise: c.noise, pmax: c.pmax, weights: c.weights }
    }
}

// ---------------------------------------------------------------------------
// SIMO
// ---------------------------------------------------------------------------

/// Multi-antenna receivers: `h(k, j)` is the length-M_k channel from
/// transmitter `j` into receiver `k`'s array.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "VectorWire", into = "VectorWire")]
pub struct SimoChannel {
    h: Vec<Vec<DVector<Cx>>>,
    noise: Vec<f64>,
    pmax: Vec<f64>,
    weights: Vec<f64>,
}

/// MMSE receive evaluation: per-user SINRs plus the (unnormalized) MMSE
/// receive vectors that attain them.
#[derive(Clone, Debug)]
pub struct MmseEvaluation {
    pub sinr: Vec<f64>,
    pub receivers: Vec<DVector<Cx>>,
}

impl SimoChannel {
    pub fn new(
        h: Vec<Vec<DVector<Cx>>>,
        noise: Vec<f64>,
        pmax: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        let k = h.len();
        validate_common(k, &noise, &pmax, &weights)?;
        for (i, row) in h.iter().enumerate() {
            if row.len() != k {
                return Err(ChannelError::Dimension(format!(
                    "channel row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            let m = row[0].len();
            if m == 0 {
                return Err(ChannelError::Dimension(format!("receiver {i} has no antennas")));
            }
            for (j, v) in row.iter().enumerate() {
                if v.len() != m {
                    return Err(ChannelError::Dimension(format!(
                        "channel[{i}][{j}] has {} antennas, expected {m} for receiver {i}",
                        v.len()
                    )));
                }
                if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(ChannelError::Invalid(format!("channel[{i}][{j}] is not finite")));
                }
            }
            if row[i].norm_squared() <= 0.0 {
                return Err(ChannelError::Invalid(format!(
                    "direct channel for user {i} must be nonzero"
                )));
            }
        }
        Ok(Self { h, noise, pmax, weights })
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    /// Receive antennas at user `k`.
    pub fn antennas(&self, k: usize) -> usize {
        self.h[k][0].len()
    }

    /// Channel vector from transmitter `j` into receiver `k`.
    pub fn h(&self, k: usize, j: usize) -> &DVector<Cx> {
        &self.h[k][j]
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn pmax(&self) -> &[f64] {
        &self.pmax
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// MMSE receive vector for user `k` at transmit powers `p`:
    /// `w_k = (noise[k] I + sum_{j != k} p[j] h_kj h_kj^H)^{-1} h_kk`.
    pub fn mmse_receiver(&self, k: usize, p: &[f64]) -> DVector<Cx> {
        let m = self.antennas(k);
        let mut cov = nalgebra::DMatrix::<Cx>::identity(m, m) * Cx::new(self.noise[k], 0.0);
        for j in 0..self.users() {
            if j != k && p[j] > 0.0 {
                let hj = &self.h[k][j];
                cov += (hj * hj.adjoint()) * Cx::new(p[j], 0.0);
            }
        }
        solve_hpd(&cov, &self.h[k][k]).expect("interference-plus-noise covariance is positive definite")
    }

    /// SINRs under MMSE receive filtering, along with the filters themselves.
    /// With the MMSE receiver, `sinr[k] = p[k] * Re(h_kk^H w_k)`.
    pub fn mmse_evaluation(&self, p: &[f64]) -> MmseEvaluation {
        let k = self.users();
        assert_eq!(p.len(), k, "power vector length mismatch");
        let receivers: Vec<_> = (0..k).map(|i| self.mmse_receiver(i, p)).collect();
        let sinr = (0..k)
            .map(|i| (p[i] * self.h[i][i].dotc(&receivers[i]).re).max(0.0))
            .collect();
        MmseEvaluation { sinr, receivers }
    }

    /// SINRs at powers `p` under *fixed* receive vectors `w`:
    /// `sinr[k] = p[k] |w_k^H h_kk|^2 / (noise[k] ||w_k||^2 + sum_{j != k} p[j] |w_k^H h_kj|^2)`.
    pub fn sinr_with_receivers(&self, p: &[f64], w: &[DVector<Cx>]) -> Vec<f64> {
        let k = self.users();
        assert_eq!(p.len(), k, "power vector length mismatch");
        assert_eq!(w.len(), k, "receiver count mismatch");
        (0..k)
            .map(|i| {
                let signal = p[i] * w[i].dotc(&self.h[i][i]).norm_sqr();
                let mut denom = self.noise[i] * w[i].norm_squared();
                for j in 0..k {
                    if j != i {
                        denom += p[j] * w[i].dotc(&self.h[i][j]).norm_sqr();
                    }
                }
                signal / denom
            })
            .collect()
    }

    /// Single-user rate box corner `z[k] = log2(1 + pmax[k] ||h_kk||^2 / noise[k])`.
    pub fn initial_vertex(&self) -> DVector<f64> {
        initial_vertex_from(&self.pmax, &self.noise, |k| self.h[k][k].norm_squared())
    }
}

// ---------------------------------------------------------------------------
// MISO
// ---------------------------------------------------------------------------

/// Multi-antenna transmitters: `h(k, j)` is the length-N_j channel from
/// transmitter `j`'s array into receiver `k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "VectorWire", into = "VectorWire")]
pub struct MisoChannel {
    h: Vec<Vec<DVector<Cx>>>,
    noise: Vec<f64>,
    pmax: Vec<f64>,
    weights: Vec<f64>,
}

impl MisoChannel {
    pub fn new(
        h: Vec<Vec<DVector<Cx>>>,
        noise: Vec<f64>,
        pmax: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        let k = h.len();
        validate_common(k, &noise, &pmax, &weights)?;
        for (i, row) in h.iter().enumerate() {
            if row.len() != k {
                return Err(ChannelError::Dimension(format!(
                    "channel row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
        }
        for j in 0..k {
            let n = h[0][j].len();
            if n == 0 {
                return Err(ChannelError::Dimension(format!("transmitter {j} has no antennas")));
            }
            for (i, row) in h.iter().enumerate() {
                if row[j].len() != n {
                    return Err(ChannelError::Dimension(format!(
                        "channel[{i}][{j}] has {} antennas, expected {n} for transmitter {j}",
                        row[j].len()
                    )));
                }
                if row[j].iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(ChannelError::Invalid(format!("channel[{i}][{j}] is not finite")));
                }
            }
        }
        for i in 0..k {
            if h[i][i].norm_squared() <= 0.0 {
                return Err(ChannelError::Invalid(format!(
                    "direct channel for user {i} must be nonzero"
                )));
            }
        }
        Ok(Self { h, noise, pmax, weights })
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    /// Transmit antennas at user `j`.
    pub fn antennas(&self, j: usize) -> usize {
        self.h[0][j].len()
    }

    /// Channel vector from transmitter `j`'s array into receiver `k`.
    pub fn h(&self, k: usize, j: usize) -> &DVector<Cx> {
        &self.h[k][j]
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn pmax(&self) -> &[f64] {
        &self.pmax
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// SINRs at beamformers `v`:
    /// `sinr[k] = |h_kk^H v_k|^2 / (noise[k] + sum_{j != k} |h_kj^H v_j|^2)`.
    pub fn sinr(&self, v: &[DVector<Cx>]) -> Vec<f64> {
        let k = self.users();
        assert_eq!(v.len(), k, "beamformer count mismatch");
        (0..k)
            .map(|i| {
                let signal = self.h[i][i].dotc(&v[i]).norm_sqr();
                let mut denom = self.noise[i];
                for j in 0..k {
                    if j != i {
                        denom += self.h[i][j].dotc(&v[j]).norm_sqr();
                    }
                }
                signal / denom
            })
            .collect()
    }

    /// Single-user rate box corner `z[k] = log2(1 + pmax[k] ||h_kk||^2 / noise[k])`
    /// (Cauchy–Schwarz: matched-filter beamforming at full power).
    pub fn initial_vertex(&self) -> DVector<f64> {
        initial_vertex_from(&self.pmax, &self.noise, |k| self.h[k][k].norm_squared())
    }
}

/// Wire form shared by SIMO and MISO: complex entries as `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct VectorWire {
    channels: Vec<Vec<Vec<[f64; 2]>>>,
    noise: Vec<f64>,
    pmax: Vec<f64>,
    weights: Vec<f64>,
}

fn vectors_from_wire(channels: Vec<Vec<Vec<[f64; 2]>>>) -> Vec<Vec<DVector<Cx>>> {
    channels
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| DVector::from_iterator(v.len(), v.iter().map(|p| Cx::new(p[0], p[1]))))
                .collect()
        })
        .collect()
}

fn vectors_to_wire(h: &[Vec<DVector<Cx>>]) -> Vec<Vec<Vec<[f64; 2]>>> {
    h.iter()
        .map(|row| row.iter().map(|v| v.iter().map(|c| [c.re, c.im]).collect()).collect())
        .collect()
}

impl TryFrom<VectorWire> for SimoChannel {
    type Error = ChannelError;
    fn try_from(w: VectorWire) -> Result<Self, ChannelError> {
        SimoChannel::new(vectors_from_wire(w.channels), w.noise, w.pmax, w.weights)
    }
}

impl From<SimoChannel> for VectorWire {
    fn from(c: SimoChannel) -> Self {
        VectorWire {
            channels: vectors_to_wire(&c.h),
            noise: c.noise,
            pmax: c.pmax,
            weights: c.weights,
        }
    }
}

impl TryFrom<VectorWire> for MisoChannel {
    type Error = ChannelError;
    fn try_from(w: VectorWire) -> Result<Self, ChannelError> {
        MisoChannel::new(vectors_from_wire(w.channels), w.noise, w.pmax, w.weights)
    }
}

impl From<MisoChannel> for VectorWire {
    fn from(c: MisoChannel) -> Self {
        VectorWire {
            channels: vectors_to_wire(&c.h),
            noise: c.noise,
            pmax: c.pmax,
            weights: c.weights,
        }
    }
}

// ---------------------------------------------------------------------------
// topology-tagged channel
// ---------------------------------------------------------------------------

/// Any supported channel, tagged by topology for (de)serialization and CLI
/// dispatch.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "lowercase")]
pub enum Channel {
    Siso(SisoChannel),
    Simo(SimoChannel),
    Miso(MisoChannel),
}

impl Channel {
    pub fn from_json_str(s: &str) -> Result<Self, ChannelError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel serialization cannot fail")
    }

    pub fn topology(&self) -> &'static str {
        match self {
            Channel::Siso(_) => "siso",
            Channel::Simo(_) => "simo",
            Channel::Miso(_) => "miso",
        }
    }

    pub fn users(&self) -> usize {
        match self {
            Channel::Siso(c) => c.users(),
            Channel::Simo(c) => c.users(),
            Channel::Miso(c) => c.users(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Channel::Siso(c) => c.weights(),
            Channel::Simo(c) => c.weights(),
            Channel::Miso(c) => c.weights(),
        }
    }

    pub fn noise(&self) -> &[f64] {
        match self {
            Channel::Siso(c) => c.noise(),
            Channel::Simo(c) => c.noise(),
            Channel::Miso(c) => c.noise(),
        }
    }

    pub fn pmax(&self) -> &[f64] {
        match self {
            Channel::Siso(c) => c.pmax(),
            Channel::Simo(c) => c.pmax(),
            Channel::Miso(c) => c.pmax(),
        }
    }

    pub fn initial_vertex(&self) -> DVector<f64> {
        match self {
            Channel::Siso(c) => c.initial_vertex(),
            Channel::Simo(c) => c.initial_vertex(),
            Channel::Miso(c) => c.initial_vertex(),
        }
    }

    /// Replaces every per-user noise variance with `sigma2`.
    pub fn with_noise(mut self, sigma2: f64) -> Result<Self, ChannelError> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(ChannelError::Invalid(format!("noise variance {sigma2}")));
        }
        let n = self.users();
        match &mut self {
            Channel::Siso(c) => c.noise = vec![sigma2; n],
            Channel::Simo(c) => c.noise = vec![sigma2; n],
            Channel::Miso(c) => c.noise = vec![sigma2; n],
        }
        Ok(self)
    }
}

// ---------------------------------------------------------------------------
// allocations
// ---------------------------------------------------------------------------

/// A transmit strategy: the witness form returned by the feasibility solvers
/// and the boundary oracle.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Allocation {
    /// Scalar transmit powers.
    Siso { powers: Vec<f64> },
    /// Transmit powers plus the receive vectors they were verified with.
    Simo {
        powers: Vec<f64>,
        #[serde(serialize_with = "serialize_cx_vectors")]
        receivers: Vec<DVector<Cx>>,
    },
    /// Transmit beamformers (norm-squared is the transmit power).
    Miso {
        #[serde(serialize_with = "serialize_cx_vectors")]
        beams: Vec<DVector<Cx>>,
    },
}

fn serialize_cx_vectors<S: serde::Serializer>(
    vs: &[DVector<Cx>],
    ser: S,
) -> Result<S::Ok, S::Error> {
    let wire: Vec<Vec<[f64; 2]>> =
        vs.iter().map(|v| v.iter().map(|c| [c.re, c.im]).collect()).collect();
    serde::Serialize::serialize(&wire, ser)
}

impl Allocation {
    fn kind(&self) -> &'static str {
        match self {
            Allocation::Siso { .. } => "siso",
            Allocation::Simo { .. } => "simo",
            Allocation::Miso { .. } => "miso",
        }
    }

    /// The all-off allocation for a channel (zero powers / zero beams).
    pub fn zero(ch: &Channel) -> Allocation {
        match ch {
            Channel::Siso(c) => Allocation::Siso { powers: vec![0.0; c.users()] },
            Channel::Simo(c) => {
                let p = vec![0.0; c.users()];
                let receivers = (0..c.users()).map(|k| c.mmse_receiver(k, &p)).collect();
                Allocation::Simo { powers: p, receivers }
            }
            Channel::Miso(c) => Allocation::Miso {
                beams: (0..c.users()).map(|j| DVector::zeros(c.antennas(j))).collect(),
            },
        }
    }

    /// Per-user transmit powers consumed by this allocation.
    pub fn powers(&self) -> Vec<f64> {
        match self {
            Allocation::Siso { powers } | Allocation::Simo { powers, .. } => powers.clone(),
            Allocation::Miso { beams } => beams.iter().map(|v| v.norm_squared()).collect(),
        }
    }

    /// Re-evaluates the rates this allocation achieves on `ch`.
    ///
    /// SIMO rates are evaluated with the allocation's stored receive vectors,
    /// so a witness is judged by exactly the strategy it claims.
    pub fn rates(&self, ch: &Channel) -> Result<Vec<f64>, ChannelError> {
        let sinrs = match (self, ch) {
            (Allocation::Siso { powers }, Channel::Siso(c)) => c.sinr(powers),
            (Allocation::Simo { powers, receivers }, Channel::Simo(c)) => {
                c.sinr_with_receivers(powers, receivers)
            }
            (Allocation::Miso { beams }, Channel::Miso(c)) => c.sinr(beams),
            (alloc, ch) => {
                return Err(ChannelError::TopologyMismatch {
                    allocation: alloc.kind(),
                    channel: ch.topology(),
                })
            }
        };
        Ok(rates_from_sinrs(&sinrs))
    }
}

// ---------------------------------------------------------------------------
// shared validation
// ---------------------------------------------------------------------------

fn validate_common(
    k: usize,
    noise: &[f64],
    pmax: &[f64],
    weights: &[f64],
) -> Result<(), ChannelError> {
    if k == 0 {
        return Err(ChannelError::NoUsers);
    }
    for (name, v) in [("noise", noise), ("pmax", pmax), ("weights", weights)] {
        if v.len() != k {
            return Err(ChannelError::Dimension(format!(
                "{name} has {} entries, expected {k}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ChannelError::Invalid(format!("{name} contains a non-finite value")));
        }
    }
    if noise.iter().any(|&x| x <= 0.0) {
        return Err(ChannelError::Invalid("noise variances must be positive".into()));
    }
    if pmax.iter().any(|&x| x <= 0.0) {
        return Err(ChannelError::Invalid("power budgets must be positive".into()));
    }
    if weights.iter().any(|&x| x < 0.0) {
        return Err(ChannelError::Invalid("rate weights must be nonnegative".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(ChannelError::Invalid("at least one rate weight must be positive".into()));
    }
    Ok(())
}

fn initial_vertex_from(
    pmax: &[f64],
    noise: &[f64],
    direct: impl Fn(usize) -> f64,
) -> DVector<f64> {
    DVector::from_iterator(
        pmax.len(),
        pmax.iter()
            .zip(noise)
            .enumerate()
            .map(|(k, (&p, &n))| sinr_to_rate(p * direct(k) / n)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn rate_sinr_conversions_are_inverses() {
        assert_eq!(rate_to_sinr(1.0), 1.0);
        assert_eq!(sinr_to_rate(3.0), 2.0);
        for r in [0.0, 0.3, 1.7, 9.2] {
            assert_relative_eq!(sinr_to_rate(rate_to_sinr(r)), r, max_relative = 1e-14);
        }
        assert_eq!(rate_to_sinr(-0.5), 0.0);
    }

    #[test]
    fn siso_sinr_matches_hand_computation() {
        let ch = SisoChannel::new(
            vec![vec![1.0, 0.5], vec![0.25, 2.0]],
            vec![1.0, 0.5],
            vec![4.0, 4.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let s = ch.sinr(&[2.0, 1.0]);
        // user 0: 2*1 / (1 + 1*0.5) = 4/3; user 1: 1*2 / (0.5 + 2*0.25) = 2.
        assert_relative_eq!(s[0], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(s[1], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn initial_vertex_is_single_user_capacity() {
        let ch = SisoChannel::new(
            vec![vec![1.0, 9.9], vec![9.9, 3.0]],
            vec![1.0, 1.0],
            vec![3.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let z = ch.initial_vertex();
        assert_relative_eq!(z[0], 2.0, max_relative = 1e-15); // log2(1 + 3)
        assert_relative_eq!(z[1], 2.0, max_relative = 1e-15); // log2(1 + 3)
    }

    #[test]
    fn simo_mmse_matches_scalar_formula_for_single_antenna() {
        // With one receive antenna the MMSE SINR collapses to the SISO formula.
        let h = vec![
            vec![DVector::from_column_slice(&[cx(1.0, 0.0)]), DVector::from_column_slice(&[cx(0.5, 0.0)])],
            vec![DVector::from_column_slice(&[cx(0.0, 0.5)]), DVector::from_column_slice(&[cx(0.0, 1.5)])],
        ];
        let simo = SimoChannel::new(h, vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 1.0]).unwrap();
        let siso = SisoChannel::new(
            vec![vec![1.0, 0.25], vec![0.25, 2.25]],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let p = [1.5, 0.75];
        let eval = simo.mmse_evaluation(&p);
        let expect = siso.sinr(&p);
        for k in 0..2 {
            assert_relative_eq!(eval.sinr[k], expect[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn simo_mmse_receiver_beats_fixed_mismatched_receiver() {
        let h = vec![
            vec![
                DVector::from_column_slice(&[cx(1.0, 0.2), cx(0.3, -0.4)]),
                DVector::from_column_slice(&[cx(0.4, 0.1), cx(-0.2, 0.3)]),
            ],
            vec![
                DVector::from_column_slice(&[cx(0.1, -0.3), cx(0.5, 0.2)]),
                DVector::from_column_slice(&[cx(0.9, 0.0), cx(0.2, 0.7)]),
            ],
        ];
        let ch = SimoChannel::new(h, vec![0.5, 0.5], vec![3.0, 3.0], vec![1.0, 1.0]).unwrap();
        let p = [2.0, 1.0];
        let eval = ch.mmse_evaluation(&p);
        // The MMSE receiver maximizes SINR over receive vectors, so any fixed
        // alternative (here: a matched filter) can only do worse.
        let matched: Vec<_> = (0..2).map(|k| ch.h(k, k).clone()).collect();
        let fixed = ch.sinr_with_receivers(&p, &matched);
        for k in 0..2 {
            assert!(eval.sinr[k] >= fixed[k] - 1e-12, "user {k}: {} < {}", eval.sinr[k], fixed[k]);
        }
        // And evaluating the MMSE vectors as fixed receivers reproduces the
        // MMSE SINRs.
        let refixed = ch.sinr_with_receivers(&p, &eval.receivers);
        for k in 0..2 {
            assert_relative_eq!(eval.sinr[k], refixed[k], max_relative = 1e-10);
        }
    }

    #[test]
    fn miso_sinr_matches_hand_computation() {
        let h = vec![
            vec![
                DVector::from_column_slice(&[cx(1.0, 0.0), cx(0.0, 0.0)]),
                DVector::from_column_slice(&[cx(0.0, 0.0), cx(0.5, 0.0)]),
            ],
            vec![
                DVector::from_column_slice(&[cx(0.0, 0.0), cx(0.0, 0.0)]),
                DVector::from_column_slice(&[cx(1.0, 0.0), cx(0.0, 0.0)]),
            ],
        ];
        let ch = MisoChannel::new(h, vec![1.0, 2.0], vec![4.0, 4.0], vec![1.0, 1.0]).unwrap();
        let v = vec![
            DVector::from_column_slice(&[cx(2.0, 0.0), cx(0.0, 0.0)]),
            DVector::from_column_slice(&[cx(1.0, 0.0), cx(1.0, 0.0)]),
        ];
        let s = ch.sinr(&v);
        // user 0: |2|^2 / (1 + |0.5*1|^2) = 4 / 1.25; user 1: |1|^2 / 2.
        assert_relative_eq!(s[0], 3.2, max_relative = 1e-15);
        assert_relative_eq!(s[1], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn channel_json_round_trips_all_topologies() {
        let siso = Channel::Siso(
            SisoChannel::new(
                vec![vec![0.4310, 0.0022], vec![0.0200, 0.4102]],
                vec![0.1, 0.1],
                vec![3.0, 3.0],
                vec![1.0, 1.0],
            )
            .unwrap(),
        );
        let simo = Channel::Simo(
            SimoChannel::new(
                vec![
                    vec![
                        DVector::from_column_slice(&[cx(1.0, -0.5), cx(0.2, 0.0)]),
                        DVector::from_column_slice(&[cx(0.1, 0.1), cx(0.0, 0.3)]),
                    ],
                    vec![
                        DVector::from_column_slice(&[cx(0.4, 0.0)]),
                        DVector::from_column_slice(&[cx(0.8, 0.6)]),
                    ],
                ],
                vec![1.0, 1.0],
                vec![3.0, 3.0],
                vec![1.0, 2.0],
            )
            .unwrap(),
        );
        let miso = Channel::Miso(
            MisoChannel::new(
                vec![
                    vec![
                        DVector::from_column_slice(&[cx(1.0, 0.0), cx(0.0, 1.0)]),
                        DVector::from_column_slice(&[cx(0.3, 0.3)]),
                    ],
                    vec![
                        DVector::from_column_slice(&[cx(0.2, -0.2), cx(0.5, 0.0)]),
                        DVector::from_column_slice(&[cx(0.9, 0.1)]),
                    ],
                ],
                vec![0.5, 0.5],
                vec![2.0, 2.0],
                vec![1.0, 1.0],
            )
            .unwrap(),
        );
        for ch in [siso, simo, miso] {
            let json = ch.to_json_string();
            let back = Channel::from_json_str(&json).expect("round trip must parse");
            assert_eq!(ch.topology(), back.topology());
            assert_eq!(json, back.to_json_string(), "round trip must be stable");
        }
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        // Ragged gain matrix.
        assert!(matches!(
            SisoChannel::new(
                vec![vec![1.0, 0.1], vec![0.1]],
                vec![1.0, 1.0],
                vec![1.0, 1.0],
                vec![1.0, 1.0]
            ),
            Err(ChannelError::Dimension(_))
        ));
        // Nonpositive noise.
        assert!(matches!(
            SisoChannel::new(vec![vec![1.0]], vec![0.0], vec![1.0], vec![1.0]),
            Err(ChannelError::Invalid(_))
        ));
        // Zero direct gain.
        assert!(matches!(
            SisoChannel::new(
                vec![vec![0.0, 0.1], vec![0.1, 1.0]],
                vec![1.0, 1.0],
                vec![1.0, 1.0],
                vec![1.0, 1.0]
            ),
            Err(ChannelError::Invalid(_))
        ));
        // Mismatched antenna counts within a MISO transmitter column.
        let bad = MisoChannel::new(
            vec![
                vec![
                    DVector::from_column_slice(&[cx(1.0, 0.0), cx(0.0, 0.0)]),
                    DVector::from_column_slice(&[cx(1.0, 0.0)]),
                ],
                vec![
                    DVector::from_column_slice(&[cx(1.0, 0.0)]),
                    DVector::from_column_slice(&[cx(1.0, 0.0)]),
                ],
            ],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        );
        assert!(matches!(bad, Err(ChannelError::Dimension(_))));
    }

    #[test]
    fn allocation_rates_reject_topology_mismatch() {
        let ch = Channel::Siso(
            SisoChannel::new(vec![vec![1.0]], vec![1.0], vec![1.0], vec![1.0]).unwrap(),
        );
        let alloc = Allocation::Miso { beams: vec![DVector::zeros(1)] };
        assert!(matches!(alloc.rates(&ch), Err(ChannelError::TopologyMismatch { .. })));
    }

    #[test]
    fn zero_allocation_achieves_zero_rates() {
        let ch = Channel::Siso(
            SisoChannel::new(
                vec![vec![1.0, 0.3], vec![0.3, 1.0]],
                vec![1.0, 1.0],
                vec![2.0, 2.0],
                vec![1.0, 1.0],
            )
            .unwrap(),
        );
        let rates = Allocation::zero(&ch).rates(&ch).unwrap();
        assert_eq!(rates, vec![0.0, 0.0]);
    }
}
