//! Signal model: constellations, pilots, SNR calibration and block synthesis.

use crate::linalg::ComplexMatrix;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Bpsk,
    Qpsk,
    Qam16,
}

impl ConstellationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
            Self::Qam16 => "qam16",
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            "qam16" | "16qam" | "16-qam" => Ok(Self::Qam16),
            other => Err(Error::Config(format!("unknown constellation '{other}'"))),
        }
    }
}

/// A finite symbol alphabet with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(kind: ConstellationKind) -> Self {
        let points = match kind {
            ConstellationKind::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            ConstellationKind::Qpsk => vec![
                Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
                Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            ],
            ConstellationKind::Qam16 => {
                // {±1, ±3} x {±1, ±3} / sqrt(10), real part major.
                let norm = 1.0 / 10f64.sqrt();
                let levels = [-3.0, -1.0, 1.0, 3.0];
                levels
                    .iter()
                    .flat_map(|&re| {
                        levels
                            .iter()
                            .map(move |&im| Complex64::new(re * norm, im * norm))
                    })
                    .collect()
            }
        };
        Self { kind, points }
    }

    pub fn bpsk() -> Self {
        Self::new(ConstellationKind::Bpsk)
    }

    pub fn qpsk() -> Self {
        Self::new(ConstellationKind::Qpsk)
    }

    pub fn qam16() -> Self {
        Self::new(ConstellationKind::Qam16)
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean symbol energy `E_s`, computed from the points.
    pub fn avg_energy(&self) -> f64 {
        self.points.iter().map(Complex64::norm_sqr).sum::<f64>() / self.points.len() as f64
    }

    pub fn is_constant_modulus(&self) -> bool {
        let e0 = self.points[0].norm_sqr();
        self.points
            .iter()
            .all(|p| (p.norm_sqr() - e0).abs() <= 1e-12 * e0)
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn slice_index(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// First point whose energy is closest to `E_s`. Used as the pilot base
    /// symbol, so Hadamard pilots stay inside the alphabet.
    pub fn pilot_symbol(&self) -> Complex64 {
        let es = self.avg_energy();
        let mut best = self.points[0];
        for p in &self.points {
            if (p.norm_sqr() - es).abs() < (best.norm_sqr() - es).abs() {
                best = *p;
            }
        }
        best
    }

    /// `|Omega|^m`, or `None` on overflow.
    pub fn product_size(&self, m: usize) -> Option<usize> {
        u32::try_from(m)
            .ok()
            .and_then(|m| self.points.len().checked_pow(m))
    }

    /// All `|Omega|^m` symbol vectors, flattened (`m` entries each), in
    /// lexicographic order of per-user point indices with user 0 as the most
    /// significant digit.
    pub fn product_points(&self, m: usize) -> Vec<Complex64> {
        let size = self
            .product_size(m)
            .expect("product constellation too large");
        let q = self.points.len();
        let mut out = Vec::with_capacity(size * m);
        for c in 0..size {
            let mut rem = c;
            let start = out.len();
            out.resize(start + m, Complex64::new(0.0, 0.0));
            for k in (0..m).rev() {
                out[start + k] = self.points[rem % q];
                rem /= q;
            }
        }
        out
    }
}

/// Nearest constellation point to `z` (lowest index on ties).
pub fn slice_to_constellation(z: Complex64, constellation: &Constellation) -> Complex64 {
    constellation.points[constellation.slice_index(z)]
}

/// `M x M` pilot matrix with mutually orthogonal rows and `P P^H = M E_s I`.
///
/// Row `k` is user `k`'s pilot sequence over slots `0..M`. A Sylvester
/// Hadamard pattern is used when `m` is a power of two, a DFT pattern
/// otherwise; either is multiplied by [`Constellation::pilot_symbol`].
/// DFT pilots generally fall outside the alphabet.
pub fn build_pilots(m: usize, constellation: &Constellation) -> ComplexMatrix {
    let base = constellation.pilot_symbol();
    if m.is_power_of_two() {
        ComplexMatrix::from_fn(m, m, |k, t| {
            // Sylvester construction: sign is the parity of popcount(k & t).
            if (k & t).count_ones() % 2 == 0 {
                base
            } else {
                -base
            }
        })
    } else {
        ComplexMatrix::from_fn(m, m, |k, t| {
            let phase = -2.0 * PI * ((k * t) % m) as f64 / m as f64;
            base * Complex64::from_polar(1.0, phase)
        })
    }
}

/// Noise variance giving `SNR = E||HS||^2 / E||W||^2` for unit-variance
/// channel entries: `sigma_w^2 = M E_s / 10^(snr_db / 10)`.
pub fn noise_var_for_snr(snr_db: f64, m: usize, e_s: f64) -> f64 {
    m as f64 * e_s / 10f64.powf(snr_db / 10.0)
}

/// One coherence block `X = H S + W`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionBlock {
    pub n_rx: usize,
    pub n_users: usize,
    pub coherence: usize,
    /// Transmitted symbols, `M x T`; columns `0..M` are the pilots.
    pub s_true: ComplexMatrix,
    /// Channel, `N x M`.
    pub h_true: ComplexMatrix,
    pub noise_var: f64,
    /// Received signal, `N x T`.
    pub x: ComplexMatrix,
}

impl TransmissionBlock {
    pub fn pilots(&self) -> ComplexMatrix {
        self.s_true.col_block(0, self.n_users)
    }
}

/// Draws a block at the given SNR. `snr_db = +inf` gives a noiseless block.
pub fn generate_block(
    n: usize,
    m: usize,
    t: usize,
    constellation: &Constellation,
    snr_db: f64,
    seed: u64,
) -> Result<TransmissionBlock> {
    if snr_db.is_nan() {
        return Err(Error::Config("SNR must not be NaN".into()));
    }
    let noise_var = noise_var_for_snr(snr_db, m, constellation.avg_energy());
    generate_block_with_noise_var(n, m, t, constellation, noise_var, seed)
}

/// Draws a block with an explicit noise variance.
///
/// Draw order is fixed (channel, then data symbols, then noise) so a seed
/// identifies a block bit-for-bit.
pub fn generate_block_with_noise_var(
    n: usize,
    m: usize,
    t: usize,
    constellation: &Constellation,
    noise_var: f64,
    seed: u64,
) -> Result<TransmissionBlock> {
    if m == 0 || n == 0 {
        return Err(Error::Config(
            "need at least one user and one antenna".into(),
        ));
    }
    if m >= t {
        return Err(Error::Config(format!(
            "users M = {m} must be smaller than the coherence time T = {t}"
        )));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::Config(format!("invalid noise variance {noise_var}")));
    }
    if m >= n {
        log::warn!("M = {m} users with only N = {n} antennas; outside the massive regime");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_true = ComplexMatrix::from_fn(n, m, |_, _| complex_gaussian(&mut rng, 1.0));

    let pilots = build_pilots(m, constellation);
    let points = constellation.points();
    let mut s_true = ComplexMatrix::zeros(m, t);
    for k in 0..m {
        for j in 0..m {
            s_true[(k, j)] = pilots[(k, j)];
        }
    }
    for j in m..t {
        for k in 0..m {
            s_true[(k, j)] = points[rng.random_range(0..points.len())];
        }
    }

    let mut x = h_true.matmul(&s_true)?;
    if noise_var > 0.0 {
        for z in x.as_mut_slice() {
            *z += complex_gaussian(&mut rng, noise_var);
        }
    }
    Ok(TransmissionBlock {
        n_rx: n,
        n_users: m,
        coherence: t,
        s_true,
        h_true,
        noise_var,
        x,
    })
}

/// Circularly symmetric `CN(0, var)` sample.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// Per-trial seed from the master seed and the trial coordinates.
///
/// SplitMix64 finalizer applied to each coordinate in turn, so any trial can
/// be regenerated without replaying the others.
pub fn derive_seed(master: u64, snr_index: u64, trial_index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ snr_index) ^ trial_index.rotate_left(32))
}
