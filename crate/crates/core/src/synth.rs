//! Seeded two-class spherical Gaussian data.
//!
//! The stream is reproducible outside Rust: PCG64 (128-bit LCG, XSL-RR
//! output) initialised as `state = seed`, `stream = PCG_DEFAULT_STREAM`
//! (increment `(stream << 1) | 1`, then one advance after adding the
//! increment), uniforms `(next_u64 >> 11) * 2^-53`, and standard normals
//! from the Marsaglia polar method, both members of each accepted pair used
//! in order.

use nalgebra::DMatrix;
use rand_core::Rng;
use rand_pcg::Pcg64;

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};

/// The PCG reference implementation's default stream constant.
pub const PCG_DEFAULT_STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

/// Per-class mean used by the default simulation: `(-1, -1)` and `(1, 1)`.
pub const DEFAULT_MEAN_NEG: [f64; 2] = [-1.0, -1.0];
pub const DEFAULT_MEAN_POS: [f64; 2] = [1.0, 1.0];
pub const DEFAULT_N: usize = 10_000;

/// Standard normal deviates, two at a time.
pub struct NormalStream {
    rng: Pcg64,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Pcg64::new(seed as u128, PCG_DEFAULT_STREAM),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// First `n/2` samples labeled `-1` around `mean_neg`, the rest `+1` around
/// `mean_pos`, each with identity covariance. Features are used untransformed.
pub fn generate_gaussian_mixture(n: usize, mean_neg: &[f64], mean_pos: &[f64], seed: u64) -> Result<Dataset> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "n must be a positive even number, got {n}"
        )));
    }
    if mean_neg.len() != mean_pos.len() || mean_neg.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: mean_neg.len(),
            found: mean_pos.len(),
        });
    }
    let q = mean_neg.len();
    let mut normals = NormalStream::new(seed);
    let mut features = DMatrix::zeros(n, q);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (label, mean) = if i < n / 2 {
            (Label::Negative, mean_neg)
        } else {
            (Label::Positive, mean_pos)
        };
        for j in 0..q {
            features[(i, j)] = mean[j] + normals.next_normal();
        }
        labels.push(label);
    }
    Dataset::new(features, labels)
}

/// The default simulation: `n` samples, means `(-1,-1)` and `(1,1)`.
pub fn default_simulation(n: usize, seed: u64) -> Result<Dataset> {
    generate_gaussian_mixture(n, &DEFAULT_MEAN_NEG, &DEFAULT_MEAN_POS, seed)
}
