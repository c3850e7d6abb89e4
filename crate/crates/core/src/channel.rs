//! Complex-baseband model of the single-antenna RIS link.
//!
//! The receiver sees `y = (h_d + sum_n theta_n G_n h_n) x + w`. All links are
//! unit-variance Rayleigh; `w` is circularly-symmetric Gaussian with
//! variance `sigma_sq = 1 / (2 R Eb/N0)` in each real dimension.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexArray = Vec<Complex64>;

/// Tolerance on `|theta_n| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-9;

/// One block-fading draw of the BS-RIS (`g`), RIS-UE (`h`) and direct
/// (`h_d`) channels, with `cascade[n] = g[n] * h[n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub g: ComplexArray,
    pub h: ComplexArray,
    pub h_d: Complex64,
    pub cascade: ComplexArray,
}

impl ChannelRealization {
    pub fn new(g: ComplexArray, h: ComplexArray, h_d: Complex64) -> Self {
        assert_eq!(g.len(), h.len(), "g and h must have one entry per RIS element");
        let cascade = g.iter().zip(&h).map(|(a, b)| a * b).collect();
        Self { g, h, h_d, cascade }
    }

    /// A channel known only through its cascade products, e.g. an
    /// estimate. `g` holds the products and `h` is all ones.
    pub fn from_cascade(h_d: Complex64, cascade: ComplexArray) -> Self {
        let h = vec![Complex64::new(1.0, 0.0); cascade.len()];
        Self {
            g: cascade.clone(),
            h,
            h_d,
            cascade,
        }
    }

    /// Number of RIS elements. Zero means a plain Rayleigh link.
    pub fn n_elements(&self) -> usize {
        self.cascade.len()
    }
}

/// Noise level for a given Eb/N0 and code rate `R = k/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub eb_n0_db: f64,
    pub code_rate: f64,
    /// Noise variance per real dimension, `(2 R Eb/N0)^-1`.
    pub sigma_sq: f64,
}

impl NoiseSpec {
    pub fn new(eb_n0_db: f64, code_rate: f64) -> Self {
        assert!(code_rate > 0.0, "code rate must be positive");
        let eb_n0 = 10f64.powf(eb_n0_db / 10.0);
        Self {
            eb_n0_db,
            code_rate,
            sigma_sq: 1.0 / (2.0 * code_rate * eb_n0),
        }
    }

    pub fn noiseless(code_rate: f64) -> Self {
        Self::new(f64::INFINITY, code_rate)
    }

    /// Total noise power per complex sample (`N0`).
    pub fn noise_power(&self) -> f64 {
        2.0 * self.sigma_sq
    }
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `g`, `h` (each `n` i.i.d. CN(0, 1)) then `h_d`, in that order.
pub fn sample_rayleigh<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ChannelRealization {
    let g = (0..n).map(|_| cn01(rng)).collect();
    let h = (0..n).map(|_| cn01(rng)).collect();
    let h_d = cn01(rng);
    ChannelRealization::new(g, h, h_d)
}

/// `sum_n w[n] cascade[n]` for arbitrary weights (no modulus constraint).
pub fn reflected_sum(ch: &ChannelRealization, weights: &[Complex64]) -> Complex64 {
    assert_eq!(weights.len(), ch.n_elements(), "one weight per RIS element");
    weights.iter().zip(&ch.cascade).map(|(w, c)| w * c).sum()
}

pub fn check_unit_modulus(theta: &[Complex64]) -> Result<()> {
    for (index, t) in theta.iter().enumerate() {
        let modulus = t.norm();
        if (modulus - 1.0).abs() > UNIT_MODULUS_TOL || !modulus.is_finite() {
            return Err(Error::NotUnitModulus { index, modulus });
        }
    }
    Ok(())
}

/// The composite coefficient `h_d + sum_n theta[n] cascade[n]`.
pub fn effective_channel(ch: &ChannelRealization, theta: &[Complex64]) -> Result<Complex64> {
    if theta.len() != ch.n_elements() {
        return Err(Error::Dimension {
            axis: "reflection coefficients",
            expected: ch.n_elements(),
            actual: theta.len(),
        });
    }
    check_unit_modulus(theta)?;
    Ok(ch.h_d + reflected_sum(ch, theta))
}

pub fn apply_channel(x: &[Complex64], h_eff: Complex64) -> ComplexArray {
    x.iter().map(|v| h_eff * v).collect()
}

/// Complex Gaussian noise with `spec.sigma_sq` per real dimension.
pub fn awgn<R: Rng + ?Sized>(len: usize, spec: &NoiseSpec, rng: &mut R) -> ComplexArray {
    let std = spec.sigma_sq.sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * std, im * std)
        })
        .collect()
}

pub fn add_awgn<R: Rng + ?Sized>(y: &[Complex64], spec: &NoiseSpec, rng: &mut R) -> ComplexArray {
    let w = awgn(y.len(), spec, rng);
    y.iter().zip(w).map(|(a, b)| a + b).collect()
}

/// Received SNR `|h_eff|^2 / sigma_sq`.
pub fn snr(h_eff: Complex64, spec: &NoiseSpec) -> f64 {
    h_eff.norm_sqr() / spec.sigma_sq
}
