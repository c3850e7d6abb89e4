//! Gray-labelled BPSK, QPSK and 16QAM with coherent ML detection.
//!
//! A symbol's index is its bit label read most-significant bit first, so
//! `constellation()[i]` carries the bits of `i`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModScheme {
    Bpsk,
    Qpsk,
    Qam16,
}

/// Gray levels for two bits on one 16QAM axis, before scaling.
fn qam16_level(b0: u8, b1: u8) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

impl ModScheme {
    pub const ALL: [ModScheme; 3] = [ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Qam16];

    /// Bits per symbol.
    pub fn k(self) -> usize {
        match self {
            ModScheme::Bpsk => 1,
            ModScheme::Qpsk => 2,
            ModScheme::Qam16 => 4,
        }
    }

    pub fn order(self) -> usize {
        1 << self.k()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModScheme::Bpsk => "bpsk",
            ModScheme::Qpsk => "qpsk",
            ModScheme::Qam16 => "qam16",
        }
    }

    /// Unit-average-energy points indexed by bit label.
    pub fn constellation(self) -> Vec<Complex64> {
        (0..self.order()).map(|i| self.point(&self.label(i))).collect()
    }

    /// Bits of symbol `index`, most significant first.
    pub fn label(self, index: usize) -> Vec<u8> {
        let k = self.k();
        (0..k).map(|b| ((index >> (k - 1 - b)) & 1) as u8).collect()
    }

    fn point(self, bits: &[u8]) -> Complex64 {
        match self {
            ModScheme::Bpsk => Complex64::new(1.0 - 2.0 * bits[0] as f64, 0.0),
            ModScheme::Qpsk => {
                Complex64::new(1.0 - 2.0 * bits[0] as f64, 1.0 - 2.0 * bits[1] as f64) * std::f64::consts::FRAC_1_SQRT_2
            }
            ModScheme::Qam16 => {
                Complex64::new(qam16_level(bits[0], bits[1]), qam16_level(bits[2], bits[3])) / 10f64.sqrt()
            }
        }
    }
}

impl fmt::Display for ModScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bpsk" => Ok(ModScheme::Bpsk),
            "qpsk" => Ok(ModScheme::Qpsk),
            "qam16" => Ok(ModScheme::Qam16),
            other => Err(Error::Config(format!("unknown modulation {other:?}"))),
        }
    }
}

/// Maps bits (0 or 1) to symbols, `k` bits per symbol.
pub fn modulate(bits: &[u8], scheme: ModScheme) -> Result<Vec<Complex64>> {
    let k = scheme.k();
    if bits.len() % k != 0 {
        return Err(Error::BitLength {
            bits: bits.len(),
            bits_per_symbol: k,
        });
    }
    let points = scheme.constellation();
    Ok(bits
        .chunks_exact(k)
        .map(|c| points[c.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)])
        .collect())
}

/// Index of `argmin_c |y - h c|^2`; ties go to the lowest index.
pub fn ml_index(y: Complex64, h_eff: Complex64, points: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in points.iter().enumerate() {
        let d = (y - h_eff * c).norm_sqr();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Coherent ML detection of every sample through one known `h_eff`.
pub fn ml_detect(y: &[Complex64], h_eff: Complex64, scheme: ModScheme) -> Vec<u8> {
    let points = scheme.constellation();
    let mut bits = Vec::with_capacity(y.len() * scheme.k());
    for &s in y {
        bits.extend(scheme.label(ml_index(s, h_eff, &points)));
    }
    bits
}
