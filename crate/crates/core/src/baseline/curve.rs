//! Bit-error-rate curves with exact binomial counts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard-normal quantile used for every reported confidence interval.
pub const CI_Z: f64 = 3.0;

pub const CSV_HEADER: [&str; 6] = ["eb_n0_db", "bit_errors", "total_bits", "ber", "ci_low", "ci_high"];

/// 17 significant digits: enough for an exact `f64` round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Wilson score interval for `errors` successes out of `total` trials.
pub fn wilson_interval(errors: u64, total: u64, z: f64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// `z` binomial standard errors around a reference probability `p` over
/// `total` trials.
pub fn binomial_tolerance(p: f64, total: u64, z: f64) -> f64 {
    z * (p * (1.0 - p) / total as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub eb_n0_db: f64,
    pub bit_errors: u64,
    pub total_bits: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.total_bits as f64
    }

    pub fn ci(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.total_bits, CI_Z)
    }

    /// Sums counts from two runs at the same Eb/N0.
    pub fn merge(&self, other: &BerPoint) -> BerPoint {
        debug_assert_eq!(self.eb_n0_db, other.eb_n0_db);
        BerPoint {
            eb_n0_db: self.eb_n0_db,
            bit_errors: self.bit_errors + other.bit_errors,
            total_bits: self.total_bits + other.total_bits,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub label: String,
    pub n_elements: usize,
    pub csi_mode: String,
    pub seed: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
    pub meta: CurveMeta,
}

impl BerCurve {
    /// Sorts points by Eb/N0; rejects empty totals.
    pub fn new(mut points: Vec<BerPoint>, meta: CurveMeta) -> Result<Self> {
        if points.iter().any(|p| p.total_bits == 0 || p.bit_errors > p.total_bits || !p.eb_n0_db.is_finite()) {
            return Err(Error::Config("every BER point needs finite Eb/N0 and 0 <= errors <= bits > 0".into()));
        }
        points.sort_by(|a, b| a.eb_n0_db.total_cmp(&b.eb_n0_db));
        Ok(Self { points, meta })
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eb_n0_db).collect()
    }

    pub fn bers(&self) -> Vec<f64> {
        self.points.iter().map(BerPoint::ber).collect()
    }

    /// True if no later point's interval lies entirely above an earlier
    /// point's interval.
    pub fn is_monotone_within_ci(&self) -> bool {
        self.points.windows(2).all(|w| w[1].ci().0 <= w[0].ci().1)
    }

    /// Eb/N0 where the curve crosses `target`, by linear interpolation of
    /// `log10(ber)` between the first bracketing pair. `None` if the sweep
    /// never reaches the target or a bracketing point has zero errors.
    pub fn eb_n0_at(&self, target: f64) -> Option<f64> {
        for w in self.points.windows(2) {
            let (a, b) = (w[0].ber(), w[1].ber());
            if a >= target && b <= target {
                if a == b {
                    return Some(w[0].eb_n0_db);
                }
                if a <= 0.0 || b <= 0.0 {
                    return if b == target { Some(w[1].eb_n0_db) } else { None };
                }
                let t = (a.log10() - target.log10()) / (a.log10() - b.log10());
                return Some(w[0].eb_n0_db + t * (w[1].eb_n0_db - w[0].eb_n0_db));
            }
        }
        None
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            let (lo, hi) = p.ci();
            w.write_record([
                fmt_f64(p.eb_n0_db),
                p.bit_errors.to_string(),
                p.total_bits.to_string(),
                fmt_f64(p.ber()),
                fmt_f64(lo),
                fmt_f64(hi),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads the counts back; derived columns are checked for consistency.
    pub fn read_csv(path: &Path, meta: CurveMeta) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        if r.headers()?.iter().ne(CSV_HEADER) {
            return Err(Error::Config(format!("{} does not have the BER curve header", path.display())));
        }
        let bad = |what: &str| Error::Config(format!("{}: bad {what}", path.display()));
        let mut points = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let p = BerPoint {
                eb_n0_db: rec[0].parse().map_err(|_| bad("eb_n0_db"))?,
                bit_errors: rec[1].parse().map_err(|_| bad("bit_errors"))?,
                total_bits: rec[2].parse().map_err(|_| bad("total_bits"))?,
            };
            let ber: f64 = rec[3].parse().map_err(|_| bad("ber"))?;
            if ber != p.ber() {
                return Err(bad("ber (not bit_errors / total_bits)"));
            }
            points.push(p);
        }
        Self::new(points, meta)
    }
}
