//! Point-by-point comparison of BER curves on a shared Eb/N0 grid.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::curve::{fmt_f64, BerCurve};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub curve: String,
    pub eb_n0_db: f64,
    pub ber: f64,
    pub reference_ber: f64,
    /// `ber / reference_ber`; 1 when both are zero.
    pub ratio: f64,
    pub difference: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reference_ci_low: f64,
    pub reference_ci_high: f64,
    /// `ber <= reference_ber`.
    pub at_or_below: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: String,
    pub rows: Vec<ComparisonRow>,
    /// `(curve, eb_n0_db)` of every point where the sign of
    /// `ber - reference_ber` flips relative to the previous point.
    pub crossings: Vec<(String, f64)>,
}

fn label(c: &BerCurve, i: usize) -> String {
    if c.meta.label.is_empty() {
        format!("curve{i}")
    } else {
        c.meta.label.clone()
    }
}

/// Compares every curve against the first. All grids must be identical.
pub fn compare_curves(curves: &[BerCurve]) -> Result<ComparisonReport> {
    let reference = curves.first().ok_or_else(|| Error::Config("nothing to compare".into()))?;
    let grid = reference.grid();
    if curves.iter().any(|c| c.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let mut rows = Vec::new();
    let mut crossings = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let name = label(c, i);
        let mut prev_sign = 0i8;
        for (p, r) in c.points.iter().zip(&reference.points) {
            let (ber, rber) = (p.ber(), r.ber());
            let (lo, hi) = p.ci();
            let (rlo, rhi) = r.ci();
            let ratio = if rber == 0.0 {
                if ber == 0.0 { 1.0 } else { f64::INFINITY }
            } else {
                ber / rber
            };
            let sign = ((ber - rber) > 0.0) as i8 - ((ber - rber) < 0.0) as i8;
            if sign != 0 {
                if prev_sign != 0 && sign != prev_sign {
                    crossings.push((name.clone(), p.eb_n0_db));
                }
                prev_sign = sign;
            }
            rows.push(ComparisonRow {
                curve: name.clone(),
                eb_n0_db: p.eb_n0_db,
                ber,
                reference_ber: rber,
                ratio,
                difference: ber - rber,
                ci_low: lo,
                ci_high: hi,
                reference_ci_low: rlo,
                reference_ci_high: rhi,
                at_or_below: ber <= rber,
            });
        }
    }
    Ok(ComparisonReport {
        reference: label(reference, 0),
        rows,
        crossings,
    })
}

impl ComparisonReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "curve",
            "eb_n0_db",
            "ber",
            "reference_ber",
            "ratio",
            "difference",
            "ci_low",
            "ci_high",
            "reference_ci_low",
            "reference_ci_high",
            "at_or_below",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.curve.clone(),
                fmt_f64(r.eb_n0_db),
                fmt_f64(r.ber),
                fmt_f64(r.reference_ber),
                fmt_f64(r.ratio),
                fmt_f64(r.difference),
                fmt_f64(r.ci_low),
                fmt_f64(r.ci_high),
                fmt_f64(r.reference_ci_low),
                fmt_f64(r.reference_ci_high),
                r.at_or_below.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Plain-text table plus the crossing list.
    pub fn summary(&self) -> String {
        let mut s = format!("reference: {}\n", self.reference);
        let _ = writeln!(s, "{:<24} {:>9} {:>12} {:>12} {:>10}  <=ref", "curve", "Eb/N0", "BER", "ref BER", "ratio");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<24} {:>9.2} {:>12.4e} {:>12.4e} {:>10.4}  {}",
                r.curve,
                r.eb_n0_db,
                r.ber,
                r.reference_ber,
                r.ratio,
                if r.at_or_below { "yes" } else { "no" }
            );
        }
        if self.crossings.is_empty() {
            s.push_str("no crossings\n");
        } else {
            for (c, eb) in &self.crossings {
                let _ = writeln!(s, "crossing: {c} at {eb:.2} dB");
            }
        }
        s
    }
}
