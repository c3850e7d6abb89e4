//! Pilot-based channel estimation: T = N + 1 pilot slots, each reflected
//! with a known pattern, then a least-squares solve for the direct channel
//! and every per-element cascade coefficient.

use std::borrow::Cow;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{add_awgn, check_unit_modulus, effective_channel, ChannelRealization, NoiseSpec};
use crate::baseline::curve::fmt_f64;
use crate::error::{Error, Result};
use crate::nn::Real;
use crate::ris::{PhaseConfig, PhaseSource};

/// Largest accepted condition-number estimate for a custom schedule.
pub const MAX_CONDITION: f64 = 1e10;

/// Pilot symbols and reflection patterns for one estimation round.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotSchedule {
    pilots: Vec<Complex64>,
    patterns: Vec<PhaseConfig>,
    /// `[1 | theta^(t)]` stacked over t.
    matrix: DMatrix<Complex64>,
}

impl PilotSchedule {
    /// Fails with `SingularSchedule` unless there are exactly `N + 1`
    /// unit-modulus pilots and the stacked pattern matrix is well conditioned.
    pub fn new(pilots: Vec<Complex64>, patterns: Vec<PhaseConfig>) -> Result<Self> {
        let t = pilots.len();
        check_unit_modulus(&pilots)?;
        if t < 2 || patterns.len() != t {
            return Err(Error::Dimension {
                axis: "pilot slots",
                expected: t,
                actual: patterns.len(),
            });
        }
        for p in &patterns {
            if p.len() + 1 != t {
                return Err(Error::Dimension {
                    axis: "reflection pattern",
                    expected: t - 1,
                    actual: p.len(),
                });
            }
        }
        let matrix = DMatrix::from_fn(t, t, |r, c| {
            if c == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                patterns[r].as_slice()[c - 1]
            }
        });
        let inverse = matrix.clone().try_inverse().ok_or(Error::SingularSchedule)?;
        let cond = matrix.norm() * inverse.norm();
        if !cond.is_finite() || cond > MAX_CONDITION {
            return Err(Error::SingularSchedule);
        }
        Ok(Self {
            pilots,
            patterns,
            matrix,
        })
    }

    /// Number of pilot slots, `N + 1`.
    pub fn len(&self) -> usize {
        self.pilots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pilots.is_empty()
    }

    pub fn n_elements(&self) -> usize {
        self.pilots.len() - 1
    }

    pub fn pilots(&self) -> &[Complex64] {
        &self.pilots
    }

    pub fn patterns(&self) -> &[PhaseConfig] {
        &self.patterns
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `tr((A^H A)^-1)`: the LS error variance summed over unknowns, per unit
    /// of noise power.
    pub fn inverse_gram_trace(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        gram.try_inverse().map_or(f64::INFINITY, |g| g.trace().re)
    }

    /// Writes one row per pattern entry: `t, n, re, im`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "n", "re", "im"])?;
        for (t, p) in self.patterns.iter().enumerate() {
            for (n, v) in p.as_slice().iter().enumerate() {
                w.write_record([t.to_string(), n.to_string(), fmt_f64(v.re), fmt_f64(v.im)])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// DFT schedule: with `F[t, m] = exp(-j 2 pi t m / (N + 1))`, pattern `t`
/// is `F[t, 1..=N]` and every pilot symbol is one, so the stacked matrix
/// is `F` itself.
pub fn dft_reflection_matrix(n_elements: usize) -> PilotSchedule {
    assert!(n_elements >= 1, "the RIS needs at least one element");
    let t = n_elements + 1;
    let f = |r: usize, c: usize| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((r * c) % t) as f64 / t as f64);
    let patterns = (0..t)
        .map(|r| PhaseConfig::new((1..t).map(|c| f(r, c)).collect()).expect("DFT entries are unit modulus"))
        .collect();
    PilotSchedule::new(vec![Complex64::new(1.0, 0.0); t], patterns).expect("the DFT matrix is unitary up to scale")
}

/// `y_p[t] = (h_d + sum_n theta^(t)[n] cascade[n]) x_p[t] + w_p[t]`.
pub fn simulate_pilot_phase<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    sched: &PilotSchedule,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if ch.n_elements() != sched.n_elements() {
        return Err(Error::Dimension {
            axis: "RIS elements",
            expected: sched.n_elements(),
            actual: ch.n_elements(),
        });
    }
    let clean = sched
        .patterns
        .iter()
        .zip(&sched.pilots)
        .map(|(p, x)| Ok(effective_channel(ch, p.as_slice())? * x))
        .collect::<Result<Vec<_>>>()?;
    Ok(add_awgn(&clean, spec, rng))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEstimate {
    pub h_d_hat: Complex64,
    pub cascade_hat: Vec<Complex64>,
    /// `|A x_hat - H_hat|`, the solve residual.
    pub residual: f64,
}

impl ChannelEstimate {
    pub fn as_channel(&self) -> ChannelRealization {
        ChannelRealization::from_cascade(self.h_d_hat, self.cascade_hat.clone())
    }

    /// Squared error summed over the direct and cascade coefficients.
    pub fn squared_error(&self, truth: &ChannelRealization) -> f64 {
        (self.h_d_hat - truth.h_d).norm_sqr()
            + self
                .cascade_hat
                .iter()
                .zip(&truth.cascade)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
    }
}

/// Per-slot estimates `y_p[t] / x_p[t]`, then the solve
/// `[1 | theta^(t)] [h_d; cascade] = H_hat`.
pub fn ls_estimate(y_p: &[Complex64], sched: &PilotSchedule) -> Result<ChannelEstimate> {
    if y_p.len() != sched.len() {
        return Err(Error::Dimension {
            axis: "pilot observations",
            expected: sched.len(),
            actual: y_p.len(),
        });
    }
    let h_hat = DVector::from_iterator(y_p.len(), y_p.iter().zip(&sched.pilots).map(|(y, x)| y / x));
    let sol = sched.matrix.clone().lu().solve(&h_hat).ok_or(Error::SingularSchedule)?;
    let residual = (&sched.matrix * &sol - &h_hat).norm();
    Ok(ChannelEstimate {
        h_d_hat: sol[0],
        cascade_hat: sol.iter().skip(1).copied().collect(),
        residual,
    })
}

/// Which channel knowledge drives phase selection and detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    Perfect,
    Estimated,
}

impl CsiMode {
    pub fn name(self) -> &'static str {
        match self {
            CsiMode::Perfect => "perfect",
            CsiMode::Estimated => "estimated",
        }
    }
}

/// Result of the imperfect-CSI path for one channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedCsi {
    pub estimate: ChannelEstimate,
    /// Phases chosen from the estimate.
    pub theta: PhaseConfig,
    /// Receiver-side effective channel, computed from the estimate.
    pub h_eff_hat: Complex64,
    /// Effective channel actually realized on the true channel.
    pub h_eff_true: Complex64,
}

/// Pilot phase, LS estimate, phase selection on the estimate and the
/// receiver's estimated effective channel. The true channel is used only to
/// report the realized `h_eff`.
pub fn estimated_csi_pipeline<T: Real, R: Rng + ?Sized>(
    ch: &ChannelRealization,
    sched: &PilotSchedule,
    spec: &NoiseSpec,
    source: &PhaseSource<'_, T>,
    rng: &mut R,
) -> Result<EstimatedCsi> {
    let y_p = simulate_pilot_phase(ch, sched, spec, rng)?;
    let estimate = ls_estimate(&y_p, sched)?;
    let est_ch = estimate.as_channel();
    let theta = source.select(&[&est_ch])?.remove(0);
    let h_eff_hat = effective_channel(&est_ch, theta.as_slice())?;
    let h_eff_true = effective_channel(ch, theta.as_slice())?;
    Ok(EstimatedCsi {
        estimate,
        theta,
        h_eff_hat,
        h_eff_true,
    })
}

/// Effective channel seen by the signal and the one the receiver believes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkState {
    pub h_true: Complex64,
    pub h_rx: Complex64,
}

/// [`LinkState`] plus the channel the transmitter side believes in.
#[derive(Clone, Debug, PartialEq)]
pub struct KnownLink {
    pub state: LinkState,
    pub known: ChannelRealization,
}

/// Resolves phases and receiver CSI for a batch of channels. In estimated
/// mode every channel first goes through the pilot phase with `pilot_spec`
/// noise, drawn from `rng` in channel order.
pub fn resolve_links<T: Real, R: Rng + ?Sized>(
    channels: &[ChannelRealization],
    mode: CsiMode,
    sched: Option<&PilotSchedule>,
    pilot_spec: &NoiseSpec,
    source: &PhaseSource<'_, T>,
    rng: &mut R,
) -> Result<Vec<LinkState>> {
    let known = known_channels(channels, mode, sched, pilot_spec, rng)?;
    let refs: Vec<&ChannelRealization> = known.iter().collect();
    let thetas = source.select(&refs)?;
    channels
        .iter()
        .zip(known.iter())
        .zip(&thetas)
        .map(|((ch, k), t)| link_state(ch, k, t))
        .collect()
}

/// Like [`resolve_links`] but also returns the believed channels.
pub fn resolve_known_links<T: Real, R: Rng + ?Sized>(
    channels: &[ChannelRealization],
    mode: CsiMode,
    sched: Option<&PilotSchedule>,
    pilot_spec: &NoiseSpec,
    source: &PhaseSource<'_, T>,
    rng: &mut R,
) -> Result<Vec<KnownLink>> {
    let known = known_channels(channels, mode, sched, pilot_spec, rng)?.into_owned();
    let refs: Vec<&ChannelRealization> = known.iter().collect();
    let thetas = source.select(&refs)?;
    let states = channels
        .iter()
        .zip(&known)
        .zip(&thetas)
        .map(|((ch, k), t)| link_state(ch, k, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(states.into_iter().zip(known).map(|(state, known)| KnownLink { state, known }).collect())
}

fn known_channels<'a, R: Rng + ?Sized>(
    channels: &'a [ChannelRealization],
    mode: CsiMode,
    sched: Option<&PilotSchedule>,
    pilot_spec: &NoiseSpec,
    rng: &mut R,
) -> Result<Cow<'a, [ChannelRealization]>> {
    match mode {
        CsiMode::Perfect => Ok(Cow::Borrowed(channels)),
        CsiMode::Estimated => {
            let sched = sched.ok_or_else(|| Error::Config("estimated CSI needs a pilot schedule".into()))?;
            Ok(channels
                .iter()
                .map(|ch| Ok(ls_estimate(&simulate_pilot_phase(ch, sched, pilot_spec, rng)?, sched)?.as_channel()))
                .collect::<Result<Vec<_>>>()?
                .into())
        }
    }
}

fn link_state(ch: &ChannelRealization, known: &ChannelRealization, theta: &PhaseConfig) -> Result<LinkState> {
    Ok(LinkState {
        h_true: effective_channel(ch, theta.as_slice())?,
        h_rx: effective_channel(known, theta.as_slice())?,
    })
}
