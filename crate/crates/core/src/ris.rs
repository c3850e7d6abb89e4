//! RIS phase selection: the closed-form alignment optimum, a quantized
//! exhaustive search, and a dense network pre-trained without labels to
//! maximize the effective channel gain.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::channel::{check_unit_modulus, effective_channel, sample_rayleigh, ChannelRealization};
use crate::error::{Error, Result};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::schedule::{best_epoch, schedule_step, Decision, TrainSchedule};
use crate::nn::{adam_update, ActivationKind, AdamConfig, BatchNorm, Dense, Layer, Mode, OptimizerState, Real, RealArray, Sequential};
use crate::rng::Streams;

/// Largest grid the exhaustive search will enumerate.
pub const SEARCH_BUDGET: u64 = 1 << 24;

/// Hidden widths as multiples of the element count.
pub const HIDDEN_MULTIPLIERS: [usize; 4] = [32, 16, 8, 4];

/// Unit-modulus reflection coefficients, one per element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    theta: Vec<Complex64>,
}

impl PhaseConfig {
    pub fn new(theta: Vec<Complex64>) -> Result<Self> {
        check_unit_modulus(&theta)?;
        Ok(Self { theta })
    }

    pub fn from_angles(angles: &[f64]) -> Self {
        Self {
            theta: angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect(),
        }
    }

    /// All coefficients equal to one (no phase optimization).
    pub fn ones(n: usize) -> Self {
        Self {
            theta: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.arg()).collect()
    }

    /// Largest `|theta_a[n] - theta_b[n]|` over elements.
    pub fn max_distance(&self, other: &PhaseConfig) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Network input `[re(cascade); im(cascade); re(h_d); im(h_d)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RisNetInput {
    pub features: Vec<f64>,
}

impl RisNetInput {
    pub fn from_channel(ch: &ChannelRealization) -> Self {
        let mut features = Vec::with_capacity(2 * ch.n_elements() + 2);
        features.extend(ch.cascade.iter().map(|c| c.re));
        features.extend(ch.cascade.iter().map(|c| c.im));
        features.push(ch.h_d.re);
        features.push(ch.h_d.im);
        Self { features }
    }
}

/// Aligns every reflected path with the direct path:
/// `theta[n] = exp(j(arg h_d - arg cascade[n]))`, which attains
/// `|h_eff| = |h_d| + sum |cascade[n]|`. A zero cascade entry gets `theta = 1`.
pub fn optimal_phases_closed_form(ch: &ChannelRealization) -> PhaseConfig {
    let one = Complex64::new(1.0, 0.0);
    let direct = if ch.h_d.norm() == 0.0 { one } else { ch.h_d / ch.h_d.norm() };
    PhaseConfig {
        theta: ch
            .cascade
            .iter()
            .map(|c| {
                let m = c.norm();
                if m == 0.0 {
                    one
                } else {
                    direct * c.conj() / m
                }
            })
            .collect(),
    }
}

/// Upper bound on `|h_eff|` over all unit-modulus configurations.
pub fn optimal_gain(ch: &ChannelRealization) -> f64 {
    ch.h_d.norm() + ch.cascade.iter().map(|c| c.norm()).sum::<f64>()
}

/// Enumerates `levels^N` uniformly quantized configurations
/// `exp(j 2 pi m / levels)` and returns the one maximizing `|h_eff|`.
/// Element 0 is the most significant digit of the enumeration index;
/// values within 1e-12 (relative) of the best count as ties and the lowest
/// index wins.
pub fn exhaustive_phase_search(ch: &ChannelRealization, levels: usize) -> Result<PhaseConfig> {
    let n = ch.n_elements();
    let needed = (levels as f64).powi(n as i32);
    if levels == 0 || needed > SEARCH_BUDGET as f64 {
        return Err(Error::SearchBudget {
            needed,
            budget: SEARCH_BUDGET,
        });
    }
    let grid: Vec<Complex64> = (0..levels)
        .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / levels as f64))
        .collect();
    let mut digits = vec![0usize; n];
    let mut best = digits.clone();
    let mut best_gain = -1.0f64;
    loop {
        let h: Complex64 = ch.h_d + digits.iter().zip(&ch.cascade).map(|(&d, c)| grid[d] * c).sum::<Complex64>();
        let gain = h.norm();
        if gain > best_gain + 1e-12 * best_gain.max(0.0) {
            best_gain = gain;
            best.copy_from_slice(&digits);
        }
        // odometer, least significant digit last
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(PhaseConfig {
                    theta: best.iter().map(|&d| grid[d]).collect(),
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < levels {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Dense phase network: four `Dense + ReLU + BN` blocks of widths
/// 32N, 16N, 8N, 4N and a linear `Dense` emitting N angles.
#[derive(Clone, Debug)]
pub struct RisNet<T: Real = f64> {
    n_elements: usize,
    net: Sequential<T>,
}

impl<T: Real> RisNet<T> {
    pub fn new(n_elements: usize, streams: &Streams) -> Self {
        assert!(n_elements >= 1, "the RIS needs at least one element");
        let mut rng = streams.rng("ris/init");
        let mut net = Sequential::new();
        let mut width = 2 * n_elements + 2;
        for (i, mult) in HIDDEN_MULTIPLIERS.iter().enumerate() {
            let out = mult * n_elements;
            net.push(format!("dense{i}"), Layer::Dense(Dense::new(width, out, &mut rng)));
            net.push(format!("relu{i}"), Layer::Activation(crate::nn::Activation::new(ActivationKind::Relu)));
            net.push(format!("bn{i}"), Layer::BatchNorm(BatchNorm::new(out)));
            width = out;
        }
        net.push("out", Layer::Dense(Dense::new(width, n_elements, &mut rng)));
        Self { n_elements, net }
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn network(&self) -> &Sequential<T> {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Sequential<T> {
        &mut self.net
    }

    /// Output widths of every dense layer, in order.
    pub fn layer_widths(&self) -> Vec<usize> {
        self.net
            .layers()
            .filter_map(|(_, l)| match l {
                Layer::Dense(d) => Some(d.out_features()),
                _ => None,
            })
            .collect()
    }

    pub fn input_batch(&self, channels: &[&ChannelRealization]) -> Result<RealArray<T>> {
        let width = 2 * self.n_elements + 2;
        let mut data = Vec::with_capacity(channels.len() * width);
        for ch in channels {
            let inp = RisNetInput::from_channel(ch);
            if inp.features.len() != width {
                return Err(Error::Dimension {
                    axis: "RIS network input",
                    expected: width,
                    actual: inp.features.len(),
                });
            }
            data.extend(inp.features.iter().map(|&v| T::of(v)));
        }
        RealArray::new(&[channels.len(), width], data)
    }

    /// Inference-mode phases for one input vector.
    pub fn forward(&self, inp: &RisNetInput) -> Result<PhaseConfig> {
        let width = 2 * self.n_elements + 2;
        if inp.features.len() != width {
            return Err(Error::Dimension {
                axis: "RIS network input",
                expected: width,
                actual: inp.features.len(),
            });
        }
        let x = RealArray::new(&[1, width], inp.features.iter().map(|&v| T::of(v)).collect())?;
        let angles = self.net.infer(&x)?;
        Ok(PhaseConfig::from_angles(&angles.data().iter().map(|v| v.f64()).collect::<Vec<_>>()))
    }

    pub fn phases(&self, channels: &[&ChannelRealization]) -> Result<Vec<PhaseConfig>> {
        let angles = self.net.infer(&self.input_batch(channels)?)?;
        Ok(angles
            .data()
            .chunks_exact(self.n_elements)
            .map(|row| PhaseConfig::from_angles(&row.iter().map(|v| v.f64()).collect::<Vec<_>>()))
            .collect())
    }

    /// Populates batch-norm running statistics from one training-mode pass
    /// without changing any weight.
    pub fn calibrate_batchnorm(&mut self, channels: &[&ChannelRealization]) -> Result<()> {
        let x = self.input_batch(channels)?;
        self.net.forward(&x, Mode::Train)?;
        Ok(())
    }

    /// Training-mode forward pass on `channels`, returning `-mean |h_eff|^2`
    /// and accumulating its parameter gradients.
    pub fn loss_and_backward(&mut self, channels: &[&ChannelRealization]) -> Result<f64> {
        let x = self.input_batch(channels)?;
        let angles = self.net.forward(&x, Mode::Train)?;
        let (loss, grad, _) = gain_loss(&angles, channels);
        self.net.backward(&grad);
        Ok(loss)
    }

    pub fn to_checkpoint(&self, seed: u64) -> Result<Checkpoint> {
        let mut ckpt = Checkpoint::new(&["ris-net"], seed);
        ckpt.set_meta("n_elements", self.n_elements)?;
        self.net.export("ris", &mut ckpt);
        Ok(ckpt)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if !ckpt.has_tag("ris-net") {
            return Err(Error::Checkpoint("not a ris-net checkpoint".into()));
        }
        let n: usize = ckpt.meta("n_elements")?;
        let mut net = Self::new(n, &Streams::new(0));
        net.net.import("ris", ckpt)?;
        Ok(net)
    }
}

/// Where reflection coefficients come from.
#[derive(Clone, Copy, Debug)]
pub enum PhaseSource<'a, T: Real = f64> {
    ClosedForm,
    Learned(&'a RisNet<T>),
    /// All-ones configuration, the no-optimization reference.
    Unoptimized,
}

impl<T: Real> PhaseSource<'_, T> {
    pub fn select(&self, channels: &[&ChannelRealization]) -> Result<Vec<PhaseConfig>> {
        match self {
            PhaseSource::ClosedForm => Ok(channels.iter().map(|c| optimal_phases_closed_form(c)).collect()),
            PhaseSource::Learned(net) => net.phases(channels),
            PhaseSource::Unoptimized => Ok(channels.iter().map(|c| PhaseConfig::ones(c.n_elements())).collect()),
        }
    }
}

/// Loss `-mean |h_eff|^2` and its gradient w.r.t. the emitted angles.
fn gain_loss<T: Real>(angles: &RealArray<T>, channels: &[&ChannelRealization]) -> (f64, RealArray<T>, Vec<f64>) {
    let n = angles.last_dim();
    let b = channels.len() as f64;
    let mut grad = RealArray::zeros(angles.shape());
    let mut loss = 0.0;
    let mut gains = Vec::with_capacity(channels.len());
    for ((row, g), ch) in angles.data().chunks_exact(n).zip(grad.data_mut().chunks_exact_mut(n)).zip(channels) {
        let terms: Vec<Complex64> = row.iter().zip(&ch.cascade).map(|(a, c)| Complex64::from_polar(1.0, a.f64()) * c).collect();
        let h = ch.h_d + terms.iter().sum::<Complex64>();
        loss -= h.norm_sqr();
        gains.push(h.norm());
        for (gv, z) in g.iter_mut().zip(&terms) {
            *gv = T::of(2.0 * (h.conj() * z).im / b);
        }
    }
    (loss / b, grad, gains)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisPretrainConfig {
    pub n_elements: usize,
    /// Channel realizations drawn for training plus validation.
    pub dataset: usize,
    pub val_fraction: f64,
    pub batch: usize,
    /// Held-out channels for the final efficiency figure.
    pub test_channels: usize,
    pub schedule: TrainSchedule,
    pub adam: AdamConfig,
}

impl RisPretrainConfig {
    /// 200k realizations, 20% validation, batch 128, Adam at 1e-3 and the
    /// 1000-epoch / patience-20 / factor-0.33-on-10 schedule.
    pub fn full(n_elements: usize) -> Self {
        Self {
            n_elements,
            dataset: 200_000,
            val_fraction: 0.2,
            batch: 128,
            test_channels: 10_000,
            schedule: TrainSchedule::ris_pretrain(),
            adam: AdamConfig::default(),
        }
    }

    /// Desk-scale preset: 20k realizations and at most 200 epochs.
    pub fn desk(n_elements: usize) -> Self {
        Self {
            dataset: 20_000,
            test_channels: 2_000,
            schedule: TrainSchedule {
                max_epochs: 200,
                ..TrainSchedule::ris_pretrain()
            },
            ..Self::full(n_elements)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.n_elements == 0 {
            return Err(Error::Config("RIS needs at least one element".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config(format!("ris val_fraction {} must lie in (0, 1)", self.val_fraction)));
        }
        let val = (self.dataset as f64 * self.val_fraction).round() as usize;
        if self.batch < 2 || val == 0 || self.dataset - val < self.batch {
            return Err(Error::Config("RIS dataset too small for the batch size and validation split".into()));
        }
        if self.test_channels == 0 {
            return Err(Error::Config("RIS test_channels must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_efficiency: f64,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct RisPretrainOutcome<T: Real = f64> {
    pub net: RisNet<T>,
    pub history: Vec<RisEpoch>,
    /// Validation efficiency of the best-so-far weights at each LR decay.
    pub plateau_efficiencies: Vec<f64>,
    /// `mean(|h_eff(net)| / |h_eff(closed form)|)` on held-out channels.
    pub efficiency: f64,
}

/// Mean ratio of the net's `|h_eff|` to the closed-form optimum.
pub fn efficiency<T: Real>(net: &RisNet<T>, channels: &[ChannelRealization]) -> Result<f64> {
    let mut total = 0.0;
    for chunk in channels.chunks(1024) {
        let refs: Vec<&ChannelRealization> = chunk.iter().collect();
        for (ch, theta) in chunk.iter().zip(net.phases(&refs)?) {
            total += effective_channel(ch, theta.as_slice())?.norm() / optimal_gain(ch);
        }
    }
    Ok(total / channels.len() as f64)
}

/// Trains a fresh [`RisNet`] to minimize `-mean |h_eff|^2` over random
/// Rayleigh channels, keeping the weights with the best validation loss.
pub fn pretrain_ris_net<T: Real>(cfg: &RisPretrainConfig, streams: &Streams) -> Result<RisPretrainOutcome<T>> {
    cfg.validate()?;
    let n = cfg.n_elements;
    let channels: Vec<ChannelRealization> = (0..cfg.dataset)
        .map(|i| sample_rayleigh(n, &mut streams.rng(&format!("ris/data/{i}"))))
        .collect();
    let n_val = (cfg.dataset as f64 * cfg.val_fraction).round() as usize;
    let (train, val) = channels.split_at(cfg.dataset - n_val);
    let val_refs: Vec<&ChannelRealization> = val.iter().collect();
    let test: Vec<ChannelRealization> = (0..cfg.test_channels)
        .map(|i| sample_rayleigh(n, &mut streams.rng(&format!("ris/test/{i}"))))
        .collect();

    let mut net = RisNet::<T>::new(n, streams);
    let mut opt = OptimizerState::<T>::new(cfg.adam);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history: Vec<RisEpoch> = Vec::new();
    let mut val_losses = Vec::new();
    let mut best = net.clone();
    let mut best_eff = 0.0;
    let mut plateau_efficiencies = Vec::new();

    for epoch in 0..cfg.schedule.max_epochs {
        order.shuffle(&mut streams.rng(&format!("ris/shuffle/{epoch}")));
        let mut train_loss = 0.0;
        let batches = train.len() / cfg.batch;
        for (bi, idx) in order.chunks_exact(cfg.batch).enumerate() {
            let batch: Vec<&ChannelRealization> = idx.iter().map(|&i| &train[i]).collect();
            net.net.zero_grad();
            let loss = net.loss_and_backward(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: bi, loss });
            }
            train_loss += loss;
            adam_update(&mut net.net.params_mut(), &mut opt)?;
        }
        train_loss /= batches as f64;

        let mut val_loss = 0.0;
        let mut eff = 0.0;
        for chunk in val_refs.chunks(1024) {
            let angles = net.net.infer(&net.input_batch(chunk)?)?;
            let (loss, _, gains) = gain_loss(&angles, chunk);
            val_loss += loss * chunk.len() as f64;
            eff += gains.iter().zip(chunk).map(|(g, ch)| g / optimal_gain(ch)).sum::<f64>();
        }
        val_loss /= val.len() as f64;
        eff /= val.len() as f64;
        if !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: batches,
                loss: val_loss,
            });
        }
        history.push(RisEpoch {
            epoch: epoch + 1,
            train_loss,
            val_loss,
            val_efficiency: eff,
            lr: opt.lr,
        });
        val_losses.push(val_loss);
        if best_epoch(&val_losses, cfg.schedule.min_delta) == epoch {
            best = net.clone();
            best_eff = eff;
        }
        let outcome = schedule_step(&cfg.schedule, &val_losses, opt.lr);
        if outcome.lr_reduced {
            plateau_efficiencies.push(best_eff);
        }
        opt.lr = outcome.lr;
        if outcome.decision == Decision::Stop {
            break;
        }
    }

    let efficiency = efficiency(&best, &test)?;
    Ok(RisPretrainOutcome {
        net: best,
        history,
        plateau_efficiencies,
        efficiency,
    })
}
