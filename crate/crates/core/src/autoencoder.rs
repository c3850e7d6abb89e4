//! Convolutional end-to-end autoencoder over the RIS link.
//!
//! Messages travel in blocks of `seq_len` symbols; every block sees one
//! channel draw. The transmitter maps one-hot messages `(B, L, 2^k)` to
//! `(B, L, 2n)` interleaved real/imaginary samples with unit mean energy per
//! complex use. The receiver sees the faded, noisy samples concatenated with
//! its channel knowledge tiled along the sequence and outputs class
//! probabilities.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::curve::{BerCurve, BerPoint, CurveMeta};
use crate::baseline::montecarlo::RECOMMENDED_MIN_ERRORS;
use crate::channel::{awgn, sample_rayleigh, NoiseSpec};
use crate::error::{Error, Result};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::schedule::{best_epoch, schedule_step, Decision, TrainSchedule};
use crate::nn::{
    activation, adam_update, cross_entropy, Activation, ActivationKind, AdamConfig, BatchNorm, Conv1d, Layer, Mode,
    OptimizerState, Param, PowerNorm, Real, RealArray, Sequential,
};
use crate::parallel::par_map;
use crate::pilot::{dft_reflection_matrix, resolve_known_links, CsiMode, PilotSchedule};
use crate::ris::{PhaseSource, RisNetInput};
use crate::rng::Streams;

pub const DEFAULT_SEQ_LEN: usize = 64;
pub const DEFAULT_WIDTH: usize = 256;
pub const DEFAULT_KERNEL: usize = 3;

/// Channel knowledge handed to the receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RxCsi {
    /// Real and imaginary part of the effective channel.
    Effective,
    /// The effective channel plus `[re c; im c; re h_d; im h_d]`.
    Full,
}

/// How received samples enter the receiver network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RxFront {
    /// `y` as received.
    Raw,
    /// `y / h_rx`, using the receiver's own channel knowledge.
    ZeroForcing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeArch {
    pub k: usize,
    pub n: usize,
    pub n_elements: usize,
    pub seq_len: usize,
    pub width: usize,
    pub kernel: usize,
    pub rx_csi: RxCsi,
    pub rx_front: RxFront,
}

impl AeArch {
    pub fn new(k: usize, n: usize, n_elements: usize) -> Self {
        Self {
            k,
            n,
            n_elements,
            seq_len: DEFAULT_SEQ_LEN,
            width: DEFAULT_WIDTH,
            kernel: DEFAULT_KERNEL,
            rx_csi: RxCsi::Effective,
            rx_front: RxFront::ZeroForcing,
        }
    }

    pub fn classes(&self) -> usize {
        1 << self.k
    }

    pub fn tx_features(&self) -> usize {
        2 * self.n
    }

    pub fn csi_features(&self) -> usize {
        match self.rx_csi {
            RxCsi::Effective => 2,
            RxCsi::Full => 2 + 2 * self.n_elements + 2,
        }
    }

    pub fn rx_features(&self) -> usize {
        self.tx_features() + self.csi_features()
    }

    pub fn code_rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.k) || self.n == 0 {
            return Err(Error::Config(format!("need 1 <= k <= 12 and n >= 1, got k={} n={}", self.k, self.n)));
        }
        if self.seq_len == 0 || self.width == 0 || self.kernel % 2 == 0 {
            return Err(Error::Config("seq_len and width must be positive, kernel odd".into()));
        }
        Ok(())
    }
}

/// Messages grouped in blocks of `seq_len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolBatch {
    k: usize,
    seq_len: usize,
    symbols: Vec<usize>,
}

impl SymbolBatch {
    pub fn new(k: usize, seq_len: usize, symbols: Vec<usize>) -> Result<Self> {
        if seq_len == 0 || symbols.len() % seq_len != 0 {
            return Err(Error::Dimension {
                axis: "symbols per block",
                expected: seq_len,
                actual: symbols.len() % seq_len.max(1),
            });
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >> k != 0) {
            return Err(Error::Config(format!("symbol {bad} needs more than {k} bits")));
        }
        Ok(Self { k, seq_len, symbols })
    }

    /// Uniform i.i.d. messages.
    pub fn random<R: Rng + ?Sized>(k: usize, seq_len: usize, blocks: usize, rng: &mut R) -> Self {
        let symbols = (0..blocks * seq_len).map(|_| rng.random_range(0..1usize << k)).collect();
        Self { k, seq_len, symbols }
    }

    /// Groups bits (most significant first) into messages.
    pub fn from_bits(bits: &[u8], k: usize, seq_len: usize) -> Result<Self> {
        if bits.len() % k != 0 {
            return Err(Error::BitLength {
                bits: bits.len(),
                bits_per_symbol: k,
            });
        }
        let symbols = bits.chunks_exact(k).map(|c| c.iter().fold(0, |a, &b| (a << 1) | (b & 1) as usize)).collect();
        Self::new(k, seq_len, symbols)
    }

    pub fn bits(&self) -> Vec<u8> {
        self.symbols.iter().flat_map(|&s| (0..self.k).rev().map(move |b| ((s >> b) & 1) as u8)).collect()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn blocks(&self) -> usize {
        self.symbols.len() / self.seq_len
    }

    pub fn onehot<T: Real>(&self) -> RealArray<T> {
        let c = 1 << self.k;
        let mut data = vec![T::zero(); self.symbols.len() * c];
        for (row, &s) in self.symbols.iter().enumerate() {
            data[row * c + s] = T::one();
        }
        RealArray::new(&[self.blocks(), self.seq_len, c], data).expect("one-hot shape matches")
    }

    pub fn select_blocks(&self, idx: &[usize]) -> SymbolBatch {
        let l = self.seq_len;
        Self {
            k: self.k,
            seq_len: l,
            symbols: idx.iter().flat_map(|&b| self.symbols[b * l..(b + 1) * l].iter().copied()).collect(),
        }
    }
}

/// Channel seen by one block and what the receiver knows about it.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLink {
    pub h_true: Complex64,
    pub h_rx: Complex64,
    /// Extra receiver features for [`RxCsi::Full`].
    pub extra: Vec<f64>,
}

impl BlockLink {
    /// Perfectly known fixed coefficient.
    pub fn fixed(h: Complex64) -> Self {
        Self {
            h_true: h,
            h_rx: h,
            extra: Vec::new(),
        }
    }
}

/// Where block channels come from.
#[derive(Clone, Copy, Debug)]
pub struct LinkSource<'a, S: Real> {
    pub phases: PhaseSource<'a, S>,
    pub csi: CsiMode,
    /// Pilot Eb/N0 minus data Eb/N0, in dB.
    pub pilot_offset_db: f64,
    /// `h = 1` for every block instead of Rayleigh draws.
    pub identity: bool,
}

impl<'a, S: Real> LinkSource<'a, S> {
    pub fn new(phases: PhaseSource<'a, S>, csi: CsiMode) -> Self {
        Self {
            phases,
            csi,
            pilot_offset_db: 0.0,
            identity: false,
        }
    }
}

/// Draws `count` block channels and resolves their phases and receiver CSI.
pub fn draw_links<S: Real, R: Rng + ?Sized>(
    arch: &AeArch,
    source: &LinkSource<'_, S>,
    sched: Option<&PilotSchedule>,
    spec: &NoiseSpec,
    count: usize,
    ch_rng: &mut R,
    pilot_rng: &mut R,
) -> Result<Vec<BlockLink>> {
    if source.identity {
        let mut link = BlockLink::fixed(Complex64::new(1.0, 0.0));
        if arch.rx_csi == RxCsi::Full {
            link.extra = vec![0.0; 2 * arch.n_elements + 2];
        }
        return Ok(vec![link; count]);
    }
    let chans: Vec<_> = (0..count).map(|_| sample_rayleigh(arch.n_elements, ch_rng)).collect();
    let pilot_spec = NoiseSpec::new(spec.eb_n0_db + source.pilot_offset_db, spec.code_rate);
    let links = resolve_known_links(&chans, source.csi, sched, &pilot_spec, &source.phases, pilot_rng)?;
    Ok(links
        .into_iter()
        .map(|l| BlockLink {
            h_true: l.state.h_true,
            h_rx: l.state.h_rx,
            extra: match arch.rx_csi {
                RxCsi::Effective => Vec::new(),
                RxCsi::Full => RisNetInput::from_channel(&l.known).features,
            },
        })
        .collect())
}

/// Per-example rescaling to unit mean energy per complex use.
pub fn power_normalize<T: Real>(x: &RealArray<T>) -> RealArray<T> {
    PowerNorm::compute(x)
}

/// Fails unless every example of `x` carries `L * n` energy, relative
/// tolerance 1e-9 (1e-4 in single precision).
pub fn check_power<T: Real>(x: &RealArray<T>) -> Result<()> {
    let per = x.len() / x.shape()[0].max(1);
    let target = per as f64 / 2.0;
    let tol = if T::BYTES == 8 { 1e-9 } else { 1e-4 };
    for (example, ex) in x.data().chunks_exact(per.max(1)).enumerate() {
        let energy: f64 = ex.iter().map(|v| v.f64() * v.f64()).sum();
        if energy > 0.0 && (energy / target - 1.0).abs() > tol {
            return Err(Error::PowerConstraint { example, energy, target });
        }
    }
    Ok(())
}

/// `y = h x + w` per complex use; `noise` is laid out block-major.
pub fn apply_block_channel<T: Real>(x: &RealArray<T>, links: &[BlockLink], noise: &[Complex64]) -> Result<RealArray<T>> {
    let blocks = x.shape()[0];
    if links.len() != blocks || noise.len() * 2 != x.len() {
        return Err(Error::Dimension {
            axis: "channel blocks",
            expected: blocks,
            actual: links.len(),
        });
    }
    let per = x.len() / blocks.max(1);
    let mut y = x.clone();
    for ((ex, link), w) in y.data_mut().chunks_exact_mut(per).zip(links).zip(noise.chunks_exact(per / 2)) {
        let (hr, hi) = (link.h_true.re, link.h_true.im);
        for (pair, w) in ex.chunks_exact_mut(2).zip(w) {
            let (xr, xi) = (pair[0].f64(), pair[1].f64());
            pair[0] = T::of(hr * xr - hi * xi + w.re);
            pair[1] = T::of(hr * xi + hi * xr + w.im);
        }
    }
    Ok(y)
}

/// `1 / h`, with `|h|^2` floored at 1e-24.
fn zf_gain(h: Complex64) -> Complex64 {
    h.conj() / h.norm_sqr().max(1e-24)
}

/// Transmitter and receiver networks.
#[derive(Clone, Debug)]
pub struct Autoencoder<T: Real = f64> {
    arch: AeArch,
    tx: Sequential<T>,
    rx: Sequential<T>,
}

fn conv_block<T: Real, R: Rng + ?Sized>(
    net: &mut Sequential<T>,
    name: &str,
    arch: &AeArch,
    cin: usize,
    cout: usize,
    act: Option<ActivationKind>,
    rng: &mut R,
) {
    net.push(format!("{name}.conv"), Layer::Conv1d(Conv1d::new(arch.kernel, cin, cout, rng)));
    net.push(format!("{name}.bn"), Layer::BatchNorm(BatchNorm::new(cout)));
    if let Some(kind) = act {
        net.push(format!("{name}.act"), Layer::Activation(Activation::new(kind)));
    }
}

impl<T: Real> Autoencoder<T> {
    pub fn new(arch: AeArch, streams: &Streams) -> Result<Self> {
        arch.validate()?;
        let w = arch.width;
        let elu = Some(ActivationKind::Elu);
        let mut rng = streams.rng("ae/init/tx");
        let mut tx = Sequential::new();
        conv_block(&mut tx, "tx1", &arch, arch.classes(), w, elu, &mut rng);
        conv_block(&mut tx, "tx2", &arch, w, w, elu, &mut rng);
        conv_block(&mut tx, "tx3", &arch, w, arch.tx_features(), None, &mut rng);
        tx.push("tx.power", Layer::PowerNorm(PowerNorm::new()));

        let mut rng = streams.rng("ae/init/rx");
        let mut rx = Sequential::new();
        conv_block(&mut rx, "rx1", &arch, arch.rx_features(), w, elu, &mut rng);
        conv_block(&mut rx, "rx2", &arch, w, w, elu, &mut rng);
        conv_block(&mut rx, "rx3", &arch, w, arch.classes(), None, &mut rng);
        Ok(Self { arch, tx, rx })
    }

    pub fn arch(&self) -> &AeArch {
        &self.arch
    }

    pub fn tx(&self) -> &Sequential<T> {
        &self.tx
    }

    pub fn rx(&self) -> &Sequential<T> {
        &self.rx
    }

    fn check_batch(&self, sym: &SymbolBatch) -> Result<()> {
        if sym.k != self.arch.k || sym.seq_len != self.arch.seq_len {
            return Err(Error::Dimension {
                axis: "symbol batch (k, seq_len)",
                expected: self.arch.k * 1000 + self.arch.seq_len,
                actual: sym.k * 1000 + sym.seq_len,
            });
        }
        Ok(())
    }

    /// Transmitter forward pass including power normalization.
    pub fn encode(&mut self, sym: &SymbolBatch, mode: Mode) -> Result<RealArray<T>> {
        self.check_batch(sym)?;
        let x = self.tx.forward(&sym.onehot(), mode)?;
        check_power(&x)?;
        Ok(x)
    }

    pub fn encode_infer(&self, sym: &SymbolBatch) -> Result<RealArray<T>> {
        self.check_batch(sym)?;
        let x = self.tx.infer(&sym.onehot())?;
        check_power(&x)?;
        Ok(x)
    }

    /// Concatenates received samples with the receiver's channel features.
    pub fn rx_input(&self, y: &RealArray<T>, links: &[BlockLink]) -> Result<RealArray<T>> {
        let (f, c) = (self.arch.tx_features(), self.arch.rx_features());
        let rows = y.len() / f;
        let l = self.arch.seq_len;
        let mut data = Vec::with_capacity(rows * c);
        for (r, yr) in y.data().chunks_exact(f).enumerate() {
            let link = &links[r / l];
            match self.arch.rx_front {
                RxFront::Raw => data.extend_from_slice(yr),
                RxFront::ZeroForcing => {
                    let g = zf_gain(link.h_rx);
                    for p in yr.chunks_exact(2) {
                        let v = Complex64::new(p[0].f64(), p[1].f64()) * g;
                        data.push(T::of(v.re));
                        data.push(T::of(v.im));
                    }
                }
            }
            data.push(T::of(link.h_rx.re));
            data.push(T::of(link.h_rx.im));
            data.extend(link.extra.iter().map(|&v| T::of(v)));
        }
        RealArray::new(&[rows / l, l, c], data)
    }

    /// Receiver logits to class probabilities.
    pub fn decode(&mut self, rx_in: &RealArray<T>, mode: Mode) -> Result<RealArray<T>> {
        Ok(activation(&self.rx.forward(rx_in, mode)?, ActivationKind::Softmax))
    }

    pub fn decode_infer(&self, rx_in: &RealArray<T>) -> Result<RealArray<T>> {
        Ok(activation(&self.rx.infer(rx_in)?, ActivationKind::Softmax))
    }

    /// Training-mode forward and backward pass; gradients accumulate into
    /// every parameter. Returns the mean cross-entropy.
    pub fn loss_and_backward(&mut self, sym: &SymbolBatch, links: &[BlockLink], noise: &[Complex64]) -> Result<f64> {
        let x = self.encode(sym, Mode::Train)?;
        let y = apply_block_channel(&x, links, noise)?;
        let probs = self.decode(&self.rx_input(&y, links)?, Mode::Train)?;
        let (loss, dlogits) = cross_entropy(&probs, &sym.onehot())?;
        let drx = self.rx.backward(&dlogits);
        let (f, c) = (self.arch.tx_features(), self.arch.rx_features());
        let l = self.arch.seq_len;
        let mut dx = RealArray::zeros(x.shape());
        for (r, (d, g)) in dx.data_mut().chunks_exact_mut(f).zip(drx.data().chunks_exact(c)).enumerate() {
            let link = &links[r / l];
            let h = match self.arch.rx_front {
                RxFront::Raw => link.h_true,
                RxFront::ZeroForcing => link.h_true * zf_gain(link.h_rx),
            };
            for (dp, gp) in d.chunks_exact_mut(2).zip(g[..f].chunks_exact(2)) {
                let (gr, gi) = (gp[0].f64(), gp[1].f64());
                dp[0] = T::of(h.re * gr + h.im * gi);
                dp[1] = T::of(h.re * gi - h.im * gr);
            }
        }
        self.tx.backward(&dx);
        Ok(loss)
    }

    /// Inference-mode probabilities `(B, L, 2^k)`.
    pub fn infer_probs(&self, sym: &SymbolBatch, links: &[BlockLink], noise: &[Complex64]) -> Result<RealArray<T>> {
        let x = self.encode_infer(sym)?;
        let y = apply_block_channel(&x, links, noise)?;
        self.decode_infer(&self.rx_input(&y, links)?)
    }

    /// Most probable message per symbol; ties go to the lowest index.
    pub fn detect(&self, sym: &SymbolBatch, links: &[BlockLink], noise: &[Complex64]) -> Result<Vec<usize>> {
        let probs = self.infer_probs(sym, links, noise)?;
        Ok(probs
            .data()
            .chunks_exact(self.arch.classes())
            .map(|row| {
                let mut best = 0;
                for (i, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut p = self.tx.params_mut();
        p.extend(self.rx.params_mut());
        p
    }

    pub fn zero_grad(&mut self) {
        self.tx.zero_grad();
        self.rx.zero_grad();
    }

    pub fn num_params(&self) -> usize {
        self.tx.num_params() + self.rx.num_params()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.tx.flat_params();
        p.extend(self.rx.flat_params());
        p
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        let mut g = self.tx.flat_grads();
        g.extend(self.rx.flat_grads());
        g
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let n = self.tx.num_params();
        self.tx.set_flat_params(&flat[..n]);
        self.rx.set_flat_params(&flat[n..]);
    }

    pub fn kink_signature(&self) -> u64 {
        self.tx.kink_signature() ^ self.rx.kink_signature().rotate_left(1)
    }

    pub fn to_checkpoint(&self, seed: u64) -> Result<Checkpoint> {
        let mut ckpt = Checkpoint::new(&["tx", "rx"], seed);
        ckpt.set_meta("arch", self.arch)?;
        self.tx.export("tx", &mut ckpt);
        self.rx.export("rx", &mut ckpt);
        Ok(ckpt)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if !(ckpt.has_tag("tx") && ckpt.has_tag("rx")) {
            return Err(Error::Checkpoint("not an autoencoder checkpoint".into()));
        }
        let arch: AeArch = ckpt.meta("arch")?;
        let mut model = Self::new(arch, &Streams::new(0))?;
        model.tx.import("tx", ckpt)?;
        model.rx.import("rx", ckpt)?;
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k: usize,
    pub n: usize,
    pub n_elements: usize,
    pub seq_len: usize,
    pub width: usize,
    pub kernel: usize,
    pub rx_csi: RxCsi,
    pub rx_front: RxFront,
    pub train_symbols: usize,
    pub val_fraction: f64,
    pub test_symbols: usize,
    /// Symbols per training step; a multiple of `seq_len`.
    pub batch_train: usize,
    /// Symbols per evaluation step; a multiple of `seq_len`.
    pub batch_test: usize,
    pub train_eb_n0_db: f64,
    pub train_csi: CsiMode,
    pub identity_channel: bool,
    pub noiseless: bool,
    pub schedule: TrainSchedule,
    pub adam: AdamConfig,
}

impl TrainConfig {
    /// 1.28M training symbols (20% validation), 3.2M test symbols, batches
    /// of 128/64, 150 epochs at a fixed 16 dB Eb/N0.
    pub fn full(k: usize, n_elements: usize) -> Self {
        Self {
            k,
            n: 1,
            n_elements,
            seq_len: DEFAULT_SEQ_LEN,
            width: DEFAULT_WIDTH,
            kernel: DEFAULT_KERNEL,
            rx_csi: RxCsi::Effective,
            rx_front: RxFront::ZeroForcing,
            train_symbols: 1_280_000,
            val_fraction: 0.2,
            test_symbols: 3_200_000,
            batch_train: 128,
            batch_test: 64,
            train_eb_n0_db: 16.0,
            train_csi: CsiMode::Perfect,
            identity_channel: false,
            noiseless: false,
            schedule: TrainSchedule::autoencoder(),
            adam: AdamConfig::default(),
        }
    }

    /// Desk-scale preset: 100k training symbols, 30 epochs, 200k test symbols.
    pub fn desk(k: usize, n_elements: usize) -> Self {
        Self {
            train_symbols: 100_000,
            test_symbols: 200_000,
            schedule: TrainSchedule {
                max_epochs: 30,
                ..TrainSchedule::autoencoder()
            },
            ..Self::full(k, n_elements)
        }
    }

    pub fn arch(&self) -> AeArch {
        AeArch {
            k: self.k,
            n: self.n,
            n_elements: self.n_elements,
            seq_len: self.seq_len,
            width: self.width,
            kernel: self.kernel,
            rx_csi: self.rx_csi,
            rx_front: self.rx_front,
        }
    }

    pub fn total_blocks(&self) -> usize {
        self.train_symbols / self.seq_len
    }

    pub fn val_blocks(&self) -> usize {
        (self.total_blocks() as f64 * self.val_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.arch().validate()?;
        self.schedule.validate()?;
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config(format!("val_fraction {} must lie in (0, 1)", self.val_fraction)));
        }
        if self.batch_train == 0 || self.batch_train % self.seq_len != 0 || self.batch_test == 0 || self.batch_test % self.seq_len != 0 {
            return Err(Error::Config(format!(
                "batch sizes must be positive multiples of seq_len {}",
                self.seq_len
            )));
        }
        let train_blocks = self.total_blocks().saturating_sub(self.val_blocks());
        if self.val_blocks() == 0 || train_blocks < self.batch_train / self.seq_len {
            return Err(Error::Config("train_symbols too small for the batch size and validation split".into()));
        }
        if !self.train_eb_n0_db.is_finite() {
            return Err(Error::Config("train_eb_n0_db must be finite".into()));
        }
        if self.train_csi == CsiMode::Estimated && (self.n_elements == 0 || self.identity_channel) {
            return Err(Error::Config("estimated CSI needs RIS elements and a fading channel".into()));
        }
        Ok(())
    }

    fn noise_spec(&self) -> NoiseSpec {
        let rate = self.k as f64 / self.n as f64;
        if self.noiseless {
            NoiseSpec::noiseless(rate)
        } else {
            NoiseSpec::new(self.train_eb_n0_db, rate)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T: Real> {
    /// Weights from the epoch with the best validation loss.
    pub model: Autoencoder<T>,
    pub history: Vec<AeEpoch>,
    /// 1-based.
    pub best_epoch: usize,
}

struct Split {
    symbols: SymbolBatch,
    links: Vec<BlockLink>,
    noise: Vec<Complex64>,
}

fn draw_noise<R: Rng + ?Sized>(spec: &NoiseSpec, len: usize, rng: &mut R) -> Vec<Complex64> {
    if spec.sigma_sq == 0.0 {
        vec![Complex64::new(0.0, 0.0); len]
    } else {
        awgn(len, spec, rng)
    }
}

fn mean_loss<T: Real>(model: &Autoencoder<T>, split: &Split, chunk: usize) -> Result<f64> {
    let l = model.arch.seq_len;
    let per = l * model.arch.n;
    let mut total = 0.0;
    let blocks = split.symbols.blocks();
    for start in (0..blocks).step_by(chunk) {
        let idx: Vec<usize> = (start..(start + chunk).min(blocks)).collect();
        let sym = split.symbols.select_blocks(&idx);
        let probs = model.infer_probs(&sym, &split.links[idx[0]..=idx[idx.len() - 1]], &split.noise[start * per..(start + idx.len()) * per])?;
        total += cross_entropy(&probs, &sym.onehot())?.0 * idx.len() as f64;
    }
    Ok(total / blocks as f64)
}

/// Trains transmitter and receiver jointly through the channel with the
/// RIS phases supplied by `phases` (held fixed). Each epoch draws fresh
/// channels and noise; the validation split is drawn once.
pub fn train_e2e<T: Real, S: Real>(cfg: &TrainConfig, phases: &PhaseSource<'_, S>, streams: &Streams) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let arch = cfg.arch();
    let spec = cfg.noise_spec();
    let l = cfg.seq_len;
    let source = LinkSource {
        identity: cfg.identity_channel,
        ..LinkSource::new(*phases, cfg.train_csi)
    };
    let sched = (cfg.train_csi == CsiMode::Estimated).then(|| dft_reflection_matrix(cfg.n_elements));
    let val_blocks = cfg.val_blocks();
    let train_blocks = cfg.total_blocks() - val_blocks;
    let per_batch = cfg.batch_train / l;

    let val = {
        let symbols = SymbolBatch::random(cfg.k, l, val_blocks, &mut streams.rng("ae/val/symbols"));
        let (mut ch, mut pilot) = (streams.rng("ae/val/channel"), streams.rng("ae/val/pilot"));
        let links = draw_links(&arch, &source, sched.as_ref(), &spec, val_blocks, &mut ch, &mut pilot)?;
        let noise = draw_noise(&spec, val_blocks * l * cfg.n, &mut streams.rng("ae/val/noise"));
        Split { symbols, links, noise }
    };
    let train_symbols = SymbolBatch::random(cfg.k, l, train_blocks, &mut streams.rng("ae/train/symbols"));

    let mut model = Autoencoder::<T>::new(arch, streams)?;
    let mut opt = OptimizerState::<T>::new(cfg.adam);
    let mut order: Vec<usize> = (0..train_blocks).collect();
    let mut history = Vec::new();
    let mut val_losses = Vec::new();
    let mut best = model.clone();

    for epoch in 0..cfg.schedule.max_epochs {
        let es = streams.child(&format!("ae/e{epoch}"));
        order.shuffle(&mut es.rng("shuffle"));
        let mut train_loss = 0.0;
        let steps = train_blocks / per_batch;
        for (b, idx) in order.chunks_exact(per_batch).enumerate() {
            let bs = es.child(&format!("b{b}"));
            let sym = train_symbols.select_blocks(idx);
            let links = draw_links(&arch, &source, sched.as_ref(), &spec, per_batch, &mut bs.rng("channel"), &mut bs.rng("pilot"))?;
            let noise = draw_noise(&spec, per_batch * l * cfg.n, &mut bs.rng("noise"));
            model.zero_grad();
            let loss = model.loss_and_backward(&sym, &links, &noise)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: b, loss });
            }
            adam_update(&mut model.params_mut(), &mut opt)?;
            train_loss += loss;
        }
        train_loss /= steps as f64;
        let val_loss = mean_loss(&model, &val, 64)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: steps,
                loss: val_loss,
            });
        }
        history.push(AeEpoch {
            epoch: epoch + 1,
            train_loss,
            val_loss,
            lr: opt.lr,
        });
        val_losses.push(val_loss);
        if best_epoch(&val_losses, cfg.schedule.min_delta) == epoch {
            best = model.clone();
        }
        let step = schedule_step(&cfg.schedule, &val_losses, opt.lr);
        opt.lr = step.lr;
        if step.decision == Decision::Stop {
            break;
        }
    }
    Ok(TrainOutcome {
        model: best,
        best_epoch: best_epoch(&val_losses, cfg.schedule.min_delta) + 1,
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub eb_n0_db: Vec<f64>,
    pub num_symbols: usize,
    /// Blocks per inference pass.
    pub batch_blocks: usize,
    pub csi: CsiMode,
    pub pilot_offset_db: f64,
    /// Stop a point early once this many bit errors are counted.
    pub stop_after_errors: Option<u64>,
    pub identity_channel: bool,
    pub noiseless: bool,
    pub threads: usize,
}

impl EvalConfig {
    pub fn new(eb_n0_db: Vec<f64>, num_symbols: usize, csi: CsiMode) -> Self {
        Self {
            eb_n0_db,
            num_symbols,
            batch_blocks: 64,
            csi,
            pilot_offset_db: 0.0,
            stop_after_errors: None,
            identity_channel: false,
            noiseless: false,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eb_n0_db.is_empty() || self.eb_n0_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("the Eb/N0 grid must be non-empty and finite".into()));
        }
        if self.num_symbols == 0 || self.batch_blocks == 0 {
            return Err(Error::Config("num_symbols and batch_blocks must be positive".into()));
        }
        Ok(())
    }
}

fn eval_point<T: Real, S: Real>(
    model: &Autoencoder<T>,
    source: &LinkSource<'_, S>,
    cfg: &EvalConfig,
    eb_n0_db: f64,
    streams: &Streams,
) -> Result<BerPoint> {
    let arch = model.arch();
    let l = arch.seq_len;
    let rate = arch.code_rate();
    let spec = if cfg.noiseless { NoiseSpec::noiseless(rate) } else { NoiseSpec::new(eb_n0_db, rate) };
    let sched = (cfg.csi == CsiMode::Estimated).then(|| dft_reflection_matrix(arch.n_elements));
    let (mut sym_rng, mut ch_rng, mut pilot_rng, mut noise_rng) =
        (streams.rng("symbols"), streams.rng("channel"), streams.rng("pilot"), streams.rng("noise"));
    let total_blocks = cfg.num_symbols.div_ceil(l);
    let mut done = 0;
    let (mut errors, mut bits) = (0u64, 0u64);
    while done < total_blocks {
        if cfg.stop_after_errors.is_some_and(|m| errors >= m) {
            break;
        }
        let blocks = cfg.batch_blocks.min(total_blocks - done);
        let sym = SymbolBatch::random(arch.k, l, blocks, &mut sym_rng);
        let links = draw_links(arch, source, sched.as_ref(), &spec, blocks, &mut ch_rng, &mut pilot_rng)?;
        let noise = draw_noise(&spec, blocks * l * arch.n, &mut noise_rng);
        let detected = model.detect(&sym, &links, &noise)?;
        errors += sym.symbols().iter().zip(&detected).map(|(a, b)| (a ^ b).count_ones() as u64).sum::<u64>();
        bits += (blocks * l * arch.k) as u64;
        done += blocks;
    }
    Ok(BerPoint {
        eb_n0_db,
        bit_errors: errors,
        total_bits: bits,
    })
}

/// BER of a trained model over a sweep. Each point draws messages,
/// channels, pilot noise and data noise from its own streams, so perfect
/// and estimated CSI runs see identical realizations.
pub fn evaluate_ber<T: Real, S: Real>(
    model: &Autoencoder<T>,
    phases: &PhaseSource<'_, S>,
    cfg: &EvalConfig,
    streams: &Streams,
) -> Result<BerCurve> {
    cfg.validate()?;
    if cfg.csi == CsiMode::Estimated && model.arch().n_elements == 0 {
        return Err(Error::Config("estimated CSI needs RIS elements".into()));
    }
    let source = LinkSource {
        pilot_offset_db: cfg.pilot_offset_db,
        identity: cfg.identity_channel,
        ..LinkSource::new(*phases, cfg.csi)
    };
    let points = par_map(&cfg.eb_n0_db, cfg.threads, |i, &eb| {
        eval_point(model, &source, cfg, eb, &streams.child(&format!("eval/p{i}")))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let warnings = points
        .iter()
        .filter(|p| p.bit_errors < RECOMMENDED_MIN_ERRORS)
        .map(|p| {
            format!(
                "{} dB: {} errors in {} bits is too few for a tight confidence interval",
                p.eb_n0_db, p.bit_errors, p.total_bits
            )
        })
        .collect();
    let meta = CurveMeta {
        label: format!("ae-k{}-n{}", model.arch().k, model.arch().n),
        n_elements: model.arch().n_elements,
        csi_mode: cfg.csi.name().to_string(),
        seed: streams.master_seed(),
        warnings,
    };
    BerCurve::new(points, meta)
}
