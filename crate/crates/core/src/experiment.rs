//! Config-driven experiment runs that write curves, loss histories,
//! checkpoints and a JSON run manifest into one output directory.
//!
//! The configuration is a single flat TOML table. Keys missing from a file
//! fall back to either the full-scale or the desk-scale preset, so a config
//! only needs to state what differs from the preset it runs against.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{evaluate_ber, train_e2e, AeEpoch, Autoencoder, EvalConfig, RxCsi, RxFront, TrainConfig};
use crate::baseline::curve::fmt_f64;
use crate::baseline::{compare_curves, monte_carlo_ber, BerCurve, CurveMeta, LinkKind, McConfig, ModScheme};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, Checkpoint, Real, TrainSchedule};
use crate::pilot::{dft_reflection_matrix, CsiMode};
use crate::ris::{pretrain_ris_net, PhaseSource, RisEpoch, RisNet, RisPretrainConfig};
use crate::rng::Streams;

/// The only config layout this build reads.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AePerfect,
    AeEstimated,
    BaselineMc,
    RisPretrain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseChoice {
    /// The pre-trained phase network (loaded or trained in the same run).
    Learned,
    ClosedForm,
    /// All coefficients equal to one.
    None,
}

/// What a run does with its config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    PretrainRis,
    /// Train an autoencoder, then evaluate it.
    Train,
    /// Evaluate a saved autoencoder.
    Eval,
    Baseline,
}

impl Command {
    pub fn default_kind(self) -> ExperimentKind {
        match self {
            Command::PretrainRis => ExperimentKind::RisPretrain,
            Command::Train | Command::Eval => ExperimentKind::AePerfect,
            Command::Baseline => ExperimentKind::BaselineMc,
        }
    }

    pub fn accepts(self, kind: ExperimentKind) -> bool {
        match self {
            Command::PretrainRis => kind == ExperimentKind::RisPretrain,
            Command::Train | Command::Eval => matches!(kind, ExperimentKind::AePerfect | ExperimentKind::AeEstimated),
            Command::Baseline => kind == ExperimentKind::BaselineMc,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Command::PretrainRis => "pretrain-ris",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Baseline => "baseline",
        }
    }
}

/// Flat experiment configuration. `ris_*` keys drive phase-network
/// pre-training; unprefixed training keys drive the autoencoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub config_version: u32,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub precision: Precision,
    /// Workers for Eb/N0 sweeps.
    pub threads: usize,

    pub k: usize,
    pub n: usize,
    pub n_elements: usize,
    pub phase_source: PhaseChoice,
    /// Checkpoint stem of a pre-trained phase network; pre-trained in the
    /// run when absent and `phase_source = "learned"`.
    pub ris_checkpoint: Option<PathBuf>,

    pub ris_dataset: usize,
    pub ris_val_fraction: f64,
    pub ris_batch: usize,
    pub ris_test_channels: usize,
    pub ris_max_epochs: usize,
    pub ris_early_stop_patience: usize,
    pub ris_lr_plateau_patience: usize,
    pub ris_lr_factor: f64,
    pub ris_learning_rate: f64,

    pub seq_len: usize,
    pub width: usize,
    pub kernel: usize,
    pub rx_csi: RxCsi,
    pub rx_front: RxFront,
    pub train_symbols: usize,
    pub val_fraction: f64,
    pub batch_train: usize,
    pub batch_test: usize,
    pub train_eb_n0_db: f64,
    pub train_csi: CsiMode,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub lr_plateau_patience: usize,
    pub lr_factor: f64,
    pub learning_rate: f64,
    /// Checkpoint stem of a trained autoencoder (evaluation only).
    pub ae_checkpoint: Option<PathBuf>,

    /// Empty selects [`default_grid`].
    pub eb_n0_db: Vec<f64>,
    pub test_symbols: usize,
    pub pilot_offset_db: f64,
    pub stop_after_errors: Option<u64>,

    /// Defaults to the scheme carrying `k` bits per symbol.
    pub modulation: Option<ModScheme>,
    pub link: LinkKind,
    pub baseline_csi: CsiMode,
    pub min_errors: u64,
    pub max_bits: u64,
    /// Defaults to `seq_len`.
    pub symbols_per_block: Option<usize>,
    /// Run the matching uncoded baseline next to autoencoder curves.
    pub compare_baseline: bool,
}

/// Eb/N0 grid (dB) centred on where uncoded BPSK with optimal phases
/// crosses a BER of 1e-3 for `n_elements` elements: 2 dB steps from 14 dB
/// below to 6 dB above `10 - 20 log10(N + 1)`.
pub fn default_grid(n_elements: usize) -> Vec<f64> {
    let centre = (10.0 - 20.0 * ((n_elements + 1) as f64).log10()).round();
    (0..=10).map(|i| centre - 14.0 + 2.0 * i as f64).collect()
}

impl ExperimentConfig {
    /// Full-scale defaults for `kind`.
    pub fn full(kind: ExperimentKind) -> Self {
        let ris = RisPretrainConfig::full(16);
        let ae = TrainConfig::full(1, 16);
        let mc = McConfig::new(ModScheme::Bpsk, LinkKind::Rayleigh, 16, Vec::new());
        Self {
            config_version: CONFIG_VERSION,
            kind,
            seed: 1,
            precision: Precision::F32,
            threads: 1,
            k: ae.k,
            n: ae.n,
            n_elements: ae.n_elements,
            phase_source: PhaseChoice::Learned,
            ris_checkpoint: None,
            ris_dataset: ris.dataset,
            ris_val_fraction: ris.val_fraction,
            ris_batch: ris.batch,
            ris_test_channels: ris.test_channels,
            ris_max_epochs: ris.schedule.max_epochs,
            ris_early_stop_patience: ris.schedule.early_stop_patience,
            ris_lr_plateau_patience: ris.schedule.lr_plateau_patience,
            ris_lr_factor: ris.schedule.lr_factor,
            ris_learning_rate: ris.adam.learning_rate,
            seq_len: ae.seq_len,
            width: ae.width,
            kernel: ae.kernel,
            rx_csi: ae.rx_csi,
            rx_front: ae.rx_front,
            train_symbols: ae.train_symbols,
            val_fraction: ae.val_fraction,
            batch_train: ae.batch_train,
            batch_test: ae.batch_test,
            train_eb_n0_db: ae.train_eb_n0_db,
            train_csi: ae.train_csi,
            max_epochs: ae.schedule.max_epochs,
            early_stop_patience: ae.schedule.early_stop_patience,
            lr_plateau_patience: ae.schedule.lr_plateau_patience,
            lr_factor: ae.schedule.lr_factor,
            learning_rate: ae.adam.learning_rate,
            ae_checkpoint: None,
            eb_n0_db: Vec::new(),
            test_symbols: ae.test_symbols,
            pilot_offset_db: 0.0,
            stop_after_errors: None,
            modulation: None,
            link: mc.link,
            baseline_csi: CsiMode::Perfect,
            min_errors: mc.min_errors,
            max_bits: mc.max_bits,
            symbols_per_block: None,
            compare_baseline: true,
        }
    }

    /// Desk-scale defaults: smaller datasets, fewer epochs, and a per-point
    /// bit budget that finishes on a laptop.
    pub fn desk(kind: ExperimentKind) -> Self {
        let ris = RisPretrainConfig::desk(16);
        let ae = TrainConfig::desk(1, 16);
        Self {
            ris_dataset: ris.dataset,
            ris_test_channels: ris.test_channels,
            ris_max_epochs: ris.schedule.max_epochs,
            train_symbols: ae.train_symbols,
            test_symbols: ae.test_symbols,
            max_epochs: ae.schedule.max_epochs,
            max_bits: 10_000_000,
            ..Self::full(kind)
        }
    }

    /// Parses a TOML document over the chosen preset. The document must
    /// carry `config_version`; unknown keys are rejected.
    pub fn from_toml_str(text: &str, default_kind: ExperimentKind, desk_scale: bool) -> Result<Self> {
        let overrides: toml::Table = text.parse().map_err(|e| Error::Config(format!("TOML: {e}")))?;
        match overrides.get("config_version") {
            None => return Err(Error::Config("missing config_version".into())),
            Some(toml::Value::Integer(v)) if *v == CONFIG_VERSION as i64 => {}
            Some(v) => {
                return Err(Error::Config(format!(
                    "config_version {v} is not supported (expected {CONFIG_VERSION})"
                )))
            }
        }
        let kind = match overrides.get("kind") {
            Some(v) => v.clone().try_into().map_err(|e| Error::Config(format!("kind: {e}")))?,
            None => default_kind,
        };
        let preset = if desk_scale { Self::desk(kind) } else { Self::full(kind) };
        let mut merged = match toml::Value::try_from(&preset).map_err(|e| Error::Config(e.to_string()))? {
            toml::Value::Table(t) => t,
            _ => unreachable!("a struct serializes to a table"),
        };
        merged.extend(overrides);
        let cfg: Self = toml::Value::Table(merged).try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path, default_kind: ExperimentKind, desk_scale: bool) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, default_kind, desk_scale)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.eb_n0_db.is_empty() {
            default_grid(self.n_elements)
        } else {
            self.eb_n0_db.clone()
        }
    }

    pub fn modulation(&self) -> Option<ModScheme> {
        self.modulation.or_else(|| ModScheme::ALL.into_iter().find(|m| m.k() == self.k))
    }

    pub fn ris_pretrain_config(&self) -> RisPretrainConfig {
        RisPretrainConfig {
            n_elements: self.n_elements,
            dataset: self.ris_dataset,
            val_fraction: self.ris_val_fraction,
            batch: self.ris_batch,
            test_channels: self.ris_test_channels,
            schedule: TrainSchedule {
                max_epochs: self.ris_max_epochs,
                early_stop_patience: self.ris_early_stop_patience,
                lr_plateau_patience: self.ris_lr_plateau_patience,
                lr_factor: self.ris_lr_factor,
                ..TrainSchedule::ris_pretrain()
            },
            adam: AdamConfig {
                learning_rate: self.ris_learning_rate,
                ..AdamConfig::default()
            },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            k: self.k,
            n: self.n,
            n_elements: self.n_elements,
            seq_len: self.seq_len,
            width: self.width,
            kernel: self.kernel,
            rx_csi: self.rx_csi,
            rx_front: self.rx_front,
            train_symbols: self.train_symbols,
            val_fraction: self.val_fraction,
            test_symbols: self.test_symbols,
            batch_train: self.batch_train,
            batch_test: self.batch_test,
            train_eb_n0_db: self.train_eb_n0_db,
            train_csi: self.train_csi,
            identity_channel: false,
            noiseless: false,
            schedule: TrainSchedule {
                max_epochs: self.max_epochs,
                early_stop_patience: self.early_stop_patience,
                lr_plateau_patience: self.lr_plateau_patience,
                lr_factor: self.lr_factor,
                ..TrainSchedule::autoencoder()
            },
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
        }
    }

    pub fn eval_config(&self, csi: CsiMode) -> EvalConfig {
        EvalConfig {
            batch_blocks: (self.batch_test / self.seq_len).max(1),
            pilot_offset_db: self.pilot_offset_db,
            stop_after_errors: self.stop_after_errors,
            threads: self.threads,
            ..EvalConfig::new(self.grid(), self.test_symbols, csi)
        }
    }

    pub fn mc_config(&self, csi: CsiMode) -> Result<McConfig> {
        let scheme = self
            .modulation()
            .ok_or_else(|| Error::Config(format!("no modulation carries k = {} bits per symbol", self.k)))?;
        let n_elements = if self.link == LinkKind::Awgn { 0 } else { self.n_elements };
        Ok(McConfig {
            min_errors: self.min_errors,
            max_bits: self.max_bits,
            symbols_per_block: self.symbols_per_block.unwrap_or(self.seq_len),
            csi,
            threads: self.threads,
            ..McConfig::new(scheme, self.link, n_elements, self.grid())
        })
    }

    /// Checks every sub-config this kind will use, before any compute.
    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!("config_version must be {CONFIG_VERSION}")));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        let learned = self.phase_source == PhaseChoice::Learned;
        let needs_ris_training = learned && self.ris_checkpoint.is_none() && self.n_elements > 0;
        if self.kind == ExperimentKind::RisPretrain || needs_ris_training {
            self.ris_pretrain_config().validate()?;
        }
        match self.kind {
            ExperimentKind::RisPretrain => {}
            ExperimentKind::AePerfect | ExperimentKind::AeEstimated => {
                self.train_config().validate()?;
                self.eval_config(CsiMode::Perfect).validate()?;
                if self.kind == ExperimentKind::AeEstimated && self.n_elements == 0 {
                    return Err(Error::Config("estimated CSI needs RIS elements".into()));
                }
                if self.compare_baseline && self.n == 1 {
                    self.mc_config(CsiMode::Perfect)?.validate()?;
                }
            }
            ExperimentKind::BaselineMc => self.mc_config(self.baseline_csi)?.validate()?,
        }
        Ok(())
    }
}

/// Written as `manifest.json` whether the run succeeds or not.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub library_version: String,
    pub command: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    /// True when the run stopped early; `artifacts` lists what was written.
    pub partial: bool,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub config: ExperimentConfig,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub curves: Vec<CurveMeta>,
    pub ris_efficiency: Option<f64>,
    pub best_epoch: Option<usize>,
    pub crossings: Vec<(String, f64)>,
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    streams: Streams,
    manifest: RunManifest,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.artifacts.push(name.to_string());
        self.out.join(name)
    }

    fn save_checkpoint(&mut self, ckpt: &Checkpoint, stem: &str) -> Result<PathBuf> {
        let path = self.out.join(stem);
        ckpt.save(&path)?;
        self.manifest.artifacts.push(format!("{stem}.json"));
        self.manifest.artifacts.push(format!("{stem}.bin"));
        Ok(path)
    }

    fn save_curve(&mut self, curve: &BerCurve, name: &str) -> Result<()> {
        let path = self.path(name);
        curve.write_csv(&path)?;
        self.manifest.curves.push(curve.meta.clone());
        Ok(())
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_ris_history(path: &Path, h: &[RisEpoch]) -> Result<()> {
    write_rows(
        path,
        &["epoch", "train_loss", "val_loss", "val_efficiency", "lr"],
        h.iter().map(|e| {
            vec![
                e.epoch.to_string(),
                fmt_f64(e.train_loss),
                fmt_f64(e.val_loss),
                fmt_f64(e.val_efficiency),
                fmt_f64(e.lr),
            ]
        }),
    )
}

fn write_ae_history(path: &Path, h: &[AeEpoch]) -> Result<()> {
    write_rows(
        path,
        &["epoch", "train_loss", "val_loss", "lr"],
        h.iter()
            .map(|e| vec![e.epoch.to_string(), fmt_f64(e.train_loss), fmt_f64(e.val_loss), fmt_f64(e.lr)]),
    )
}

fn checkpoint_dtype(ckpt: &Checkpoint) -> Option<Precision> {
    match ckpt.manifest.tensors.first()?.dtype.as_str() {
        "f32" => Some(Precision::F32),
        "f64" => Some(Precision::F64),
        _ => None,
    }
}

/// Loads, or pre-trains and saves, the phase network when the config asks
/// for learned phases.
fn ris_net<T: Real>(run: &mut Run<'_>) -> Result<Option<RisNet<T>>> {
    let cfg = run.cfg;
    if cfg.phase_source != PhaseChoice::Learned || cfg.n_elements == 0 {
        return Ok(None);
    }
    let net = match &cfg.ris_checkpoint {
        Some(stem) => RisNet::<T>::from_checkpoint(&Checkpoint::load(stem)?)?,
        None => {
            let out = pretrain_ris_net::<T>(&cfg.ris_pretrain_config(), &run.streams)?;
            let hist = run.path("ris_history.csv");
            write_ris_history(&hist, &out.history)?;
            run.save_checkpoint(&out.net.to_checkpoint(cfg.seed)?, "ris")?;
            run.manifest.ris_efficiency = Some(out.efficiency);
            out.net
        }
    };
    if net.n_elements() != cfg.n_elements {
        return Err(Error::Config(format!(
            "phase network has {} elements, config has {}",
            net.n_elements(),
            cfg.n_elements
        )));
    }
    Ok(Some(net))
}

fn phase_source<T: Real>(choice: PhaseChoice, net: Option<&RisNet<T>>) -> PhaseSource<'_, T> {
    match (choice, net) {
        (PhaseChoice::Learned, Some(n)) => PhaseSource::Learned(n),
        (PhaseChoice::None, _) => PhaseSource::Unoptimized,
        _ => PhaseSource::ClosedForm,
    }
}

fn ris_checkpoint_ref(run: &Run<'_>) -> Option<String> {
    match &run.cfg.ris_checkpoint {
        Some(p) => Some(p.display().to_string()),
        None => run.manifest.artifacts.contains(&"ris.json".to_string()).then(|| "ris".into()),
    }
}

fn evaluate_all<T: Real>(run: &mut Run<'_>, model: &Autoencoder<T>, net: Option<&RisNet<T>>) -> Result<()> {
    let cfg = run.cfg;
    let phases = phase_source(cfg.phase_source, net);
    let modes: &[CsiMode] = match cfg.kind {
        ExperimentKind::AeEstimated => &[CsiMode::Perfect, CsiMode::Estimated],
        _ => &[CsiMode::Perfect],
    };
    let mut curves = Vec::new();
    if cfg.compare_baseline && cfg.n == 1 {
        for &csi in modes {
            let curve = monte_carlo_ber(&cfg.mc_config(csi)?, &PhaseSource::<T>::ClosedForm, &run.streams)?;
            run.save_curve(&curve, &format!("ber_baseline_{}.csv", csi.name()))?;
            curves.push(curve);
        }
    }
    if cfg.kind == ExperimentKind::AeEstimated {
        let path = run.path("pilot_schedule.csv");
        dft_reflection_matrix(cfg.n_elements).write_csv(&path)?;
    }
    for &csi in modes {
        let mut curve = evaluate_ber(model, &phases, &cfg.eval_config(csi), &run.streams)?;
        curve.meta.label = format!("{}-{}", curve.meta.label, csi.name());
        run.save_curve(&curve, &format!("ber_ae_{}.csv", csi.name()))?;
        curves.push(curve);
    }
    if curves.len() > 1 {
        let report = compare_curves(&curves)?;
        let path = run.path("comparison.csv");
        report.write_csv(&path)?;
        run.manifest.crossings = report.crossings;
    }
    Ok(())
}

fn execute<T: Real>(run: &mut Run<'_>, command: Command, ae: Option<&Checkpoint>) -> Result<()> {
    let cfg = run.cfg;
    match command {
        Command::PretrainRis => {
            let out = pretrain_ris_net::<T>(&cfg.ris_pretrain_config(), &run.streams)?;
            let hist = run.path("ris_history.csv");
            write_ris_history(&hist, &out.history)?;
            run.save_checkpoint(&out.net.to_checkpoint(cfg.seed)?, "ris")?;
            run.manifest.ris_efficiency = Some(out.efficiency);
        }
        Command::Baseline => {
            let net = ris_net::<T>(run)?;
            let curve = monte_carlo_ber(&cfg.mc_config(cfg.baseline_csi)?, &phase_source(cfg.phase_source, net.as_ref()), &run.streams)?;
            run.save_curve(&curve, "ber_baseline.csv")?;
        }
        Command::Train => {
            let net = ris_net::<T>(run)?;
            let tc = cfg.train_config();
            let out = train_e2e::<T, T>(&tc, &phase_source(cfg.phase_source, net.as_ref()), &run.streams)?;
            let hist = run.path("ae_history.csv");
            write_ae_history(&hist, &out.history)?;
            run.manifest.best_epoch = Some(out.best_epoch);
            let mut ckpt = out.model.to_checkpoint(cfg.seed)?;
            ckpt.set_meta("train_config", &tc)?;
            ckpt.set_meta("phase_source", cfg.phase_source)?;
            ckpt.set_meta("ris_checkpoint", ris_checkpoint_ref(run))?;
            run.save_checkpoint(&ckpt, "ae")?;
            evaluate_all(run, &out.model, net.as_ref())?;
        }
        Command::Eval => {
            let ckpt = ae.ok_or_else(|| Error::Config("evaluation needs ae_checkpoint".into()))?;
            let model = Autoencoder::<T>::from_checkpoint(ckpt)?;
            let arch = model.arch();
            if (arch.k, arch.n, arch.n_elements) != (cfg.k, cfg.n, cfg.n_elements) {
                return Err(Error::Config(format!(
                    "checkpoint is (k, n, N) = ({}, {}, {}), config is ({}, {}, {})",
                    arch.k, arch.n, arch.n_elements, cfg.k, cfg.n, cfg.n_elements
                )));
            }
            let net = ris_net::<T>(run)?;
            evaluate_all(run, &model, net.as_ref())?;
        }
    }
    Ok(())
}

/// Runs `command` and writes its artifacts plus `manifest.json` into
/// `out`. A failing run still writes the manifest, flagged `partial`, and
/// then returns the error.
pub fn run_command(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    if !command.accepts(cfg.kind) {
        return Err(Error::Config(format!("{} cannot run a {:?} config", command.name(), cfg.kind)));
    }
    cfg.validate()?;
    if command == Command::Eval && cfg.ae_checkpoint.is_none() {
        return Err(Error::Config("eval needs ae_checkpoint".into()));
    }
    if command == Command::Eval && cfg.phase_source == PhaseChoice::Learned && cfg.ris_checkpoint.is_none() && cfg.n_elements > 0 {
        return Err(Error::Config("eval with learned phases needs ris_checkpoint".into()));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let started = Instant::now();
    let mut run = Run {
        cfg,
        out,
        streams: Streams::new(cfg.seed),
        manifest: RunManifest {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.name().to_string(),
            kind: cfg.kind,
            seed: cfg.seed,
            partial: false,
            error: None,
            wall_time_s: 0.0,
            config: cfg.clone(),
            artifacts: Vec::new(),
            curves: Vec::new(),
            ris_efficiency: None,
            best_epoch: None,
            crossings: Vec::new(),
        },
    };
    let ae = match (&cfg.ae_checkpoint, command) {
        (Some(stem), Command::Eval) => Some(Checkpoint::load(stem)?),
        _ => None,
    };
    let precision = ae.as_ref().and_then(checkpoint_dtype).unwrap_or(cfg.precision);
    let result = match precision {
        Precision::F32 => execute::<f32>(&mut run, command, ae.as_ref()),
        Precision::F64 => execute::<f64>(&mut run, command, ae.as_ref()),
    };
    let mut manifest = run.manifest;
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    if let Err(e) = &result {
        manifest.partial = true;
        manifest.error = Some(e.to_string());
    }
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    result.map(|_| manifest)
}

/// Runs the default command for `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let command = match cfg.kind {
        ExperimentKind::RisPretrain => Command::PretrainRis,
        ExperimentKind::AePerfect | ExperimentKind::AeEstimated => Command::Train,
        ExperimentKind::BaselineMc => Command::Baseline,
    };
    run_command(command, cfg, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            n_elements: 2,
            phase_source: PhaseChoice::ClosedForm,
            seq_len: 4,
            width: 8,
            train_symbols: 512,
            batch_train: 32,
            batch_test: 32,
            max_epochs: 2,
            eb_n0_db: vec![0.0, 10.0],
            test_symbols: 256,
            min_errors: 10,
            max_bits: 2_000,
            ris_dataset: 500,
            ris_test_channels: 100,
            ris_max_epochs: 2,
            ..ExperimentConfig::desk(kind)
        }
    }

    #[test]
    fn toml_overlay_and_rejections() {
        let cfg = ExperimentConfig::from_toml_str("config_version = 1\nn_elements = 8\n", ExperimentKind::AePerfect, true).unwrap();
        assert_eq!(cfg.n_elements, 8);
        assert_eq!(cfg.train_symbols, 100_000);
        let full = ExperimentConfig::from_toml_str("config_version = 1\nkind = \"ris_pretrain\"\n", ExperimentKind::AePerfect, false).unwrap();
        assert_eq!((full.kind, full.ris_dataset), (ExperimentKind::RisPretrain, 200_000));

        for bad in ["n_elements = 8\n", "config_version = 2\n", "config_version = 1\nbogus = 3\n", "config_version = 1\nval_fraction = 1.5\n", "config_version = 1\nk = 3\n"] {
            let e = ExperimentConfig::from_toml_str(bad, ExperimentKind::AePerfect, true).unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{bad}: {e}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = tiny(ExperimentKind::AeEstimated);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text, ExperimentKind::BaselineMc, false).unwrap(), cfg);
    }

    #[test]
    fn default_grid_brackets_the_target() {
        assert_eq!(default_grid(16), (0..=10).map(|i| -29.0 + 2.0 * i as f64).collect::<Vec<_>>());
        assert_eq!(default_grid(0).len(), 11);
    }

    #[test]
    fn command_kind_mismatch_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = run_command(Command::Baseline, &tiny(ExperimentKind::AePerfect), dir.path()).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let e = run_command(Command::Eval, &tiny(ExperimentKind::AePerfect), dir.path()).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn train_then_eval_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(ExperimentKind::AeEstimated);
        let m = run_experiment(&cfg, dir.path()).unwrap();
        assert!(!m.partial);
        for f in ["ae_history.csv", "ae.json", "ae.bin", "ber_ae_perfect.csv", "ber_ae_estimated.csv", "ber_baseline_perfect.csv", "pilot_schedule.csv", "comparison.csv"] {
            assert!(m.artifacts.iter().any(|a| a == f), "{f}");
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(dir.path().join("manifest.json").exists());

        let eval_dir = tempfile::tempdir().unwrap();
        let ecfg = ExperimentConfig {
            ae_checkpoint: Some(dir.path().join("ae")),
            compare_baseline: false,
            ..cfg
        };
        run_command(Command::Eval, &ecfg, eval_dir.path()).unwrap();
        for f in ["ber_ae_perfect.csv", "ber_ae_estimated.csv"] {
            let a = fs::read(dir.path().join(f)).unwrap();
            let b = fs::read(eval_dir.path().join(f)).unwrap();
            assert_eq!(a, b, "{f}");
        }
    }

    #[test]
    fn failed_run_writes_partial_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            phase_source: PhaseChoice::Learned,
            ris_checkpoint: Some(dir.path().join("missing")),
            ..tiny(ExperimentKind::BaselineMc)
        };
        assert!(run_command(Command::Baseline, &cfg, dir.path()).is_err());
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert!(m.partial && m.error.is_some());
    }

    #[test]
    fn learned_phases_pretrained_in_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            phase_source: PhaseChoice::Learned,
            ..tiny(ExperimentKind::BaselineMc)
        };
        let m = run_command(Command::Baseline, &cfg, dir.path()).unwrap();
        assert!(m.ris_efficiency.is_some());
        assert!(dir.path().join("ris.json").exists() && dir.path().join("ber_baseline.csv").exists());
    }
}
