//! Monte-Carlo BER of uncoded modulations with coherent ML detection over
//! AWGN or the block-fading RIS link.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::curve::{BerCurve, BerPoint, CurveMeta};
use crate::baseline::modulation::{ml_index, ModScheme};
use crate::channel::{awgn, sample_rayleigh, NoiseSpec};
use crate::error::{Error, Result};
use crate::nn::Real;
use crate::parallel::par_map;
use crate::pilot::{dft_reflection_matrix, resolve_links, CsiMode};
use crate::ris::PhaseSource;
use crate::rng::Streams;

/// Fewer target errors than this adds a warning to the curve.
pub const RECOMMENDED_MIN_ERRORS: u64 = 100;

/// Symbols simulated between stopping-rule checks.
const CHUNK_SYMBOLS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    /// `h_eff = 1`.
    Awgn,
    /// Rayleigh direct path plus `n_elements` RIS cascades.
    Rayleigh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub scheme: ModScheme,
    pub link: LinkKind,
    pub n_elements: usize,
    pub eb_n0_db: Vec<f64>,
    /// Stop a point once this many bit errors are counted...
    pub min_errors: u64,
    /// ...or once this many bits are simulated.
    pub max_bits: u64,
    /// Symbols sharing one channel draw.
    pub symbols_per_block: usize,
    pub csi: CsiMode,
    pub threads: usize,
}

impl McConfig {
    /// 200 errors or 1e8 bits per point, one symbol per block.
    pub fn new(scheme: ModScheme, link: LinkKind, n_elements: usize, eb_n0_db: Vec<f64>) -> Self {
        Self {
            scheme,
            link,
            n_elements,
            eb_n0_db,
            min_errors: 200,
            max_bits: 100_000_000,
            symbols_per_block: 1,
            csi: CsiMode::Perfect,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eb_n0_db.is_empty() || self.eb_n0_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("the Eb/N0 grid must be non-empty and finite".into()));
        }
        if self.max_bits == 0 || self.symbols_per_block == 0 || self.min_errors == 0 {
            return Err(Error::Config("max_bits, min_errors and symbols_per_block must be positive".into()));
        }
        if self.link == LinkKind::Awgn && (self.n_elements != 0 || self.csi != CsiMode::Perfect) {
            return Err(Error::Config("the AWGN link has no RIS and perfect CSI".into()));
        }
        if self.csi == CsiMode::Estimated && self.n_elements == 0 {
            return Err(Error::Config("estimated CSI needs at least one RIS element".into()));
        }
        Ok(())
    }
}

/// Runs one point. Every random draw comes from streams labelled by the
/// point index only, so curves that differ in phase source or CSI mode see
/// the same channels, symbols and noise.
fn mc_point<T: Real>(cfg: &McConfig, eb_n0_db: f64, streams: &Streams, source: &PhaseSource<'_, T>) -> Result<BerPoint> {
    let k = cfg.scheme.k();
    let spec = NoiseSpec::new(eb_n0_db, k as f64);
    let points = cfg.scheme.constellation();
    let mut ch_rng = streams.rng("channel");
    let mut sym_rng = streams.rng("symbols");
    let mut noise_rng = streams.rng("noise");
    let mut pilot_rng = streams.rng("pilot");
    let sched = (cfg.csi == CsiMode::Estimated).then(|| dft_reflection_matrix(cfg.n_elements));
    let blocks_per_chunk = (CHUNK_SYMBOLS / cfg.symbols_per_block).max(1);
    let one = Complex64::new(1.0, 0.0);

    let mut errors = 0u64;
    let mut bits = 0u64;
    while errors < cfg.min_errors && bits < cfg.max_bits {
        let remaining_symbols = (cfg.max_bits - bits).div_ceil(k as u64) as usize;
        let blocks = blocks_per_chunk.min(remaining_symbols.div_ceil(cfg.symbols_per_block));
        let links = match cfg.link {
            LinkKind::Awgn => vec![(one, one); blocks],
            LinkKind::Rayleigh => {
                let chans: Vec<_> = (0..blocks).map(|_| sample_rayleigh(cfg.n_elements, &mut ch_rng)).collect();
                resolve_links(&chans, cfg.csi, sched.as_ref(), &spec, source, &mut pilot_rng)?
                    .into_iter()
                    .map(|l| (l.h_true, l.h_rx))
                    .collect()
            }
        };
        for (b, (h_true, h_rx)) in links.into_iter().enumerate() {
            let len = if b + 1 == blocks {
                (remaining_symbols - b * cfg.symbols_per_block).min(cfg.symbols_per_block)
            } else {
                cfg.symbols_per_block
            };
            let noise = awgn(len, &spec, &mut noise_rng);
            for w in noise {
                let tx = sym_rng.random_range(0..points.len());
                let y = h_true * points[tx] + w;
                let rx = ml_index(y, h_rx, &points);
                errors += (tx ^ rx).count_ones() as u64;
                bits += k as u64;
            }
        }
    }
    Ok(BerPoint {
        eb_n0_db,
        bit_errors: errors,
        total_bits: bits,
    })
}

/// Simulates every grid point until `min_errors` or `max_bits`.
pub fn monte_carlo_ber<T: Real>(cfg: &McConfig, source: &PhaseSource<'_, T>, streams: &Streams) -> Result<BerCurve> {
    cfg.validate()?;
    let results = par_map(&cfg.eb_n0_db, cfg.threads, |i, &eb| {
        mc_point(cfg, eb, &streams.child(&format!("mc/p{i}")), source)
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    if cfg.min_errors < RECOMMENDED_MIN_ERRORS {
        warnings.push(format!(
            "min_errors {} is below the recommended {RECOMMENDED_MIN_ERRORS}",
            cfg.min_errors
        ));
    }
    for p in &points {
        if p.bit_errors < cfg.min_errors.min(RECOMMENDED_MIN_ERRORS) {
            warnings.push(format!("{} dB: only {} errors in {} bits", p.eb_n0_db, p.bit_errors, p.total_bits));
        }
    }
    let source_name = match source {
        PhaseSource::ClosedForm => "closed_form",
        PhaseSource::Learned(_) => "learned",
        PhaseSource::Unoptimized => "none",
    };
    let meta = CurveMeta {
        label: format!("{}-{}", cfg.scheme, source_name),
        n_elements: cfg.n_elements,
        csi_mode: cfg.csi.name().to_string(),
        seed: streams.master_seed(),
        warnings,
    };
    BerCurve::new(points, meta)
}
