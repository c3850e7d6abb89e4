//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Desk-scale training runs dominate the runtime
//! (roughly half an hour on one core); curves land in
//! `$CARGO_TARGET_TMPDIR/acceptance` for inspection.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf::erfc;

use ris_e2e::autoencoder::{
    evaluate_ber, train_e2e, AeArch, AeEpoch, Autoencoder, BlockLink, EvalConfig, SymbolBatch, TrainConfig,
};
use ris_e2e::baseline::{monte_carlo_ber, BerCurve, LinkKind, McConfig, ModScheme};
use ris_e2e::channel::{awgn, effective_channel, sample_rayleigh, ChannelRealization, NoiseSpec};
use ris_e2e::experiment::{run_experiment, ExperimentConfig, ExperimentKind, PhaseChoice};
use ris_e2e::nn::gradcheck::{all_indices, grad_check, spread_indices, GradCheckReport, Probe};
use ris_e2e::nn::{
    cross_entropy, Activation, ActivationKind, BatchNorm, Conv1d, Dense, Layer, Mode, PowerNorm, RealArray, Sequential,
};
use ris_e2e::pilot::{dft_reflection_matrix, estimated_csi_pipeline, ls_estimate, simulate_pilot_phase, CsiMode};
use ris_e2e::ris::{exhaustive_phase_search, optimal_phases_closed_form, pretrain_ris_net, PhaseSource, RisNet, RisPretrainConfig};
use ris_e2e::rng::Streams;

const GRAD_EPS: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
const CORRUPTION_MIN: f64 = 0.1;

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = Result<Verdict, String>;

fn verdict(pass: bool, detail: impl Into<String>) -> Check {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn out_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&d).expect("acceptance output dir");
    d
}

// ---------------------------------------------------------------- 1

fn merge(a: GradCheckReport, b: GradCheckReport) -> GradCheckReport {
    let (max_rel_err, worst_index) = if b.max_rel_err > a.max_rel_err || b.max_rel_err.is_nan() {
        (b.max_rel_err, b.worst_index)
    } else {
        (a.max_rel_err, a.worst_index)
    };
    GradCheckReport {
        max_rel_err,
        worst_index,
        checked: a.checked + b.checked,
        kink_skipped: a.kink_skipped + b.kink_skipped,
    }
}

fn report_ok(r: &GradCheckReport) -> bool {
    r.max_rel_err < GRAD_TOL && r.checked > 0 && r.kink_skipped * 100 <= r.checked + r.kink_skipped
}

fn dot(a: &RealArray<f64>, b: &RealArray<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Checks parameter and input gradients of `net` under `L = sum(r * net(x))`.
fn layer_report(net: Sequential<f64>, x: &RealArray<f64>, rng: &mut impl Rng) -> Result<GradCheckReport, String> {
    let mut net = net;
    let y = net.forward(x, Mode::Train).map_err(err)?;
    let r = RealArray::from_fn(y.shape(), |_| rng.random_range(-1.0..1.0));
    net.zero_grad();
    net.forward(x, Mode::Train).map_err(err)?;
    let dx = net.backward(&r);
    let mut probe = net.clone();
    let eval = |p: &Sequential<f64>, input: &RealArray<f64>| -> Probe {
        let mut q = p.clone();
        let y = q.forward(input, Mode::Train).expect("forward");
        Probe {
            loss: dot(&y, &r),
            signature: q.kink_signature(),
        }
    };
    let params = net.flat_params();
    let grads = net.flat_grads();
    let rp = grad_check(&params, &grads, &all_indices(params.len()), GRAD_EPS, |p| {
        probe.set_flat_params(p);
        eval(&probe, x)
    });
    let rx = grad_check(x.data(), dx.data(), &all_indices(x.len()), GRAD_EPS, |xi| {
        eval(&net, &RealArray::new(x.shape(), xi.to_vec()).expect("shape"))
    });
    Ok(merge(rp, rx))
}

fn single(name: &str, layer: Layer<f64>) -> Sequential<f64> {
    let mut s = Sequential::new();
    s.push(name, layer);
    s
}

fn criterion_1() -> Check {
    let streams = Streams::new(101);
    let mut rng = streams.rng("grad/layers");
    let uniform = |shape: &[usize], rng: &mut rand_chacha::ChaCha8Rng| RealArray::<f64>::from_fn(shape, |_| rng.random_range(-1.5..1.5));
    let mut lines = Vec::new();
    let mut pass = true;

    let x2 = uniform(&[6, 5], &mut rng);
    let x3 = uniform(&[3, 8, 4], &mut rng);
    let cases: Vec<(&str, Sequential<f64>, RealArray<f64>)> = vec![
        ("dense", single("d", Layer::Dense(Dense::new(5, 4, &mut rng))), x2.clone()),
        ("conv1d", single("c", Layer::Conv1d(Conv1d::new(3, 4, 5, &mut rng))), x3.clone()),
        ("batchnorm", single("bn", Layer::BatchNorm(BatchNorm::new(5))), x2.clone()),
        ("batchnorm-seq", single("bn", Layer::BatchNorm(BatchNorm::new(4))), x3.clone()),
        ("relu", single("a", Layer::Activation(Activation::new(ActivationKind::Relu))), x2.clone()),
        ("elu", single("a", Layer::Activation(Activation::new(ActivationKind::Elu))), x2.clone()),
        ("softmax", single("a", Layer::Activation(Activation::new(ActivationKind::Softmax))), x2.clone()),
        ("powernorm", single("p", Layer::PowerNorm(PowerNorm::new())), x3.clone()),
    ];
    for (name, net, x) in cases {
        let r = layer_report(net, &x, &mut rng)?;
        pass &= report_ok(&r);
        lines.push(format!("{name} {:.1e}", r.max_rel_err));
    }

    // cross-entropy gradient w.r.t. logits
    let logits = uniform(&[6, 4], &mut rng);
    let onehot = RealArray::<f64>::from_fn(&[6, 4], |i| ((i % 4) == (i / 4) % 4) as u8 as f64);
    let softmax = |z: &RealArray<f64>| ris_e2e::nn::activation(z, ActivationKind::Softmax);
    let (_, g) = cross_entropy(&softmax(&logits), &onehot).map_err(err)?;
    let r = grad_check(logits.data(), g.data(), &all_indices(logits.len()), GRAD_EPS, |z| {
        let z = RealArray::new(&[6, 4], z.to_vec()).expect("shape");
        Probe::smooth(cross_entropy(&softmax(&z), &onehot).expect("ce").0)
    });
    pass &= report_ok(&r);
    lines.push(format!("cross-entropy {:.1e}", r.max_rel_err));

    // full transmitter and receiver stacks, through a mismatched link
    let arch = AeArch::new(1, 1, 16);
    let mut ae = Autoencoder::<f64>::new(arch, &streams).map_err(err)?;
    let blocks = 2;
    let sym = SymbolBatch::random(1, arch.seq_len, blocks, &mut streams.rng("grad/sym"));
    let links: Vec<BlockLink> = (0..blocks)
        .map(|i| BlockLink {
            h_true: Complex64::new(1.3 - 0.9 * i as f64, 0.7),
            h_rx: Complex64::new(1.2 - 0.8 * i as f64, 0.6),
            extra: Vec::new(),
        })
        .collect();
    let noise = awgn(blocks * arch.seq_len, &NoiseSpec::new(4.0, 1.0), &mut streams.rng("grad/noise"));
    ae.zero_grad();
    ae.loss_and_backward(&sym, &links, &noise).map_err(err)?;
    let params = ae.flat_params();
    let mut analytic = ae.flat_grads();
    let n_tx = ae.tx().num_params();
    let mut probe = ae.clone();
    let mut f = |p: &[f64]| {
        probe.set_flat_params(p);
        probe.zero_grad();
        let loss = probe.loss_and_backward(&sym, &links, &noise).expect("loss");
        Probe {
            loss,
            signature: probe.kink_signature(),
        }
    };
    let tx_idx = spread_indices(n_tx, 200);
    let rx_idx: Vec<usize> = spread_indices(params.len() - n_tx, 200).into_iter().map(|i| i + n_tx).collect();
    let rt = grad_check(&params, &analytic, &tx_idx, GRAD_EPS, &mut f);
    let rr = grad_check(&params, &analytic, &rx_idx, GRAD_EPS, &mut f);
    pass &= report_ok(&rt) && report_ok(&rr);
    lines.push(format!("tx-stack {:.1e} ({} skipped)", rt.max_rel_err, rt.kink_skipped));
    lines.push(format!("rx-stack {:.1e} ({} skipped)", rr.max_rel_err, rr.kink_skipped));

    let worst = (0..analytic.len()).max_by(|&a, &b| analytic[a].abs().total_cmp(&analytic[b].abs())).expect("params");
    analytic[worst] *= 2.0;
    let rc = grad_check(&params, &analytic, &[worst], GRAD_EPS, &mut f);
    pass &= rc.max_rel_err > CORRUPTION_MIN;
    lines.push(format!("corrupted-ae {:.2}", rc.max_rel_err));

    // phase network
    let mut net = RisNet::<f64>::new(16, &streams);
    let chans: Vec<ChannelRealization> = (0..32).map(|i| sample_rayleigh(16, &mut streams.rng(&format!("grad/ch{i}")))).collect();
    let refs: Vec<&ChannelRealization> = chans.iter().collect();
    net.network_mut().zero_grad();
    net.loss_and_backward(&refs).map_err(err)?;
    let params = net.network().flat_params();
    let mut analytic = net.network().flat_grads();
    let mut probe = net.clone();
    let mut f = |p: &[f64]| {
        probe.network_mut().set_flat_params(p);
        probe.network_mut().zero_grad();
        let loss = probe.loss_and_backward(&refs).expect("loss");
        Probe {
            loss,
            signature: probe.network().kink_signature(),
        }
    };
    let r = grad_check(&params, &analytic, &spread_indices(params.len(), 300), GRAD_EPS, &mut f);
    pass &= report_ok(&r);
    lines.push(format!("ris-stack {:.1e} ({} skipped)", r.max_rel_err, r.kink_skipped));
    let worst = (0..analytic.len()).max_by(|&a, &b| analytic[a].abs().total_cmp(&analytic[b].abs())).expect("params");
    analytic[worst] *= 2.0;
    let rc = grad_check(&params, &analytic, &[worst], GRAD_EPS, &mut f);
    pass &= rc.max_rel_err > CORRUPTION_MIN;
    lines.push(format!("corrupted-ris {:.2}", rc.max_rel_err));

    verdict(pass, format!("max rel err per check: {}", lines.join(", ")))
}

// ---------------------------------------------------------------- 2

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn within_sigmas(curve: &BerCurve, theory: impl Fn(f64) -> f64, sigmas: f64) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in &curve.points {
        let t = theory(p.eb_n0_db);
        let sd = (t * (1.0 - t) / p.total_bits as f64).sqrt();
        let z = (p.ber() - t) / sd;
        ok &= z.abs() <= sigmas;
        notes.push(format!("{} dB {:+.2}sd", p.eb_n0_db, z));
    }
    (ok, notes)
}

fn criterion_2() -> Check {
    let streams = Streams::new(202);
    let mut cfg = McConfig::new(ModScheme::Bpsk, LinkKind::Awgn, 0, vec![0.0, 4.0, 8.0]);
    cfg.min_errors = u64::MAX;
    cfg.max_bits = 10_000_000;
    let awgn_curve = monte_carlo_ber::<f64>(&cfg, &PhaseSource::ClosedForm, &streams.child("awgn")).map_err(err)?;
    let (ok_a, notes_a) = within_sigmas(&awgn_curve, |db| q((2.0 * 10f64.powf(db / 10.0)).sqrt()), 3.0);

    let mut cfg = McConfig::new(ModScheme::Bpsk, LinkKind::Rayleigh, 0, vec![0.0, 4.0, 8.0, 12.0]);
    cfg.min_errors = u64::MAX;
    cfg.max_bits = 2_000_000;
    let ray = monte_carlo_ber::<f64>(&cfg, &PhaseSource::ClosedForm, &streams.child("rayleigh")).map_err(err)?;
    let (ok_r, notes_r) = within_sigmas(
        &ray,
        |db| {
            let g = 10f64.powf(db / 10.0);
            0.5 * (1.0 - (g / (1.0 + g)).sqrt())
        },
        3.0,
    );
    verdict(ok_a && ok_r, format!("AWGN [{}]; Rayleigh N=0 [{}]", notes_a.join(", "), notes_r.join(", ")))
}

// ---------------------------------------------------------------- 3

struct RisNets {
    nets: Vec<(usize, RisNet<f32>, f64, f64)>,
}

impl RisNets {
    fn get(&self, n: usize) -> &RisNet<f32> {
        &self.nets.iter().find(|e| e.0 == n).expect("pretrained size").1
    }
}

fn pretrain_all() -> Result<RisNets, String> {
    let mut nets = Vec::new();
    for n in [8usize, 16, 32] {
        let t = Instant::now();
        let out = pretrain_ris_net::<f32>(&RisPretrainConfig::desk(n), &Streams::new(300 + n as u64)).map_err(err)?;
        eprintln!("  phase network N={n}: efficiency {:.4} in {:.0?}", out.efficiency, t.elapsed());
        nets.push((n, out.net, out.efficiency, t.elapsed().as_secs_f64()));
    }
    Ok(RisNets { nets })
}

fn criterion_3(nets: &RisNets) -> Check {
    let streams = Streams::new(303);
    let mut worst = f64::INFINITY;
    for i in 0..1000 {
        let ch = sample_rayleigh(4, &mut streams.rng(&format!("c3/{i}")));
        let cf = effective_channel(&ch, optimal_phases_closed_form(&ch).as_slice()).map_err(err)?.norm();
        let grid = exhaustive_phase_search(&ch, 16).map_err(err)?;
        let g = effective_channel(&ch, grid.as_slice()).map_err(err)?.norm();
        worst = worst.min((cf - g) / g);
    }
    let eff16 = nets.nets.iter().find(|e| e.0 == 16).map(|e| e.2).unwrap_or(0.0);
    verdict(
        worst >= -1e-12 && eff16 >= 0.90,
        format!(
            "closed form minus 16-level grid, worst relative margin {worst:.3e}; learned efficiency N=16 {eff16:.4} (N=8 {:.4}, N=32 {:.4})",
            nets.nets[0].2, nets.nets[2].2
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Check {
    let streams = Streams::new(404);
    let sched = dft_reflection_matrix(16);
    let noiseless = NoiseSpec::noiseless(1.0);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let ch = sample_rayleigh(16, &mut streams.rng(&format!("c4/ch{i}")));
        let y = simulate_pilot_phase(&ch, &sched, &noiseless, &mut streams.rng("unused")).map_err(err)?;
        let est = ls_estimate(&y, &sched).map_err(err)?;
        let scale = ch.h_d.norm_sqr() + ch.cascade.iter().map(|c| c.norm_sqr()).sum::<f64>();
        worst = worst.max((est.squared_error(&ch) / scale).sqrt());
    }
    let recovered = worst <= 1e-10;

    let snrs: Vec<f64> = (0..=6).map(|i| 5.0 * i as f64).collect();
    let mut logs = Vec::new();
    for (j, &db) in snrs.iter().enumerate() {
        let spec = NoiseSpec::new(db, 1.0);
        let mut rng = streams.rng(&format!("c4/noise{j}"));
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..2000 {
            let ch = sample_rayleigh(16, &mut streams.rng(&format!("c4/nm{i}")));
            let y = simulate_pilot_phase(&ch, &sched, &spec, &mut rng).map_err(err)?;
            num += ls_estimate(&y, &sched).map_err(err)?.squared_error(&ch);
            den += ch.h_d.norm_sqr() + ch.cascade.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        logs.push((num / den).log10());
    }
    let mx = snrs.iter().sum::<f64>() / snrs.len() as f64;
    let my = logs.iter().sum::<f64>() / logs.len() as f64;
    let slope = snrs.iter().zip(&logs).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / snrs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let decades_per_10db = slope * 10.0;
    let slope_ok = (decades_per_10db + 1.0).abs() <= 0.15;
    verdict(
        recovered && slope_ok,
        format!("noiseless worst relative error {worst:.2e}; NMSE slope {decades_per_10db:.4} decades per 10 dB over 0-30 dB"),
    )
}

// ---------------------------------------------------------------- 5, 7

struct Trained {
    label: String,
    history: Vec<AeEpoch>,
    best_epoch: usize,
}

fn train(k: usize, n: usize, net: &RisNet<f32>, seed: u64) -> Result<(Autoencoder<f32>, Trained), String> {
    let t = Instant::now();
    let cfg = TrainConfig::desk(k, n);
    let out = train_e2e::<f32, f32>(&cfg, &PhaseSource::Learned(net), &Streams::new(seed)).map_err(err)?;
    eprintln!("  autoencoder k={k} N={n}: best epoch {} in {:.0?}", out.best_epoch, t.elapsed());
    Ok((
        out.model,
        Trained {
            label: format!("k={k} N={n}"),
            history: out.history,
            best_epoch: out.best_epoch,
        },
    ))
}

fn eval_curve(model: &Autoencoder<f32>, net: &RisNet<f32>, grid: &[f64], csi: CsiMode, seed: u64) -> Result<BerCurve, String> {
    let mut cfg = EvalConfig::new(grid.to_vec(), 200_000, csi);
    cfg.stop_after_errors = Some(2000);
    evaluate_ber(model, &PhaseSource::Learned(net), &cfg, &Streams::new(seed)).map_err(err)
}

fn criterion_5(nets: &RisNets, trained: &mut Vec<Trained>) -> Check {
    let grid: Vec<f64> = (0..14).map(|i| -30.0 + 2.0 * i as f64).collect();
    let dir = out_dir();
    let mut curves = Vec::new();
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [8usize, 16, 32] {
        let net = nets.get(n);
        let (model, t) = train(1, n, net, 500 + n as u64)?;
        trained.push(t);
        let ae = eval_curve(&model, net, &grid, CsiMode::Perfect, 550 + n as u64)?;
        ae.write_csv(&dir.join(format!("ae_bpsk_n{n}.csv"))).map_err(err)?;
        let mut mc = McConfig::new(ModScheme::Bpsk, LinkKind::Rayleigh, n, grid.clone());
        mc.symbols_per_block = 64;
        mc.min_errors = 2000;
        mc.max_bits = 1_000_000;
        let base = monte_carlo_ber::<f64>(&mc, &PhaseSource::ClosedForm, &Streams::new(560 + n as u64)).map_err(err)?;
        base.write_csv(&dir.join(format!("baseline_bpsk_n{n}.csv"))).map_err(err)?;

        let mono = ae.is_monotone_within_ci();
        let gap = match (ae.eb_n0_at(1e-3), base.eb_n0_at(1e-3)) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
        let gap_ok = gap.is_some_and(|g| g <= 1.0);
        pass &= mono && gap_ok;
        notes.push(format!(
            "N={n}: monotone {mono}, gap at 1e-3 {}",
            gap.map_or("n/a".to_string(), |g| format!("{g:+.2} dB"))
        ));
        curves.push(ae);
    }
    let mut ordered = true;
    for pair in curves.windows(2) {
        for (small, large) in pair[0].points.iter().zip(&pair[1].points) {
            if large.ci().0 > small.ci().1 {
                ordered = false;
                notes.push(format!("ordering violated at {} dB", small.eb_n0_db));
            }
        }
    }
    pass &= ordered;
    notes.push(format!("N-ordering {ordered}"));
    verdict(pass, notes.join("; "))
}

fn criterion_7(trained: &[Trained]) -> Check {
    if trained.is_empty() {
        return Err("no training runs to inspect".into());
    }
    let mut pass = true;
    let mut notes = Vec::new();
    for t in trained {
        let first = t.history[0].val_loss;
        let halved_at = t.history.iter().take(20).position(|e| e.val_loss <= 0.5 * first).map(|i| i + 1);
        let best = t.history[t.best_epoch - 1].val_loss;
        let ok = halved_at.is_some() && best <= first;
        pass &= ok;
        notes.push(format!(
            "{}: epoch-1 val {first:.4}, halved by epoch {}, best {best:.2e} at epoch {}",
            t.label,
            halved_at.map_or("never".into(), |e| e.to_string()),
            t.best_epoch
        ));
    }
    verdict(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 6

fn criterion_6(nets: &RisNets, trained: &mut Vec<Trained>) -> Check {
    let net = nets.get(16);
    let (model, t) = train(2, 16, net, 616)?;
    trained.push(t);
    let grid: Vec<f64> = (0..12).map(|i| -24.0 + 2.0 * i as f64).collect();
    let perfect = eval_curve(&model, net, &grid, CsiMode::Perfect, 660)?;
    let estimated = eval_curve(&model, net, &grid, CsiMode::Estimated, 660)?;
    let dir = out_dir();
    perfect.write_csv(&dir.join("ae_qpsk_n16_perfect.csv")).map_err(err)?;
    estimated.write_csv(&dir.join("ae_qpsk_n16_estimated.csv")).map_err(err)?;
    let violations: Vec<f64> = perfect
        .points
        .iter()
        .zip(&estimated.points)
        .filter(|(p, e)| e.ber() < p.ber())
        .map(|(p, _)| p.eb_n0_db)
        .collect();

    let streams = Streams::new(666);
    let sched = dft_reflection_matrix(16);
    let noiseless = NoiseSpec::noiseless(2.0);
    let mut gap = 0.0f64;
    for i in 0..1000 {
        let ch = sample_rayleigh(16, &mut streams.rng(&format!("c6/{i}")));
        let est = estimated_csi_pipeline::<f64, _>(&ch, &sched, &noiseless, &PhaseSource::ClosedForm, &mut streams.rng("unused")).map_err(err)?;
        gap = gap.max(est.theta.max_distance(&optimal_phases_closed_form(&ch)));
    }
    verdict(
        violations.is_empty() && gap < 1e-9,
        format!(
            "estimated below perfect at {violations:?} dB; noiseless-pilot phase gap {gap:.2e}; BER at -14 dB perfect {:.3e} / estimated {:.3e}",
            perfect.points[5].ber(),
            estimated.points[5].ber()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Check {
    let cfg = ExperimentConfig {
        n_elements: 4,
        phase_source: PhaseChoice::Learned,
        ris_dataset: 2000,
        ris_test_channels: 200,
        ris_max_epochs: 10,
        train_symbols: 6400,
        max_epochs: 3,
        eb_n0_db: vec![-10.0, -5.0, 0.0, 5.0],
        test_symbols: 6400,
        max_bits: 20_000,
        threads: 2,
        seed: 808,
        ..ExperimentConfig::desk(ExperimentKind::AeEstimated)
    };
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    let ma = run_experiment(&cfg, a.path()).map_err(err)?;
    run_experiment(&cfg, b.path()).map_err(err)?;
    let csvs: Vec<&String> = ma.artifacts.iter().filter(|f| f.ends_with(".csv")).collect();
    let mut differing = Vec::new();
    for f in &csvs {
        let x = std::fs::read(a.path().join(f)).map_err(err)?;
        let y = std::fs::read(b.path().join(f)).map_err(err)?;
        if x != y {
            differing.push(f.to_string());
        }
    }
    verdict(
        differing.is_empty() && csvs.len() >= 6,
        format!("{} CSV artifacts compared, differing: {differing:?}", csvs.len()),
    )
}

// ----------------------------------------------------------------

fn report(id: &str, name: &str, started: Instant, result: Check) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match result {
        Ok(v) => {
            println!("{} criterion {id} ({name}, {secs:.0} s): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
            v.pass
        }
        Err(e) => {
            println!("FAIL criterion {id} ({name}, {secs:.0} s): error: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let t = Instant::now();
    all &= report("1", "gradient checks", t, criterion_1());
    let t = Instant::now();
    all &= report("2", "Monte-Carlo calibration", t, criterion_2());
    let t = Instant::now();
    all &= report("4", "pilot estimation", t, criterion_4());
    let t = Instant::now();
    all &= report("8", "determinism", t, criterion_8());

    let t = Instant::now();
    let nets = pretrain_all();
    let nets = match nets {
        Ok(n) => n,
        Err(e) => {
            for (id, name) in [("3", "phase optimization"), ("5", "autoencoder BER"), ("6", "estimated CSI"), ("7", "convergence")] {
                println!("FAIL criterion {id} ({name}): phase-network pre-training failed: {e}");
            }
            return ExitCode::FAILURE;
        }
    };
    all &= report("3", "phase optimization", t, criterion_3(&nets));
    let mut trained = Vec::new();
    let t = Instant::now();
    all &= report("5", "autoencoder BER", t, criterion_5(&nets, &mut trained));
    let t = Instant::now();
    all &= report("6", "estimated CSI", t, criterion_6(&nets, &mut trained));
    let t = Instant::now();
    all &= report("7", "convergence", t, criterion_7(&trained));

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
