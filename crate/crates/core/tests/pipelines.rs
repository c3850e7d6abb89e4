use num_complex::Complex64;

use ris_e2e::autoencoder::{evaluate_ber, train_e2e, EvalConfig, TrainConfig};
use ris_e2e::baseline::{monte_carlo_ber, LinkKind, McConfig, ModScheme};
use ris_e2e::channel::{awgn, sample_rayleigh, NoiseSpec};
use ris_e2e::nn::TrainSchedule;
use ris_e2e::pilot::{dft_reflection_matrix, ls_estimate, simulate_pilot_phase, CsiMode};
use ris_e2e::ris::{pretrain_ris_net, PhaseSource, RisPretrainConfig};
use ris_e2e::rng::Streams;

#[test]
fn ls_estimate_is_unbiased() {
    let s = Streams::new(21);
    let n = 4;
    let ch = sample_rayleigh(n, &mut s.rng("channel"));
    let sched = dft_reflection_matrix(n);
    let spec = NoiseSpec::new(0.0, 1.0);
    let trials = 100_000;
    let mut rng = s.rng("noise");
    let mut sum = vec![Complex64::new(0.0, 0.0); n + 1];
    for _ in 0..trials {
        let est = ls_estimate(&simulate_pilot_phase(&ch, &sched, &spec, &mut rng).unwrap(), &sched).unwrap();
        sum[0] += est.h_d_hat;
        for (acc, c) in sum[1..].iter_mut().zip(&est.cascade_hat) {
            *acc += c;
        }
    }
    // each coefficient error has variance N0 / (N + 1) for the DFT schedule
    let sd = (spec.noise_power() / (n + 1) as f64 / trials as f64).sqrt();
    let truth: Vec<Complex64> = std::iter::once(ch.h_d).chain(ch.cascade.iter().copied()).collect();
    for (acc, t) in sum.iter().zip(&truth) {
        let bias = acc / trials as f64 - t;
        assert!(bias.re.abs() < 5.0 * sd && bias.im.abs() < 5.0 * sd, "bias {bias} vs sd {sd}");
    }
}

#[test]
fn ls_error_variance_matches_inverse_gram() {
    let s = Streams::new(22);
    let n = 6;
    let sched = dft_reflection_matrix(n);
    let spec = NoiseSpec::new(5.0, 1.0);
    let trials = 20_000;
    let mut rng = s.rng("noise");
    let mut total = 0.0;
    for i in 0..trials {
        let ch = sample_rayleigh(n, &mut s.rng(&format!("ch{i}")));
        total += ls_estimate(&simulate_pilot_phase(&ch, &sched, &spec, &mut rng).unwrap(), &sched).unwrap().squared_error(&ch);
    }
    let expected = spec.noise_power() * sched.inverse_gram_trace();
    let mse = total / trials as f64;
    assert!((mse / expected - 1.0).abs() < 0.03, "{mse} vs {expected}");
}

#[test]
fn noise_power_is_n0() {
    let spec = NoiseSpec::new(3.0, 0.5);
    let w = awgn(400_000, &spec, &mut Streams::new(23).rng("w"));
    let p = w.iter().map(|v| v.norm_sqr()).sum::<f64>() / w.len() as f64;
    assert!((p / spec.noise_power() - 1.0).abs() < 0.01, "{p}");
    assert!((spec.noise_power() - 2.0 * spec.sigma_sq).abs() < 1e-15);
}

#[test]
fn qpsk_matches_bpsk_over_awgn() {
    let grid = vec![0.0, 3.0, 6.0];
    let run = |scheme| {
        let mut cfg = McConfig::new(scheme, LinkKind::Awgn, 0, grid.clone());
        cfg.min_errors = u64::MAX;
        cfg.max_bits = 2_000_000;
        monte_carlo_ber::<f64>(&cfg, &PhaseSource::ClosedForm, &Streams::new(24)).unwrap()
    };
    let (b, q) = (run(ModScheme::Bpsk), run(ModScheme::Qpsk));
    for (pb, pq) in b.points.iter().zip(&q.points) {
        let ((bl, bh), (ql, qh)) = (pb.ci(), pq.ci());
        assert!(bl <= qh && ql <= bh, "{} dB: {} vs {}", pb.eb_n0_db, pb.ber(), pq.ber());
    }
}

#[test]
fn more_elements_lower_ber() {
    let grid = vec![-6.0, -3.0];
    let ber = |n| {
        let mut cfg = McConfig::new(ModScheme::Bpsk, LinkKind::Rayleigh, n, grid.clone());
        cfg.min_errors = 500;
        monte_carlo_ber::<f64>(&cfg, &PhaseSource::ClosedForm, &Streams::new(25)).unwrap().bers()
    };
    let (a, b) = (ber(2), ber(8));
    assert!(a.iter().zip(&b).all(|(x, y)| y < x), "{a:?} {b:?}");
}

#[test]
fn monte_carlo_is_seed_deterministic() {
    let mut cfg = McConfig::new(ModScheme::Qam16, LinkKind::Rayleigh, 3, vec![0.0, 5.0]);
    cfg.csi = CsiMode::Estimated;
    cfg.max_bits = 40_000;
    let run = |seed| monte_carlo_ber::<f64>(&cfg, &PhaseSource::ClosedForm, &Streams::new(seed)).unwrap().points;
    assert_eq!(run(26), run(26));
    assert_ne!(run(26), run(27));
}

#[test]
fn small_ris_pretraining_reaches_ninety_percent() {
    let cfg = RisPretrainConfig {
        dataset: 50_000,
        test_channels: 5_000,
        schedule: TrainSchedule {
            max_epochs: 40,
            ..TrainSchedule::ris_pretrain()
        },
        ..RisPretrainConfig::full(4)
    };
    let out = pretrain_ris_net::<f32>(&cfg, &Streams::new(28)).unwrap();
    assert!(out.efficiency >= 0.9, "{}", out.efficiency);
}

#[test]
fn identity_channel_without_noise_is_error_free() {
    let cfg = TrainConfig {
        seq_len: 16,
        width: 32,
        train_symbols: 32_000,
        batch_train: 256,
        identity_channel: true,
        noiseless: true,
        schedule: TrainSchedule {
            max_epochs: 15,
            ..TrainSchedule::autoencoder()
        },
        ..TrainConfig::desk(2, 4)
    };
    let s = Streams::new(29);
    let out = train_e2e::<f32, f32>(&cfg, &PhaseSource::ClosedForm, &s).unwrap();
    let mut ev = EvalConfig::new(vec![0.0], 100_000, CsiMode::Perfect);
    ev.identity_channel = true;
    ev.noiseless = true;
    let curve = evaluate_ber(&out.model, &PhaseSource::<f32>::ClosedForm, &ev, &s).unwrap();
    assert_eq!(curve.points[0].bit_errors, 0, "{:?}", curve.points[0]);
    assert_eq!(curve.points[0].total_bits, 200_000);
}
