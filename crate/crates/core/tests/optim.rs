use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use spiked_tensor::model::{
    derive_seed, sample_signal, NoiseModel, ObservationStream, StreamConfig,
};
use spiked_tensor::optim::{
    alignment, default_eta0_even, default_t1, effective_snr, nsga_even, nsga_odd, nsga_step,
    recovery_error, step_schedule, NsgaConfig, Preprocess, Selection,
};
use spiked_tensor::tensor::{rank_one_tensor, DenseTensor, SquareMatrix, UnitVector};
use spiked_tensor::Error;

fn noiseless(d: usize, k: usize, lambda: f64, signal: &[f64]) -> ObservationStream {
    ObservationStream::new(
        StreamConfig::new(d, k, lambda, NoiseModel::Gaussian { sigma: 0.0 }, 1)
            .with_signal(signal.to_vec()),
    )
    .unwrap()
}

fn gauss(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(r)).collect()
}

#[test]
fn alignment_examples() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for d in [3usize, 7, 20] {
        let v = sample_signal(d, &mut r);
        let a = alignment(v.as_slice(), &SquareMatrix::identity(d)).unwrap();
        assert!((a - 1.0 / (d as f64).sqrt()).abs() < 1e-12);
        let a = alignment(v.as_slice(), &SquareMatrix::outer(v.as_slice())).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        let w = SquareMatrix::from_vec(d, gauss(&mut r, d * d)).unwrap();
        for c in [1e-3, 0.5, 40.0] {
            let (a, b) = (
                alignment(v.as_slice(), &w).unwrap(),
                alignment(v.as_slice(), &w.scaled(c)).unwrap(),
            );
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert!(matches!(
        alignment(&[1.0, 0.0], &SquareMatrix::zeros(2)),
        Err(Error::ZeroMatrix)
    ));
}

#[test]
fn recovery_error_examples() {
    let v = [0.6, 0.0, 0.8];
    assert_eq!(recovery_error(&v, &v).unwrap(), 0.0);
    assert_eq!(recovery_error(&[-0.6, 0.0, -0.8], &v).unwrap(), 0.0);
    assert!((recovery_error(&[0.0, 1.0, 0.0], &v).unwrap() - 2.0).abs() < 1e-15);
    assert!(recovery_error(&[1.0, 1.0, 0.0], &v).is_err());
}

#[test]
fn step_schedule_halves_every_t1() {
    let (eta0, t1) = (0.3, 17);
    assert_eq!(step_schedule(0, eta0, t1), eta0);
    assert_eq!(step_schedule(t1 - 1, eta0, t1), eta0);
    assert_eq!(step_schedule(t1, eta0, t1), eta0 / 2.0);
    assert_eq!(step_schedule(2 * t1, eta0, t1), eta0 / 4.0);
    assert_eq!(
        default_t1(10_000),
        (10_000f64 / 10_000f64.ln()).floor() as usize
    );
}

/// Direct evaluation of the automatic step size.
fn eta0_oracle(d: f64, k: f64, lambda: f64, n: f64) -> f64 {
    let first = n.ln() / k;
    let second = k * d.powf(k / 4.0 - 1.0) / (k * (k - 4.0)).max(1.0 / d.ln());
    first.max(second) * n.ln().ceil() / (lambda * n)
}

#[test]
fn auto_step_size_examples() {
    for d in [8usize, 16, 50] {
        let n = 1000usize;
        let want =
            (n as f64).ln().max(16.0 * (d as f64).ln()) / 4.0 * (n as f64).ln().ceil() / n as f64;
        assert!((default_eta0_even(d, 4, 1.0, n) - want).abs() <= 1e-15 * want);
    }
    for (d, k, l, n) in [(10usize, 6usize, 2.0, 5000usize), (7, 8, 0.5, 123)] {
        let want = eta0_oracle(d as f64, k as f64, l, n as f64);
        assert!((default_eta0_even(d, k, l, n) - want).abs() <= 1e-14 * want);
    }
    assert!(default_eta0_even(16, 4, 1.0, 1_000_000) < default_eta0_even(16, 4, 1.0, 1_000));
}

#[test]
fn noiseless_nsga_recovers() {
    let v = sample_signal(12, &mut ChaCha8Rng::seed_from_u64(2));
    let mut s = noiseless(12, 4, 1.0, v.as_slice());
    let r = nsga_even(&mut s, &NsgaConfig::new(2000).with_eta0(0.05)).unwrap();
    assert!(r.error <= 1e-6, "{}", r.error);
    assert_eq!(r.samples_used, 2000);
    assert_eq!(r.trace.last().unwrap().t, 2000);
}

#[test]
fn one_noiseless_step_closed_form() {
    let d = 5;
    let v = sample_signal(d, &mut ChaCha8Rng::seed_from_u64(3));
    let (lambda, eta) = (1.5, 0.01);
    let mut t = rank_one_tensor(v.as_slice(), 4).unwrap();
    t.scale(lambda);
    let mut w = SquareMatrix::identity(d);
    let reward = nsga_step(&mut w, &t, eta, 1.0).unwrap();
    assert!((reward - lambda).abs() < 1e-12);
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 1.0 } else { 0.0 }
                + 2.0 * eta * lambda * v.as_slice()[i] * v.as_slice()[j];
            assert!((w.get(i, j) - want).abs() < 1e-14);
        }
    }
}

#[test]
fn step_sign_equivariance_is_exact() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    for k in [4usize, 6] {
        let d = 3;
        let t = DenseTensor::from_vec(k, d, gauss(&mut r, d.pow(k as u32))).unwrap();
        let mut neg = t.clone();
        neg.scale(-1.0);
        let w0 = SquareMatrix::from_vec(d, gauss(&mut r, d * d)).unwrap();
        let (mut a, mut b) = (w0.clone(), w0.clone());
        let ra = nsga_step(&mut a, &t, 0.01, -1.0).unwrap();
        let rb = nsga_step(&mut b, &neg, 0.01, 1.0).unwrap();
        assert_eq!(ra.to_bits(), rb.to_bits());
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn step_is_one_homogeneous_in_w() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let d = 3;
    let t = DenseTensor::from_vec(6, d, gauss(&mut r, d.pow(6))).unwrap();
    let w0 = SquareMatrix::from_vec(d, gauss(&mut r, d * d)).unwrap();
    let c = 3.7;
    let (mut a, mut b) = (w0.clone(), w0.scaled(c));
    nsga_step(&mut a, &t, 0.01, 1.0).unwrap();
    nsga_step(&mut b, &t, 0.01, 1.0).unwrap();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((c * x - y).abs() <= 1e-12 * y.abs().max(1.0));
    }
}

#[test]
fn noiseless_alignment_never_decreases() {
    let v = sample_signal(8, &mut ChaCha8Rng::seed_from_u64(6));
    let mut s = noiseless(8, 6, 1.0, v.as_slice());
    let mut cfg = NsgaConfig::new(400).with_eta0(0.02);
    cfg.trace_every = Some(1);
    let r = nsga_even(&mut s, &cfg).unwrap();
    let a: Vec<f64> = r.trace.alphas().collect();
    assert!(a.windows(2).all(|w| w[1] >= w[0] - 8.0 * f64::EPSILON));
    assert!(a.last().unwrap() > &a[0]);
}

#[test]
fn even_rejects_odd_orders_and_odd_rejects_even() {
    let v = [1.0, 0.0, 0.0];
    assert!(matches!(
        nsga_even(&mut noiseless(3, 3, 1.0, &v), &NsgaConfig::new(10)),
        Err(Error::InvalidOrder { .. })
    ));
    assert!(matches!(
        nsga_odd(&mut noiseless(3, 4, 1.0, &v), &NsgaConfig::new(10)),
        Err(Error::InvalidOrder { .. })
    ));
    assert!(nsga_even(&mut noiseless(3, 4, 1.0, &v), &NsgaConfig::new(0)).is_err());
}

#[test]
fn large_step_reports_divergence() {
    let v = sample_signal(4, &mut ChaCha8Rng::seed_from_u64(7));
    let mut s = noiseless(4, 4, 1.0, v.as_slice());
    match nsga_even(&mut s, &NsgaConfig::new(500).with_eta0(50.0)) {
        Err(Error::Divergence { trace, .. }) => assert!(!trace.is_empty()),
        other => panic!("expected divergence, got {other:?}"),
    }
}

fn odd_given(sign: f64, seed: u64) -> (spiked_tensor::optim::RecoveryResult, UnitVector) {
    let d = 10;
    let v = sample_signal(d, &mut ChaCha8Rng::seed_from_u64(seed));
    let u: Vec<f64> = v.as_slice().iter().map(|x| sign * x).collect();
    let mut s = noiseless(d, 5, 1.0, v.as_slice());
    let mut cfg = NsgaConfig::new(2000);
    cfg.preprocess = Preprocess::Given { u };
    (nsga_odd(&mut s, &cfg).unwrap(), v)
}

fn instance_best(r: &spiked_tensor::optim::RecoveryResult, inst: u8) -> f64 {
    r.candidates
        .iter()
        .filter(|c| c.instance == inst)
        .map(|c| c.error)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn odd_positive_snr_recovers_with_first_instance() {
    let (r, _) = odd_given(1.0, 8);
    assert!(r.error <= 1e-6);
    assert!(instance_best(&r, 2) > instance_best(&r, 1));
    assert_eq!(r.candidates[r.selected.unwrap()].instance, 1);
    assert_eq!(r.candidates.len(), 4);
    assert_eq!(r.samples_used, 2000);
}

#[test]
fn odd_negative_snr_recovers_with_second_instance() {
    let (r, _) = odd_given(-1.0, 9);
    assert!(instance_best(&r, 2) <= 1e-6);
    assert!(instance_best(&r, 1) > 1e-6);
    assert!(r.error <= 1e-6);
    assert!((r.effective_snr.unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn best_candidate_bounds_selection() {
    for seed in 0..4 {
        let d = 6;
        let cfg = StreamConfig::new(
            d,
            5,
            3.0,
            NoiseModel::Gaussian { sigma: 1.0 },
            derive_seed(10, &[seed]),
        );
        let mut s = ObservationStream::new(cfg).unwrap();
        let mut nc = NsgaConfig::new(600);
        nc.preprocess = Preprocess::PartialTrace { n1: 100 };
        nc.selection = if seed % 2 == 0 {
            Selection::RandomPick
        } else {
            Selection::Holdout { fraction: 0.5 }
        };
        let r = nsga_odd(&mut s, &nc).unwrap();
        assert!(r.best_candidate_error() <= r.error);
        assert_eq!(r.samples_used, 700);
        assert!(r.second_trace.is_some());
        if nc.selection == Selection::RandomPick {
            assert!([0, 2].contains(&r.selected.unwrap()));
            assert!(r.candidates.iter().all(|c| c.holdout_score.is_none()));
        } else {
            assert!(r.candidates.iter().all(|c| c.holdout_score.is_some()));
        }
    }
}

#[test]
fn effective_snr_examples() {
    let v = [0.6, 0.8, 0.0];
    assert!((effective_snr(2.0, &v, &v) - 2.0).abs() < 1e-15);
    assert_eq!(effective_snr(2.0, &v, &[0.0, 0.0, 1.0]), 0.0);

    let d = 100;
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let vs = sample_signal(d, &mut r);
    let mut xs: Vec<f64> = (0..1000)
        .map(|_| effective_snr(3.0, vs.as_slice(), sample_signal(d, &mut r).as_slice()).abs())
        .collect();
    xs.sort_by(f64::total_cmp);
    let med = 0.5 * (xs[499] + xs[500]);
    let scale = 3.0 / (d as f64).sqrt();
    assert!(med >= scale / 3.0 && med <= 3.0 * scale, "{med}");
}

#[test]
fn results_are_deterministic_and_serializable() {
    let cfg = StreamConfig::new(5, 4, 2.0, NoiseModel::Rademacher { sigma: 1.0 }, 12);
    let run = || {
        nsga_even(
            &mut ObservationStream::new(cfg.clone()).unwrap(),
            &NsgaConfig::new(300),
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    let (ja, jb) = (
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap(),
    );
    assert_eq!(ja, jb);
    assert!(!ja.contains("wall_time"));
    assert_eq!(a.trace, b.trace);
}

#[test]
fn config_json_accepts_auto_and_numbers() {
    let a: NsgaConfig =
        serde_json::from_str(r#"{"n": 10, "eta0": "auto", "eta_scale": 2.0}"#).unwrap();
    assert_eq!(a.eta0, spiked_tensor::optim::StepSize::AUTO);
    let b: NsgaConfig =
        serde_json::from_str(r#"{"n": 10, "eta0": 0.1, "selection": {"kind": "random_pick"}}"#)
            .unwrap();
    assert_eq!(b.eta0, spiked_tensor::optim::StepSize::Fixed(0.1));
    assert_eq!(b.selection, Selection::RandomPick);
    let c: NsgaConfig =
        serde_json::from_str(r#"{"preprocess": {"kind": "partial_trace", "n1": 40}}"#).unwrap();
    assert_eq!(c.preprocess, Preprocess::PartialTrace { n1: 40 });
    assert_eq!(serde_json::to_value(&a).unwrap()["eta0"], "auto");
}
