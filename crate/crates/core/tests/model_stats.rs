use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spiked_tensor::model::{
    derive_seed, sample_signal, NoiseModel, ObservationStream, StreamConfig,
};
use spiked_tensor::tensor::{rank_one_tensor, tensor_inner};

fn stream(d: usize, k: usize, lambda: f64, sigma: f64, seed: u64) -> ObservationStream {
    ObservationStream::new(StreamConfig::new(
        d,
        k,
        lambda,
        NoiseModel::Gaussian { sigma },
        seed,
    ))
    .unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[test]
fn sampled_signals_are_unit() {
    for seed in 0..50 {
        let v = sample_signal(7, &mut ChaCha8Rng::seed_from_u64(seed));
        let n: f64 = v.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn sampled_signals_are_centered() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let d = 8;
    let n = 100_000;
    let mut mean = vec![0.0; d];
    for _ in 0..n {
        for (m, x) in mean.iter_mut().zip(sample_signal(d, &mut r).as_slice()) {
            *m += x / n as f64;
        }
    }
    let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(norm <= 0.02, "{norm}");
}

/// Box-Muller normals from raw uniforms, independent of the library sampler.
fn brute_unit_first_coord(r: &mut ChaCha8Rng, d: usize) -> f64 {
    let mut z = Vec::with_capacity(d);
    while z.len() < d {
        let (u1, u2): (f64, f64) = (r.random(), r.random());
        let rad = (-2.0 * (1.0 - u1).ln()).sqrt();
        z.push(rad * (std::f64::consts::TAU * u2).cos());
        z.push(rad * (std::f64::consts::TAU * u2).sin());
    }
    z.truncate(d);
    z[0] / z.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn sphere_marginal_matches_brute_force() {
    let d = 50;
    let thr = 1.0 / (d as f64).sqrt();
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let n = 100_000;
    let lib = (0..n)
        .filter(|_| sample_signal(d, &mut r).as_slice()[0].abs() >= thr)
        .count() as f64
        / n as f64;
    let mut r2 = ChaCha8Rng::seed_from_u64(3);
    let m = 1_000_000;
    let brute = (0..m)
        .filter(|_| brute_unit_first_coord(&mut r2, d).abs() >= thr)
        .count() as f64
        / m as f64;
    assert!((lib - brute).abs() <= 0.05, "{lib} vs {brute}");
}

#[test]
fn noiseless_observation_is_the_signal() {
    let mut s = stream(4, 3, 2.5, 0.0, 4);
    let want = {
        let mut t = rank_one_tensor(s.signal().as_slice(), 3).unwrap();
        t.scale(2.5);
        t
    };
    for _ in 0..3 {
        assert_eq!(s.next_observation().as_slice(), want.as_slice());
    }
    assert_eq!(s.holdout_mean(7).unwrap().as_slice().len(), want.len());
    for (a, b) in s
        .holdout_mean(7)
        .unwrap()
        .as_slice()
        .iter()
        .zip(want.as_slice())
    {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn entrywise_variance_is_sigma_squared() {
    let mut s = stream(2, 3, 1.0, 1.0, 5);
    let signal = s.next_observation().len();
    let n = 10_000;
    let (mut sum, mut sq) = (vec![0.0; signal], vec![0.0; signal]);
    for _ in 0..n {
        for (i, x) in s.next_observation().as_slice().iter().enumerate() {
            sum[i] += x;
            sq[i] += x * x;
        }
    }
    for i in 0..signal {
        let mean = sum[i] / n as f64;
        let var = sq[i] / n as f64 - mean * mean;
        assert!((var - 1.0).abs() <= 0.05, "entry {i}: {var}");
    }
}

#[test]
fn signal_projection_is_unbiased() {
    let mut s = stream(3, 3, 2.0, 1.0, 6);
    let v = rank_one_tensor(s.signal().as_slice(), 3).unwrap();
    let n = 10_000;
    let mean = (0..n)
        .map(|_| tensor_inner(&v, &s.next_observation()).unwrap())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 2.0).abs() <= 0.03, "{mean}");
}

#[test]
fn single_sample_mean_is_the_observation() {
    let mut a = stream(3, 3, 1.0, 1.0, 7);
    let mut b = stream(3, 3, 1.0, 1.0, 7);
    assert_eq!(
        a.holdout_mean(1).unwrap().as_slice(),
        b.next_observation().as_slice()
    );
    assert!(a.holdout_mean(0).is_err());
}

#[test]
fn averaging_shrinks_variance() {
    let reps = 200;
    let var_of = |n: usize| {
        let mut s = stream(2, 3, 1.0, 1.0, derive_seed(8, &[n as u64]));
        let xs: Vec<Vec<f64>> = (0..reps)
            .map(|_| s.holdout_mean(n).unwrap().into_vec())
            .collect();
        let len = xs[0].len();
        (0..len)
            .map(|i| {
                let m = xs.iter().map(|x| x[i]).sum::<f64>() / reps as f64;
                xs.iter().map(|x| (x[i] - m).powi(2)).sum::<f64>() / (reps - 1) as f64
            })
            .sum::<f64>()
            / len as f64
    };
    let ratio = var_of(16) / var_of(1);
    assert!((ratio * 16.0 - 1.0).abs() <= 0.3, "{ratio}");
}

#[test]
fn partial_trace_noiseless_is_signal() {
    let mut s = stream(6, 5, 1.0, 0.0, 9);
    let u = s.partial_trace_preprocess(3).unwrap();
    for (a, b) in u.as_slice().iter().zip(s.signal().as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn partial_trace_correlates_with_signal() {
    let d = 8;
    let overlaps: Vec<f64> = (0..50)
        .map(|t| {
            let mut s = stream(d, 5, 3.0, 1.0, derive_seed(10, &[t]));
            s.partial_trace_preprocess(d * d * 10)
                .unwrap()
                .dot(s.signal().as_slice())
                .abs()
        })
        .collect();
    assert!(median(overlaps) >= 0.5 * (d as f64).powf(-0.25));
}

#[test]
fn partial_trace_under_pure_noise_is_isotropic() {
    let d = 8;
    let overlaps: Vec<f64> = (0..50)
        .map(|t| {
            let mut s = stream(d, 5, 0.0, 1.0, derive_seed(11, &[t]));
            let u = s.partial_trace_preprocess(64).unwrap();
            let n: f64 = u.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            u.dot(s.signal().as_slice()).abs()
        })
        .collect();
    assert!(median(overlaps) <= 3.0 / (d as f64).sqrt());
}

#[test]
fn partial_trace_rejects_even_order() {
    assert!(stream(4, 4, 1.0, 1.0, 12)
        .partial_trace_preprocess(10)
        .is_err());
}

#[test]
fn streams_are_reproducible_and_seed_sensitive() {
    let mut a = stream(3, 3, 1.0, 1.0, 13);
    let mut b = stream(3, 3, 1.0, 1.0, 13);
    let mut c = stream(3, 3, 1.0, 1.0, 14);
    let (x, y, z) = (
        a.next_observation(),
        b.next_observation(),
        c.next_observation(),
    );
    assert_eq!(x.as_slice(), y.as_slice());
    assert_ne!(x.as_slice(), z.as_slice());
}

#[test]
fn aux_draws_do_not_shift_noise() {
    let mut a = stream(3, 3, 1.0, 1.0, 15);
    let mut b = stream(3, 3, 1.0, 1.0, 15);
    for _ in 0..10 {
        let _: f64 = b.aux_rng().random();
    }
    assert_eq!(
        a.next_observation().as_slice(),
        b.next_observation().as_slice()
    );
}

#[test]
fn noise_models_have_requested_variance() {
    for model in [
        NoiseModel::Gaussian { sigma: 2.0 },
        NoiseModel::Rademacher { sigma: 2.0 },
        NoiseModel::Uniform { sigma: 2.0 },
    ] {
        let mut r = ChaCha8Rng::seed_from_u64(16);
        let mut buf = vec![0.0; 200_000];
        model.add_noise(&mut r, &mut buf);
        let m = buf.iter().sum::<f64>() / buf.len() as f64;
        let v = buf.iter().map(|x| (x - m).powi(2)).sum::<f64>() / buf.len() as f64;
        assert!(m.abs() < 0.03, "{} mean {m}", model.name());
        assert!((v / 4.0 - 1.0).abs() < 0.02, "{} var {v}", model.name());
    }
}

#[test]
fn config_validation() {
    let ok = StreamConfig::new(3, 3, 1.0, NoiseModel::Gaussian { sigma: 1.0 }, 0);
    assert!(ok.validate().is_ok());
    assert!(StreamConfig { d: 0, ..ok.clone() }.validate().is_err());
    assert!(StreamConfig {
        lambda: -1.0,
        ..ok.clone()
    }
    .validate()
    .is_err());
    assert!(StreamConfig {
        noise: NoiseModel::Uniform { sigma: -1.0 },
        ..ok.clone()
    }
    .validate()
    .is_err());
    assert!(ok.clone().with_signal(vec![1.0, 0.0]).validate().is_err());
    assert!(StreamConfig {
        element_budget: Some(26),
        ..ok.clone()
    }
    .validate()
    .is_err());
    let json =
        r#"{"d": 3, "k": 3, "lambda": 1.0, "noise": {"kind": "rademacher_iid", "sigma": 0.5}}"#;
    let parsed: StreamConfig = serde_json::from_str(json).unwrap();
    assert_eq!(parsed.noise, NoiseModel::Rademacher { sigma: 0.5 });
}
