//! Spiked tensor observations `T = λ v_*^{⊗k} + E`.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded with
//! `seed_from_u64(seed)`. A stream keeps three ChaCha word streams off the
//! same key so that algorithm-side draws never shift the noise sequence:
//!
//! | ChaCha stream | use |
//! |---|---|
//! | 0 | noise entries |
//! | 1 | planted signal (when not given explicitly) |
//! | 2 | algorithm randomness: initial vectors, random picks |
//!
//! Per-trial seeds come from [`derive_seed`], a SplitMix64 chain.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    element_count, partial_trace_vector, rank_one_tensor_with_budget, DenseTensor, UnitVector,
    DEFAULT_ELEMENT_BUDGET,
};

/// Name recorded in configs and results.
pub const RNG_NAME: &str = "chacha8";

const NOISE_STREAM: u64 = 0;
const SIGNAL_STREAM: u64 = 1;
const AUX_STREAM: u64 = 2;

/// Entrywise i.i.d. zero-mean noise with variance `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `N(0, σ²)`.
    #[serde(alias = "gaussian_iid")]
    Gaussian { sigma: f64 },
    /// `±σ` with equal probability.
    #[serde(alias = "rademacher_iid")]
    Rademacher { sigma: f64 },
    /// Uniform on `[−σ√3, σ√3]`.
    #[serde(alias = "uniform_iid")]
    Uniform { sigma: f64 },
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma }
            | NoiseModel::Rademacher { sigma }
            | NoiseModel::Uniform { sigma } => sigma,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Gaussian { .. } => "gaussian",
            NoiseModel::Rademacher { .. } => "rademacher",
            NoiseModel::Uniform { .. } => "uniform",
        }
    }

    /// `σ = 0` is accepted as a noiseless mode.
    pub fn validate(&self) -> Result<()> {
        let s = self.sigma();
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::config(format!(
                "noise sigma must be finite and >= 0, got {s}"
            )));
        }
        Ok(())
    }

    /// Adds one fresh noise draw to every entry of `out`.
    pub fn add_noise<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            NoiseModel::Gaussian { sigma } => {
                for x in out {
                    let z: f64 = StandardNormal.sample(rng);
                    *x += sigma * z;
                }
            }
            NoiseModel::Rademacher { sigma } => {
                for x in out {
                    *x += if rng.random::<bool>() { sigma } else { -sigma };
                }
            }
            NoiseModel::Uniform { sigma } => {
                let a = sigma * 3f64.sqrt();
                for x in out {
                    *x += rng.random_range(-1.0..1.0) * a;
                }
            }
        }
    }
}

/// Configuration of an observation stream, in the JSON form
/// `{d, k, lambda, noise: {kind, sigma}, seed, signal?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub d: usize,
    pub k: usize,
    pub lambda: f64,
    pub noise: NoiseModel,
    #[serde(default)]
    pub seed: u64,
    /// Planted vector; sampled uniformly from the sphere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_budget: Option<usize>,
}

impl StreamConfig {
    pub fn new(d: usize, k: usize, lambda: f64, noise: NoiseModel, seed: u64) -> Self {
        StreamConfig {
            d,
            k,
            lambda,
            noise,
            seed,
            signal: None,
            element_budget: None,
        }
    }

    pub fn with_signal(mut self, signal: Vec<f64>) -> Self {
        self.signal = Some(signal);
        self
    }

    pub fn budget(&self) -> usize {
        self.element_budget.unwrap_or(DEFAULT_ELEMENT_BUDGET)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::config("d and k must be positive"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        self.noise.validate()?;
        if let Some(s) = &self.signal {
            if s.len() != self.d {
                return Err(Error::config(format!(
                    "signal has {} entries, expected d = {}",
                    s.len(),
                    self.d
                )));
            }
        }
        element_count(self.k, self.d, self.budget())?;
        Ok(())
    }

    fn warn_outside_assumptions(&self) {
        if self.d < self.k {
            warn!("d = {} < k = {}: outside the d >= k regime", self.d, self.k);
        }
        let upper = (self.d as f64).powf(self.k as f64 / 4.0);
        if self.noise.sigma() > 0.0 && (self.lambda < 1.0 || self.lambda > upper) {
            warn!(
                "lambda = {} outside the window [1, d^(k/4) = {upper:.3}]",
                self.lambda
            );
        }
    }
}

/// Isotropic unit vector: a standard Gaussian vector, normalized.
pub fn sample_signal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(u) = UnitVector::normalize(v) {
            return u;
        }
    }
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a sub-run: `h ← splitmix64(h ⊕ splitmix64(part))` over `parts`,
/// starting from `h = master`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(master, |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// A seeded source of i.i.d. spiked tensor observations.
#[derive(Debug, Clone)]
pub struct ObservationStream {
    config: StreamConfig,
    signal: UnitVector,
    signal_tensor: DenseTensor,
    noise_rng: ChaCha8Rng,
    aux_rng: ChaCha8Rng,
    emitted: u64,
}

impl ObservationStream {
    pub fn new(config: StreamConfig) -> Result<Self> {
        config.validate()?;
        config.warn_outside_assumptions();
        let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
        noise_rng.set_stream(NOISE_STREAM);
        let mut aux_rng = noise_rng.clone();
        aux_rng.set_stream(AUX_STREAM);

        let signal = match &config.signal {
            Some(s) => UnitVector::normalize(s.clone())?,
            None => {
                let mut rng = noise_rng.clone();
                rng.set_stream(SIGNAL_STREAM);
                sample_signal(config.d, &mut rng)
            }
        };
        let mut signal_tensor =
            rank_one_tensor_with_budget(signal.as_slice(), config.k, config.budget())?;
        signal_tensor.scale(config.lambda);
        Ok(ObservationStream {
            config,
            signal,
            signal_tensor,
            noise_rng,
            aux_rng,
            emitted: 0,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    /// Ground truth `v_*`.
    pub fn signal(&self) -> &UnitVector {
        &self.signal
    }

    pub fn order(&self) -> usize {
        self.config.k
    }

    pub fn dim(&self) -> usize {
        self.config.d
    }

    pub fn lambda(&self) -> f64 {
        self.config.lambda
    }

    /// Observations handed out so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Generator for algorithm-side randomness; independent of the noise.
    pub fn aux_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.aux_rng
    }

    pub fn next_observation(&mut self) -> DenseTensor {
        let mut t = self.signal_tensor.clone();
        self.fill_noise(&mut t);
        t
    }

    /// Overwrites `out` with the next observation, reusing its buffer.
    pub fn next_observation_into(&mut self, out: &mut DenseTensor) -> Result<()> {
        if out.order() != self.config.k || out.dim() != self.config.d {
            return Err(Error::ShapeMismatch(
                "observation buffer has the wrong shape".into(),
            ));
        }
        out.as_mut_slice()
            .copy_from_slice(self.signal_tensor.as_slice());
        self.fill_noise(out);
        Ok(())
    }

    fn fill_noise(&mut self, t: &mut DenseTensor) {
        if self.config.noise.sigma() > 0.0 {
            self.config
                .noise
                .add_noise(&mut self.noise_rng, t.as_mut_slice());
        }
        self.emitted += 1;
    }

    /// Entrywise mean of `n` fresh observations.
    pub fn holdout_mean(&mut self, n: usize) -> Result<DenseTensor> {
        if n == 0 {
            return Err(Error::config("holdout size must be at least 1"));
        }
        let mut mean = self.next_observation();
        let mut buf = mean.clone();
        for i in 2..=n {
            self.next_observation_into(&mut buf)?;
            let w = 1.0 / i as f64;
            for (m, x) in mean.as_mut_slice().iter_mut().zip(buf.as_slice()) {
                *m += (x - *m) * w;
            }
        }
        Ok(mean)
    }

    /// Normalized partial trace of the mean of `n1` observations (odd `k`).
    pub fn partial_trace_preprocess(&mut self, n1: usize) -> Result<UnitVector> {
        if self.config.k.is_multiple_of(2) {
            return Err(Error::InvalidOrder {
                order: self.config.k,
                reason: "partial-trace preprocessing needs an odd order",
            });
        }
        let mean = self.holdout_mean(n1)?;
        let v = partial_trace_vector(&mean)?;
        UnitVector::normalize(v).map_err(|_| Error::DegeneratePreprocess)
    }
}
