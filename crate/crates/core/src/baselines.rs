//! Vector-parameterized stochastic gradient ascent on `⟨v^{⊗k}, T⟩`:
//! plain, projected onto the sphere, and heavy-ball accelerated. All three
//! share the NSGA step schedule.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_signal, ObservationStream};
use crate::optim::{
    default_t1, recovery_error, step_schedule, RecoveryResult, RunTrace, TraceRecord,
};
use crate::tensor::{dot, vector_gradient, vector_reward, DenseTensor, UnitVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSgaConfig {
    #[serde(default)]
    pub n: usize,
    pub eta0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<usize>,
    /// Heavy-ball coefficient, accelerated variant only.
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    /// Renormalize after every plain SGA step.
    #[serde(default)]
    pub normalize_each_step: bool,
    /// Starting vector; uniform on the sphere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<usize>,
}

fn default_momentum() -> f64 {
    0.9
}

impl VectorSgaConfig {
    pub fn new(n: usize, eta0: f64) -> Self {
        VectorSgaConfig {
            n,
            eta0,
            t1: None,
            momentum: default_momentum(),
            normalize_each_step: false,
            init: None,
            trace_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 > 0.0) || !self.eta0.is_finite() {
            return Err(Error::config(format!(
                "eta0 must be positive, got {}",
                self.eta0
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.t1 == Some(0) || self.trace_every == Some(0) {
            return Err(Error::config("T1 and trace_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Plain,
    Projected,
    Accelerated,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::Plain => "sga",
            Variant::Projected => "sga_projected",
            Variant::Accelerated => "sga_accelerated",
        }
    }
}

/// Plain SGA: `v ← v + η∇`, normalized only for the final estimate.
pub fn sga_vector(stream: &mut ObservationStream, cfg: &VectorSgaConfig) -> Result<RecoveryResult> {
    run(stream, cfg, Variant::Plain)
}

/// SGA with projection onto the unit sphere after every step.
pub fn sga_projected(
    stream: &mut ObservationStream,
    cfg: &VectorSgaConfig,
) -> Result<RecoveryResult> {
    run(stream, cfg, Variant::Projected)
}

/// Heavy ball: `m ← μm + ∇`, `v ← normalize(v + ηm)`, `m⁰ = 0`.
pub fn sga_accelerated(
    stream: &mut ObservationStream,
    cfg: &VectorSgaConfig,
) -> Result<RecoveryResult> {
    run(stream, cfg, Variant::Accelerated)
}

fn run(
    stream: &mut ObservationStream,
    cfg: &VectorSgaConfig,
    variant: Variant,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    let (d, k) = (stream.dim(), stream.order());
    if k < 2 {
        return Err(Error::InvalidOrder {
            order: k,
            reason: "vector SGA needs order >= 2",
        });
    }
    let started = Instant::now();
    let first_sample = stream.emitted();
    let vstar = stream.signal().clone();
    let mut v = match &cfg.init {
        Some(init) if init.len() == d => UnitVector::normalize(init.clone())?.into_vec(),
        Some(init) => {
            return Err(Error::config(format!(
                "init has {} entries, expected {d}",
                init.len()
            )))
        }
        None => sample_signal(d, stream.aux_rng()).into_vec(),
    };
    let t1 = cfg.t1.unwrap_or_else(|| default_t1(cfg.n));
    let stride = cfg.trace_every.unwrap_or((cfg.n / 200).max(1));
    let normalize_each = match variant {
        Variant::Plain => cfg.normalize_each_step,
        Variant::Projected | Variant::Accelerated => true,
    };

    let mut momentum = vec![0.0; d];
    let mut trace = RunTrace::new();
    let mut obs = DenseTensor::zeros_with_budget(k, d, stream.config().budget())?;
    for t in 0..cfg.n {
        let eta = step_schedule(t, cfg.eta0, t1);
        stream.next_observation_into(&mut obs)?;
        let grad = vector_gradient(&obs, &v)?;
        if t % stride == 0 {
            let reward = vector_reward(&obs, &v)?;
            trace.push(record(t, eta, &v, vstar.as_slice(), Some(reward)));
        }
        let direction = if variant == Variant::Accelerated {
            for (m, g) in momentum.iter_mut().zip(&grad) {
                *m = cfg.momentum * *m + g;
            }
            &momentum
        } else {
            &grad
        };
        for (x, g) in v.iter_mut().zip(direction) {
            *x += eta * g;
        }
        let norm = dot(&v, &v).sqrt();
        if !norm.is_finite() {
            return Err(Error::Divergence {
                t,
                eta,
                trace: Box::new(trace),
            });
        }
        if norm == 0.0 {
            return Err(Error::NumericalCollapse {
                t,
                norm,
                trace: Box::new(trace),
            });
        }
        if normalize_each {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
    let eta_end = step_schedule(cfg.n, cfg.eta0, t1);
    trace.push(record(cfg.n, eta_end, &v, vstar.as_slice(), None));
    let estimate = UnitVector::normalize(v)?;
    let error = recovery_error(estimate.as_slice(), vstar.as_slice())?;
    Ok(RecoveryResult {
        method: variant.name().into(),
        estimate,
        error,
        samples_used: stream.emitted() - first_sample,
        seed: stream.config().seed,
        eta0: cfg.eta0,
        t1,
        candidates: Vec::new(),
        selected: None,
        preprocess_vector: None,
        effective_snr: None,
        trace,
        second_trace: None,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// For vectors, `alpha` is the signed overlap `⟨v/‖v‖, v_*⟩` and `frob_norm`
/// is `‖v‖`.
fn record(t: usize, eta: f64, v: &[f64], vstar: &[f64], reward: Option<f64>) -> TraceRecord {
    let norm = dot(v, v).sqrt();
    let overlap = (dot(v, vstar) / norm).clamp(-1.0, 1.0);
    TraceRecord {
        t,
        eta,
        alpha: overlap,
        frob_norm: norm,
        reward,
        error: Some(2.0 - 2.0 * overlap.abs()),
    }
}
