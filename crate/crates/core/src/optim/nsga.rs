use std::time::Instant;

use rand::Rng;

use super::{
    alignment, default_eta0_even, default_t1, extract_estimate, recovery_error, step_schedule,
    Candidate, NsgaConfig, Preprocess, RecoveryResult, RunTrace, Selection, StepSize, TraceRecord,
    COLLAPSE_NORM,
};
use crate::error::{Error, Result};
use crate::model::{sample_signal, ObservationStream};
use crate::tensor::{
    mode1_contract, reward_and_gradient, vector_reward, DenseTensor, EigenOptions, SquareMatrix,
    UnitVector,
};

/// One NSGA update on `sign · ⟨W^{⊗m}, T⟩` for `T` of even order `2m`:
///
/// `W ← (1 − η(2m−4)·r / (2‖W‖^m))·W + η/‖W‖^{m−2} · ∇`,
///
/// where `r` and `∇` are the signed reward and its gradient at `W`.
/// Returns the signed reward.
pub fn nsga_step(w: &mut SquareMatrix, t: &DenseTensor, eta: f64, sign: f64) -> Result<f64> {
    let order = t.order() as f64;
    let half = (t.order() / 2) as i32;
    let norm = w.frobenius_norm();
    let (reward, grad) = reward_and_gradient(t, w)?;
    let reward = sign * reward;
    let shift = 1.0 - eta * (order - 4.0) * reward / (2.0 * norm.powi(half));
    let gain = sign * eta / norm.powi(half - 2);
    w.combine(shift, gain, &grad);
    Ok(reward)
}

/// `λ⟨v_*, u⟩`, the signal strength of `T(u)`.
pub fn effective_snr(lambda: f64, vstar: &[f64], u: &[f64]) -> f64 {
    lambda * crate::tensor::dot(vstar, u)
}

/// Single optimizer instance: parameter, reward sign and trace.
struct Instance {
    w: SquareMatrix,
    sign: f64,
    trace: RunTrace,
}

impl Instance {
    fn new(d: usize, sign: f64) -> Self {
        Instance {
            w: SquareMatrix::identity(d),
            sign,
            trace: RunTrace::new(),
        }
    }

    fn check(&self, t: usize, eta: f64) -> Result<()> {
        if !self.w.is_finite() {
            return Err(Error::Divergence {
                t,
                eta,
                trace: Box::new(self.trace.clone()),
            });
        }
        let norm = self.w.frobenius_norm();
        if norm < COLLAPSE_NORM {
            return Err(Error::NumericalCollapse {
                t,
                norm,
                trace: Box::new(self.trace.clone()),
            });
        }
        Ok(())
    }

    /// `(α, ‖W‖_F, recovery error of the current estimate)`.
    fn snapshot(&self, vstar: &[f64]) -> (f64, f64, Option<f64>) {
        let alpha = alignment(vstar, &self.w).unwrap_or(0.0);
        let error = extract_estimate(&self.w, EigenOptions::default())
            .ok()
            .and_then(|v| recovery_error(v.as_slice(), vstar).ok());
        (alpha, self.w.frobenius_norm(), error)
    }

    fn step(
        &mut self,
        t: usize,
        eta: f64,
        obs: &DenseTensor,
        vstar: &[f64],
        stride: usize,
    ) -> Result<()> {
        self.check(t, eta)?;
        let before = (t.is_multiple_of(stride)).then(|| self.snapshot(vstar));
        let reward = nsga_step(&mut self.w, obs, eta, self.sign)?;
        if let Some((alpha, frob_norm, error)) = before {
            self.trace.push(TraceRecord {
                t,
                eta,
                alpha,
                frob_norm,
                reward: Some(reward),
                error,
            });
        }
        Ok(())
    }

    fn finish(mut self, steps: usize, eta: f64, vstar: &[f64]) -> Result<(UnitVector, RunTrace)> {
        self.check(steps, eta)?;
        let (alpha, frob_norm, error) = self.snapshot(vstar);
        self.trace.push(TraceRecord {
            t: steps,
            eta,
            alpha,
            frob_norm,
            reward: None,
            error,
        });
        let v = extract_estimate(&self.w, EigenOptions::default())?;
        Ok((v, self.trace))
    }
}

fn resolve_eta0(cfg: &NsgaConfig, auto: impl FnOnce() -> f64) -> f64 {
    match cfg.eta0 {
        StepSize::Fixed(e) => e,
        StepSize::Auto(_) => cfg.eta_scale * auto(),
    }
}

/// NSGA for even `k ≥ 4`: starts from `W = I`, takes `N` stochastic steps and
/// returns the top eigenvector of `W + Wᵀ`.
pub fn nsga_even(stream: &mut ObservationStream, cfg: &NsgaConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let (d, k) = (stream.dim(), stream.order());
    if k % 2 != 0 || k < 4 {
        return Err(Error::InvalidOrder {
            order: k,
            reason: "NSGA needs an even order >= 4",
        });
    }
    let started = Instant::now();
    let first_sample = stream.emitted();
    let n = cfg.n;
    let eta0 = resolve_eta0(cfg, || default_eta0_even(d, k, stream.lambda(), n));
    let t1 = cfg.t1.unwrap_or_else(|| default_t1(n));
    let stride = cfg.trace_stride(n);
    let vstar = stream.signal().clone();

    let mut inst = Instance::new(d, 1.0);
    let mut obs = DenseTensor::zeros_with_budget(k, d, stream.config().budget())?;
    for t in 0..n {
        let eta = step_schedule(t, eta0, t1);
        stream.next_observation_into(&mut obs)?;
        inst.step(t, eta, &obs, vstar.as_slice(), stride)?;
    }
    let (estimate, trace) = inst.finish(n, step_schedule(n, eta0, t1), vstar.as_slice())?;
    let error = recovery_error(estimate.as_slice(), vstar.as_slice())?;
    Ok(RecoveryResult {
        method: "nsga".into(),
        estimate,
        error,
        samples_used: stream.emitted() - first_sample,
        seed: stream.config().seed,
        eta0,
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

/// Two-instance NSGA for odd `k ≥ 5`.
///
/// Both instances run on the same contracted observation `T(u)` each step,
/// one ascending `+R` and the other `−R`. Preprocessing samples (partial
/// trace) come first, then `N − h` iterations, then `h = ⌈fraction·N⌉` holdout
/// samples when selecting by holdout.
pub fn nsga_odd(stream: &mut ObservationStream, cfg: &NsgaConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let (d, k) = (stream.dim(), stream.order());
    if k % 2 == 0 || k < 5 {
        return Err(Error::InvalidOrder {
            order: k,
            reason: "bi-threaded NSGA needs an odd order >= 5",
        });
    }
    let started = Instant::now();
    let first_sample = stream.emitted();
    let vstar = stream.signal().clone();

    let (u, overlap_guess) = match &cfg.preprocess {
        Preprocess::RandomUnit => (sample_signal(d, stream.aux_rng()), (d as f64).powf(-0.5)),
        Preprocess::PartialTrace { n1 } => (
            stream.partial_trace_preprocess(*n1)?,
            (d as f64).powf(-0.25),
        ),
        Preprocess::Given { u } => {
            if u.len() != d {
                return Err(Error::config(format!(
                    "preprocess vector has {} entries, expected {d}",
                    u.len()
                )));
            }
            (UnitVector::normalize(u.clone())?, 1.0)
        }
    };

    let holdout = match cfg.selection {
        Selection::Holdout { fraction } => (fraction * cfg.n as f64).ceil() as usize,
        Selection::RandomPick => 0,
    };
    if holdout >= cfg.n {
        return Err(Error::config(format!(
            "N = {} leaves no iterations after a holdout of {holdout}",
            cfg.n
        )));
    }
    let steps = cfg.n - holdout;
    let eta0 = resolve_eta0(cfg, || {
        default_eta0_even(d, k - 1, stream.lambda() * overlap_guess, steps)
    });
    let t1 = cfg.t1.unwrap_or_else(|| default_t1(steps));
    let stride = cfg.trace_stride(steps);

    let mut plus = Instance::new(d, 1.0);
    let mut minus = Instance::new(d, -1.0);
    let mut obs = DenseTensor::zeros_with_budget(k, d, stream.config().budget())?;
    for t in 0..steps {
        let eta = step_schedule(t, eta0, t1);
        stream.next_observation_into(&mut obs)?;
        let reduced = mode1_contract(&obs, u.as_slice())?;
        plus.step(t, eta, &reduced, vstar.as_slice(), stride)?;
        minus.step(t, eta, &reduced, vstar.as_slice(), stride)?;
    }
    let eta_end = step_schedule(steps, eta0, t1);
    let (v1, trace1) = plus.finish(steps, eta_end, vstar.as_slice())?;
    let (v2, trace2) = minus.finish(steps, eta_end, vstar.as_slice())?;

    let mut candidates = Vec::with_capacity(4);
    for (instance, v) in [(1u8, &v1), (2u8, &v2)] {
        for sign in [1i8, -1] {
            let vector = if sign > 0 { v.clone() } else { v.negated() };
            let error = recovery_error(vector.as_slice(), vstar.as_slice())?;
            candidates.push(Candidate {
                instance,
                sign,
                vector,
                error,
                holdout_score: None,
            });
        }
    }

    let selected = match cfg.selection {
        Selection::RandomPick => {
            if stream.aux_rng().random_bool(0.5) {
                0
            } else {
                2
            }
        }
        Selection::Holdout { .. } => {
            let estimate_tensor = stream.holdout_mean(holdout)?;
            let mut best = (0, f64::NEG_INFINITY);
            for (i, c) in candidates.iter_mut().enumerate() {
                let score = vector_reward(&estimate_tensor, c.vector.as_slice())?;
                c.holdout_score = Some(score);
                if score > best.1 {
                    best = (i, score);
                }
            }
            best.0
        }
    };
    let estimate = candidates[selected].vector.clone();
    let error = candidates[selected].error;
    Ok(RecoveryResult {
        method: "nsga_odd".into(),
        estimate,
        error,
        samples_used: stream.emitted() - first_sample,
        seed: stream.config().seed,
        eta0,
        t1,
        candidates,
        selected: Some(selected),
        effective_snr: Some(effective_snr(
            stream.lambda(),
            vstar.as_slice(),
            u.as_slice(),
        )),
        preprocess_vector: Some(u),
        trace: trace1,
        second_trace: Some(trace2),
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
