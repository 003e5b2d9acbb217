//! Normalized stochastic gradient ascent on an overparameterized `d x d`
//! parameter, its two-instance odd-order variant, and the shared metrics.

mod nsga;
mod trace;

pub use nsga::{effective_snr, nsga_even, nsga_odd, nsga_step};
pub use trace::{RunTrace, TraceRecord, TRACE_CSV_HEADER};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{sym_top_eigenvector, EigenOptions, SquareMatrix, UnitVector};

/// Below this Frobenius norm the parameter is treated as collapsed.
pub const COLLAPSE_NORM: f64 = 1e-100;

/// Tolerance on unit inputs to [`recovery_error`].
const RECOVERY_UNIT_TOL: f64 = 1e-9;

/// Initial step size: a number, or `"auto"` for the theory-driven default
/// multiplied by `eta_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSize {
    Fixed(f64),
    Auto(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl StepSize {
    pub const AUTO: StepSize = StepSize::Auto(AutoKeyword::Auto);
}

impl Default for StepSize {
    fn default() -> Self {
        Self::AUTO
    }
}

/// How the odd-order variant picks its output among the two instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    /// Either instance with probability 1/2.
    RandomPick,
    /// Reserve `⌈fraction·N⌉` samples, average them and keep the candidate
    /// `v` in `{±v̂₁, ±v̂₂}` maximizing `⟨v^{⊗k}, T_avg⟩`.
    Holdout {
        #[serde(default = "half")]
        fraction: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Holdout { fraction: 0.5 }
    }
}

/// Source of the contraction vector `u` for odd orders.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preprocess {
    /// Uniform on the sphere, drawn from the run's auxiliary generator.
    #[default]
    RandomUnit,
    /// Normalized partial trace of the mean of `n1` extra observations.
    PartialTrace { n1: usize },
    /// Fixed vector (normalized on use).
    Given { u: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsgaConfig {
    /// Sample budget `N` (iterations plus holdout for odd orders).
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub eta0: StepSize,
    /// Proportionality constant applied to the automatic step size.
    #[serde(default = "one")]
    pub eta_scale: f64,
    /// Length of the constant-step phase; defaults to `⌊N/ln N⌋`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<usize>,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub preprocess: Preprocess,
    /// Trace stride; defaults to `max(1, N/200)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl Default for NsgaConfig {
    fn default() -> Self {
        NsgaConfig::new(0)
    }
}

impl NsgaConfig {
    pub fn new(n: usize) -> Self {
        NsgaConfig {
            n,
            eta0: StepSize::AUTO,
            eta_scale: 1.0,
            t1: None,
            selection: Selection::default(),
            preprocess: Preprocess::default(),
            trace_every: None,
        }
    }

    pub fn with_eta0(mut self, eta0: f64) -> Self {
        self.eta0 = StepSize::Fixed(eta0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("sample budget N must be positive"));
        }
        if let StepSize::Fixed(e) = self.eta0 {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::config(format!("eta0 must be positive, got {e}")));
            }
        }
        if !(self.eta_scale > 0.0) || !self.eta_scale.is_finite() {
            return Err(Error::config("eta_scale must be positive"));
        }
        if self.t1 == Some(0) {
            return Err(Error::config("T1 must be at least 1"));
        }
        if let Selection::Holdout { fraction } = self.selection {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::config(format!(
                    "holdout fraction must be in (0, 1), got {fraction}"
                )));
            }
        }
        if let Preprocess::PartialTrace { n1: 0 } = self.preprocess {
            return Err(Error::config("partial-trace n1 must be at least 1"));
        }
        if self.trace_every == Some(0) {
            return Err(Error::config("trace_every must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn trace_stride(&self, steps: usize) -> usize {
        self.trace_every.unwrap_or((steps / 200).max(1))
    }
}

/// One recovered direction of the odd-order variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// 1 for the `+R` instance, 2 for the `−R` instance.
    pub instance: u8,
    pub sign: i8,
    pub vector: UnitVector,
    pub error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub method: String,
    pub estimate: UnitVector,
    /// `min{‖v̂ − v_*‖², ‖v̂ + v_*‖²}`.
    pub error: f64,
    pub samples_used: u64,
    pub seed: u64,
    pub eta0: f64,
    pub t1: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<Candidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess_vector: Option<UnitVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_snr: Option<f64>,
    #[serde(skip)]
    pub trace: RunTrace,
    /// Trace of the `−R` instance of the odd-order variant.
    #[serde(skip)]
    pub second_trace: Option<RunTrace>,
    /// Kept out of the JSON so result files stay reproducible.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl RecoveryResult {
    /// Smallest candidate error (the estimate's error when there are none).
    pub fn best_candidate_error(&self) -> f64 {
        self.candidates
            .iter()
            .map(|c| c.error)
            .fold(self.error, f64::min)
    }
}

/// `α(v, W) = vᵀWv / ‖W‖_F`, in `[−1, 1]`.
pub fn alignment(v: &[f64], w: &SquareMatrix) -> Result<f64> {
    let norm = w.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((w.quad_form(v) / norm).clamp(-1.0, 1.0))
}

/// Sign-invariant squared distance `2 − 2|⟨v̂, v_*⟩|`.
pub fn recovery_error(vhat: &[f64], vstar: &[f64]) -> Result<f64> {
    if vhat.len() != vstar.len() {
        return Err(Error::ShapeMismatch(
            "estimate and truth differ in length".into(),
        ));
    }
    for v in [vhat, vstar] {
        let norm = crate::tensor::dot(v, v).sqrt();
        if !((norm - 1.0).abs() <= RECOVERY_UNIT_TOL) {
            return Err(Error::NotUnit { norm });
        }
    }
    let c = crate::tensor::dot(vhat, vstar).abs().min(1.0);
    Ok(2.0 - 2.0 * c)
}

/// `η_t = η₀ · 2^{−⌊t/T₁⌋}`.
pub fn step_schedule(t: usize, eta0: f64, t1: usize) -> f64 {
    let halvings = t / t1.max(1);
    if halvings > 1100 {
        return 0.0;
    }
    eta0 * 0.5f64.powi(halvings as i32)
}

/// `⌊N / ln N⌋`, at least 1.
pub fn default_t1(n: usize) -> usize {
    if n < 3 {
        return n.max(1);
    }
    ((n as f64 / (n as f64).ln()).floor() as usize).max(1)
}

/// Theory-driven initial step size for even `k` with all constants set to 1:
/// `max{ln N / k, k d^{k/4−1} / max{k(k−4), 1/ln d}} · ⌈ln N⌉ / (λN)`.
pub fn default_eta0_even(d: usize, k: usize, lambda: f64, n: usize) -> f64 {
    let (d, k, nf) = (d as f64, k as f64, n as f64);
    let ln_n = nf.ln();
    let first = ln_n / k;
    let second = k * d.powf(k / 4.0 - 1.0) / (k * (k - 4.0)).max(1.0 / d.ln());
    debug!("default eta0 branches: ln N / k = {first}, second = {second}");
    first.max(second) * ln_n.ceil() / (lambda * nf)
}

/// Top eigenvector of `W + Wᵀ`.
pub fn extract_estimate(w: &SquareMatrix, opts: EigenOptions) -> Result<UnitVector> {
    sym_top_eigenvector(&w.symmetrized(), opts).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_examples() {
        for d in [1usize, 4, 9] {
            let w = SquareMatrix::identity(d);
            let v = UnitVector::basis(d, 0);
            let a = alignment(v.as_slice(), &w).unwrap();
            assert!((a - 1.0 / (d as f64).sqrt()).abs() < 1e-15);
        }
        let v = [0.6, 0.8];
        assert!((alignment(&v, &SquareMatrix::outer(&v)).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            alignment(&v, &SquareMatrix::zeros(2)),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn recovery_error_examples() {
        let v = [0.6, 0.8];
        assert_eq!(recovery_error(&v, &v).unwrap(), 0.0);
        assert_eq!(recovery_error(&[-0.6, -0.8], &v).unwrap(), 0.0);
        assert_eq!(recovery_error(&[0.8, -0.6], &v).unwrap(), 2.0);
        assert!(recovery_error(&[1.0, 1.0], &v).is_err());
    }

    #[test]
    fn schedule_halves_every_t1() {
        assert_eq!(step_schedule(0, 0.3, 10), 0.3);
        assert_eq!(step_schedule(9, 0.3, 10), 0.3);
        assert_eq!(step_schedule(10, 0.3, 10), 0.15);
        assert_eq!(step_schedule(20, 0.3, 10), 0.075);
    }

    #[test]
    fn t1_defaults() {
        assert_eq!(default_t1(2000), 263);
        assert_eq!(default_t1(1), 1);
        assert!(default_t1(3) >= 1);
    }

    #[test]
    fn eta0_at_order_four() {
        // k = 4: the second branch is 4·d⁰/(1/ln d) = 4 ln d
        let (d, n, lambda) = (16usize, 10_000usize, 1.0);
        let ln_n = (n as f64).ln();
        let expect = (ln_n / 4.0).max(4.0 * (d as f64).ln()) * ln_n.ceil() / (lambda * n as f64);
        assert!((default_eta0_even(d, 4, lambda, n) - expect).abs() < 1e-15);
        // 4 ln 16 = 11.0904 dominates ln(1e4)/4 = 2.3026; ⌈ln 1e4⌉ = 10
        assert!((default_eta0_even(d, 4, lambda, n) - 0.011_090_354_888_959_125).abs() < 1e-15);
    }

    #[test]
    fn eta0_decreases_with_n() {
        assert!(default_eta0_even(10, 4, 1.0, 1_000_000) < default_eta0_even(10, 4, 1.0, 1_000));
        assert!(default_eta0_even(10, 6, 2.0, 1_000_000) < default_eta0_even(10, 6, 2.0, 1_000));
    }

    #[test]
    fn config_json() {
        let c: NsgaConfig =
            serde_json::from_str(r#"{"n": 100, "eta0": "auto", "eta_scale": 2.0}"#).unwrap();
        assert_eq!(c.eta0, StepSize::AUTO);
        let c: NsgaConfig = serde_json::from_str(
            r#"{"n": 100, "eta0": 0.1, "selection": {"kind": "random_pick"},
                "preprocess": {"kind": "partial_trace", "n1": 640}}"#,
        )
        .unwrap();
        assert_eq!(c.eta0, StepSize::Fixed(0.1));
        assert_eq!(c.selection, Selection::RandomPick);
        assert_eq!(c.preprocess, Preprocess::PartialTrace { n1: 640 });
        let bad = NsgaConfig {
            selection: Selection::Holdout { fraction: 1.0 },
            ..NsgaConfig::new(10)
        };
        assert!(bad.validate().is_err());
        assert!(NsgaConfig::new(0).validate().is_err());
    }
}
