//! Numerical checks: finite-difference gradient oracles, the first-order
//! term of the alignment expansion, and moment/tail checks on the noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_signal, NoiseModel};
use crate::tensor::{
    contract_matrix_power, dot, reward_gradient, vector_gradient, vector_reward, DenseTensor,
    SquareMatrix,
};

/// Step used by the gradient suites.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance of the gradient suites.
pub const GRADIENT_TOL: f64 = 1e-5;
/// Tolerance of the alignment first-order check.
pub const TAYLOR_TOL: f64 = 1e-6;
/// Step sizes for the Richardson-extrapolated directional derivative.
pub const RICHARDSON_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub trials: usize,
    pub pass: bool,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckReport {
    pub fn table_row(&self) -> String {
        format!(
            "{:<36} {:>6} {:>12.3e} {:>12.3e} {:>10.1e}  {}",
            self.name,
            self.trials,
            self.max_abs_error,
            self.max_rel_error,
            self.tolerance,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }

    pub fn table_header() -> String {
        format!(
            "{:<36} {:>6} {:>12} {:>12} {:>10}  result",
            "check", "trials", "max_abs", "max_rel", "tol"
        )
    }
}

/// Central differences of `W ↦ ⟨W^{⊗m}, T⟩`, entry by entry.
pub fn fd_gradient_matrix(t: &DenseTensor, w: &SquareMatrix, h: f64) -> Result<SquareMatrix> {
    if !(h > 0.0) {
        return Err(Error::config("finite-difference step must be positive"));
    }
    let d = w.dim();
    let mut out = SquareMatrix::zeros(d);
    let mut probe = w.clone();
    for i in 0..d {
        for j in 0..d {
            let base = w.get(i, j);
            probe.set(i, j, base + h);
            let up = contract_matrix_power(t, &probe)?;
            probe.set(i, j, base - h);
            let down = contract_matrix_power(t, &probe)?;
            probe.set(i, j, base);
            out.set(i, j, (up - down) / (2.0 * h));
        }
    }
    Ok(out)
}

/// Central differences of `v ↦ ⟨v^{⊗k}, T⟩`.
pub fn fd_vector_gradient(t: &DenseTensor, v: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::config("finite-difference step must be positive"));
    }
    let mut probe = v.to_vec();
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        probe[i] = v[i] + h;
        let up = vector_reward(t, &probe)?;
        probe[i] = v[i] - h;
        let down = vector_reward(t, &probe)?;
        probe[i] = v[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// `s(W, Q, v) = vᵀQv/‖W‖_F − (vᵀWv)·⟨W, Q⟩/‖W‖_F³`, the derivative of
/// `η ↦ α(v, W + ηQ)` at zero.
pub fn alpha_first_order_term(w: &SquareMatrix, q: &SquareMatrix, v: &[f64]) -> Result<f64> {
    let norm = w.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(q.quad_form(v) / norm - w.quad_form(v) * w.inner(q) / norm.powi(3))
}

/// Forward differences of `η ↦ α(v, W + ηQ)` at the steps in
/// [`RICHARDSON_STEPS`], extrapolated twice to cancel the `O(η)` and `O(η²)`
/// terms. Steps shrink by 10 at each level.
pub fn alpha_directional_derivative(w: &SquareMatrix, q: &SquareMatrix, v: &[f64]) -> Result<f64> {
    let base = unclamped_alpha(v, w)?;
    let mut d = [0.0; 3];
    for (slot, &eta) in d.iter_mut().zip(&RICHARDSON_STEPS) {
        let mut moved = w.clone();
        moved.combine(1.0, eta, q);
        *slot = (unclamped_alpha(v, &moved)? - base) / eta;
    }
    let r01 = (10.0 * d[1] - d[0]) / 9.0;
    let r12 = (10.0 * d[2] - d[1]) / 9.0;
    Ok((100.0 * r12 - r01) / 99.0)
}

fn unclamped_alpha(v: &[f64], w: &SquareMatrix) -> Result<f64> {
    let norm = w.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(w.quad_form(v) / norm)
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn random_tensor<R: Rng + ?Sized>(rng: &mut R, order: usize, d: usize) -> Result<DenseTensor> {
    let len = d.pow(order as u32);
    DenseTensor::from_vec(order, d, gaussian_vec(rng, len))
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> SquareMatrix {
    SquareMatrix::from_vec(d, gaussian_vec(rng, d * d)).expect("finite gaussian entries")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Relative error is `max|G − G_fd| / max|G|` per case (entrywise ratios
/// blow up on near-zero entries).
fn relative(abs: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        abs / scale
    } else {
        abs
    }
}

/// `reward_gradient` against [`fd_gradient_matrix`] on `trials` random
/// Gaussian `(T, W)` pairs of order `2m`.
pub fn matrix_gradient_check(d: usize, m: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let t = random_tensor(&mut rng, 2 * m, d)?;
        let w = random_matrix(&mut rng, d);
        let g = reward_gradient(&t, &w)?;
        let fd = fd_gradient_matrix(&t, &w, FD_STEP)?;
        let abs = max_abs_diff(g.as_slice(), fd.as_slice());
        worst_abs = worst_abs.max(abs);
        worst_rel = worst_rel.max(relative(abs, max_abs(g.as_slice())));
    }
    Ok(CheckReport {
        name: format!("matrix_gradient d={d} m={m}"),
        max_abs_error: worst_abs,
        max_rel_error: worst_rel,
        trials,
        pass: worst_rel <= GRADIENT_TOL,
        tolerance: GRADIENT_TOL,
        detail: format!("central differences, h = {FD_STEP:e}"),
    })
}

/// `vector_gradient` against [`fd_vector_gradient`] at order `k`.
pub fn vector_gradient_check(d: usize, k: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let t = random_tensor(&mut rng, k, d)?;
        let v = gaussian_vec(&mut rng, d);
        let g = vector_gradient(&t, &v)?;
        let fd = fd_vector_gradient(&t, &v, FD_STEP)?;
        let abs = max_abs_diff(&g, &fd);
        worst_abs = worst_abs.max(abs);
        worst_rel = worst_rel.max(relative(abs, max_abs(&g)));
    }
    Ok(CheckReport {
        name: format!("vector_gradient d={d} k={k}"),
        max_abs_error: worst_abs,
        max_rel_error: worst_rel,
        trials,
        pass: worst_rel <= GRADIENT_TOL,
        tolerance: GRADIENT_TOL,
        detail: format!("central differences, h = {FD_STEP:e}"),
    })
}

/// Gradient checks for order `k`: the matrix reward (even `k`) and the vector
/// reward (any `k ≥ 1`).
pub fn gradient_suite(d: usize, k: usize, trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    if k.is_multiple_of(2) {
        out.push(matrix_gradient_check(d, k / 2, trials, seed)?);
    }
    out.push(vector_gradient_check(
        d,
        k,
        trials,
        crate::model::derive_seed(seed, &[k as u64]),
    )?);
    Ok(out)
}

/// [`alpha_first_order_term`] against [`alpha_directional_derivative`] on
/// random Gaussian `(W, Q)` and uniform unit `v`.
pub fn alpha_taylor_check(d: usize, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let w = random_matrix(&mut rng, d);
        let q = random_matrix(&mut rng, d);
        let v = sample_signal(d, &mut rng);
        let s = alpha_first_order_term(&w, &q, v.as_slice())?;
        let fd = alpha_directional_derivative(&w, &q, v.as_slice())?;
        let abs = (s - fd).abs();
        worst_abs = worst_abs.max(abs);
        worst_rel = worst_rel.max(abs / s.abs().max(1.0));
    }
    Ok(CheckReport {
        name: format!("alpha_first_order d={d}"),
        max_abs_error: worst_abs,
        max_rel_error: worst_rel,
        trials,
        pass: worst_rel <= TAYLOR_TOL,
        tolerance: TAYLOR_TOL,
        detail: "Richardson over eta = 1e-3, 1e-4, 1e-5; error relative to max(|s|, 1)".into(),
    })
}

/// Estimates `E[⟨u, flat(E)⟩²]` along `directions` random unit `u` in
/// `R^{d^k}`. Passes when every estimate is at most `4σ²·1.05` and within
/// `σ²·(1 ± ε)`, `ε = max(0.05, 5√(2/n))`.
pub fn noise_moment_check(
    model: NoiseModel,
    d: usize,
    k: usize,
    n_samples: usize,
    directions: usize,
    seed: u64,
) -> Result<CheckReport> {
    model.validate()?;
    if n_samples < 1000 {
        return Err(Error::config(
            "noise_moment_check needs at least 1000 samples",
        ));
    }
    let len = crate::tensor::element_count(k, d, crate::tensor::DEFAULT_ELEMENT_BUDGET)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..directions.max(1))
        .map(|_| sample_signal(len, &mut rng).into_vec())
        .collect();
    let mut second = vec![0.0; dirs.len()];
    let mut e = vec![0.0; len];
    for _ in 0..n_samples {
        e.iter_mut().for_each(|x| *x = 0.0);
        model.add_noise(&mut rng, &mut e);
        for (acc, u) in second.iter_mut().zip(&dirs) {
            let p = dot(u, &e);
            *acc += p * p;
        }
    }
    let s2 = model.sigma().powi(2);
    let estimates: Vec<f64> = second.iter().map(|x| x / n_samples as f64).collect();
    let eps = 0.05f64.max(5.0 * (2.0 / n_samples as f64).sqrt());
    let max_est = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_abs = estimates.iter().map(|x| (x - s2).abs()).fold(0.0, f64::max);
    let max_rel = if s2 > 0.0 { max_abs / s2 } else { max_abs };
    let pass = max_est <= 4.0 * s2 * 1.05 && max_rel <= eps;
    Ok(CheckReport {
        name: format!("noise_moment {} sigma={}", model.name(), model.sigma()),
        max_abs_error: max_abs,
        max_rel_error: max_rel,
        trials: n_samples,
        pass,
        tolerance: eps,
        detail: format!(
            "max estimate {max_est:.5} (cap {:.5}) over {} directions",
            4.0 * s2 * 1.05,
            dirs.len()
        ),
    })
}

/// Checks `P(|⟨u, flat(E)⟩| > r) ≤ 1.5 · 2exp(−r²/(8σ²))` at `r ∈ {σ, 2σ, 3σ}`
/// for one random unit `u`. `max_rel_error` is the largest ratio of empirical
/// tail to bound; the check passes when it is at most 1.
pub fn subgaussian_tail_check(
    model: NoiseModel,
    d: usize,
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    model.validate()?;
    if n_samples < 10_000 {
        return Err(Error::config(
            "subgaussian_tail_check needs at least 10000 samples",
        ));
    }
    let len = crate::tensor::element_count(k, d, crate::tensor::DEFAULT_ELEMENT_BUDGET)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = sample_signal(len, &mut rng).into_vec();
    let sigma = model.sigma();
    let radii = [sigma, 2.0 * sigma, 3.0 * sigma];
    let mut exceed = [0usize; 3];
    let mut e = vec![0.0; len];
    for _ in 0..n_samples {
        e.iter_mut().for_each(|x| *x = 0.0);
        model.add_noise(&mut rng, &mut e);
        let p = dot(&u, &e).abs();
        for (c, &r) in exceed.iter_mut().zip(&radii) {
            if p > r {
                *c += 1;
            }
        }
    }
    let mut worst_ratio = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut detail = String::new();
    for (i, &r) in radii.iter().enumerate() {
        let p = exceed[i] as f64 / n_samples as f64;
        let bound = if sigma > 0.0 {
            1.5 * 2.0 * (-(r * r) / (8.0 * sigma * sigma)).exp()
        } else {
            1.5 * 2.0
        };
        worst_ratio = worst_ratio.max(p / bound);
        worst_gap = worst_gap.max(p - bound);
        detail.push_str(&format!("r={}σ: {p:.5} <= {bound:.5}; ", i + 1));
    }
    Ok(CheckReport {
        name: format!("subgaussian_tail {} sigma={}", model.name(), sigma),
        max_abs_error: worst_gap.max(0.0),
        max_rel_error: worst_ratio,
        trials: n_samples,
        pass: worst_ratio <= 1.0,
        tolerance: 1.0,
        detail: detail.trim_end_matches("; ").to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::alignment;

    #[test]
    fn fd_of_zero_tensor_is_zero() {
        let t = DenseTensor::zeros(4, 3).unwrap();
        let w = SquareMatrix::identity(3);
        let g = fd_gradient_matrix(&t, &w, 1e-5).unwrap();
        assert!(g.as_slice().iter().all(|&x| x == 0.0));
        assert!(fd_gradient_matrix(&t, &w, 0.0).is_err());
    }

    #[test]
    fn fd_linear_case_is_matricization() {
        let data: Vec<f64> = (0..9).map(|x| (x as f64) * 0.25 - 1.0).collect();
        let t = DenseTensor::from_vec(2, 3, data.clone()).unwrap();
        let w = SquareMatrix::from_vec(3, vec![0.5; 9]).unwrap();
        let g = fd_gradient_matrix(&t, &w, 1e-3).unwrap();
        for (a, b) in g.as_slice().iter().zip(&data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_term_vanishes_on_zero_and_self() {
        let w = SquareMatrix::from_vec(2, vec![1.0, 0.3, -0.2, 2.0]).unwrap();
        let v = [0.6, 0.8];
        assert_eq!(
            alpha_first_order_term(&w, &SquareMatrix::zeros(2), &v).unwrap(),
            0.0
        );
        assert!(alpha_first_order_term(&w, &w, &v).unwrap().abs() < 1e-15);
        assert!(matches!(
            alpha_first_order_term(&SquareMatrix::zeros(2), &w, &v),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn small_sample_counts_rejected() {
        let m = NoiseModel::Gaussian { sigma: 1.0 };
        assert!(noise_moment_check(m, 2, 2, 10, 1, 0).is_err());
        assert!(subgaussian_tail_check(m, 2, 2, 10, 0).is_err());
    }

    #[test]
    fn gradient_suite_shapes() {
        let even = gradient_suite(3, 4, 2, 1).unwrap();
        assert_eq!(even.len(), 2);
        let odd = gradient_suite(3, 3, 2, 1).unwrap();
        assert_eq!(odd.len(), 1);
        assert!(even.iter().chain(&odd).all(|r| r.pass));
    }

    #[test]
    fn alignment_agrees_with_unclamped() {
        let w = SquareMatrix::from_vec(2, vec![1.0, 0.3, -0.2, 2.0]).unwrap();
        let v = [0.6, 0.8];
        assert_eq!(alignment(&v, &w).unwrap(), unclamped_alpha(&v, &w).unwrap());
    }
}
