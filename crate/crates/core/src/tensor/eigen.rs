use super::{dot, SquareMatrix, UnitVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Residual tolerance relative to `‖M‖_F`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Relative asymmetry accepted on input.
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvector of the largest signed eigenvalue of a symmetric matrix.
///
/// Power iteration runs on `M/‖M‖_F + I`, whose spectrum lies in `[0, 2]` with
/// the largest signed eigenvalue of `M` on top. It stops once
/// `‖Mv − θv‖ ≤ tol·‖M‖_F` with `θ = vᵀMv`.
///
/// The iteration starts from `(1, ..., 1)/√d`. A second run starts from that
/// vector plus `e₁`; if it finds a strictly larger eigenvalue, the first start
/// was orthogonal to the dominant eigenspace and the second result is returned.
pub fn sym_top_eigenvector(m: &SquareMatrix, opts: EigenOptions) -> Result<(UnitVector, f64)> {
    if !(opts.tol > 0.0) {
        return Err(Error::config("eigen tolerance must be positive"));
    }
    let d = m.dim();
    if d == 0 {
        return Err(Error::ShapeMismatch("empty matrix".into()));
    }
    if !m.is_finite() {
        let position = m
            .as_slice()
            .iter()
            .position(|x| !x.is_finite())
            .unwrap_or(0);
        return Err(Error::NonFinite { position });
    }
    let scale = m.frobenius_norm();
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL * scale.max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let start = vec![1.0 / (d as f64).sqrt(); d];
    if scale == 0.0 {
        return Ok((UnitVector::normalize(start)?, 0.0));
    }
    let normalized = m.scaled(1.0 / scale);

    let (x1, t1) = power_iterate(&normalized, start.clone(), opts)?;
    let mut perturbed = start;
    perturbed[0] += 1.0;
    let (x, theta) = match power_iterate(&normalized, normalize(perturbed), opts) {
        Ok((x2, t2)) if t2 > t1 + opts.tol => (x2, t2),
        _ => (x1, t1),
    };
    Ok((UnitVector::normalize(x)?, theta * scale))
}

fn power_iterate(m: &SquareMatrix, mut x: Vec<f64>, opts: EigenOptions) -> Result<(Vec<f64>, f64)> {
    let mut residual = f64::INFINITY;
    for _ in 0..=opts.max_iter {
        let y = m.matvec(&x);
        let theta = dot(&x, &y);
        residual = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tol {
            return Ok((x, theta));
        }
        let z: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a + b).collect();
        let nz = dot(&z, &z).sqrt();
        if nz == 0.0 {
            break;
        }
        x = z.into_iter().map(|v| v / nz).collect();
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
        last_iterate: x,
    })
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}
