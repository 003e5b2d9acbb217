//! Dense order-k tensors stored flat in lexicographic order.
//!
//! The multi-index `(i_1, ..., i_k)` (1-based, each in `[1, d]`) lives at flat
//! position `(i_1 - 1) d^{k-1} + ... + (i_{k-1} - 1) d + i_k`, so the last mode
//! varies fastest. All inner products and contractions below follow that
//! layout, and a matrix `W` acting on a pair of modes `(2l-1, 2l)` is read as a
//! row-major `d x d` block.

mod eigen;
mod io;
mod matrix;

pub use eigen::{sym_top_eigenvector, EigenOptions};
pub use io::{read_tensor, write_tensor, TENSOR_MAGIC, TENSOR_VERSION};
pub use matrix::{SquareMatrix, UnitVector};

use crate::error::{Error, Result};

/// Default cap on `d^k`.
pub const DEFAULT_ELEMENT_BUDGET: usize = 1 << 27;

/// Orders above this are not supported.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

/// Number of elements of an order-`order`, dimension-`dim` tensor, checked
/// against `budget`.
pub fn element_count(order: usize, dim: usize, budget: usize) -> Result<usize> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidOrder {
            order,
            reason: "order must be in [1, 8]",
        });
    }
    if dim == 0 {
        return Err(Error::ShapeMismatch("dimension must be positive".into()));
    }
    let requested = (dim as u128).pow(order as u32);
    if requested > budget as u128 {
        return Err(Error::BudgetExceeded {
            order,
            dim,
            requested,
            budget,
        });
    }
    Ok(requested as usize)
}

impl DenseTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Self::zeros_with_budget(order, dim, DEFAULT_ELEMENT_BUDGET)
    }

    pub fn zeros_with_budget(order: usize, dim: usize, budget: usize) -> Result<Self> {
        let len = element_count(order, dim, budget)?;
        Ok(DenseTensor {
            order,
            dim,
            data: vec![0.0; len],
        })
    }

    /// Wraps flat data already in lexicographic order.
    pub fn from_vec(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let len = element_count(order, dim, DEFAULT_ELEMENT_BUDGET)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "expected {len} entries for order {order}, dimension {dim}; got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { order, dim, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Entry at a 1-based multi-index.
    pub fn get(&self, multi_index: &[usize]) -> Result<f64> {
        self.check_arity(multi_index)?;
        let pos = flat_index(multi_index, self.dim)?;
        Ok(self.data[pos - 1])
    }

    pub fn set(&mut self, multi_index: &[usize], value: f64) -> Result<()> {
        self.check_arity(multi_index)?;
        let pos = flat_index(multi_index, self.dim)?;
        self.data[pos - 1] = value;
        Ok(())
    }

    fn check_arity(&self, multi_index: &[usize]) -> Result<()> {
        if multi_index.len() != self.order {
            return Err(Error::IndexArity {
                got: multi_index.len(),
                order: self.order,
            });
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &DenseTensor) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!(
                "order {} dim {} vs order {} dim {}",
                self.order, self.dim, other.order, other.dim
            )));
        }
        Ok(())
    }
}

/// 1-based lexicographic flat position of a 1-based multi-index.
pub fn flat_index(multi_index: &[usize], d: usize) -> Result<usize> {
    let mut pos = 0usize;
    for (mode, &i) in multi_index.iter().enumerate() {
        if i == 0 || i > d {
            return Err(Error::IndexOutOfRange {
                mode: mode + 1,
                index: i,
                dim: d,
            });
        }
        pos = pos * d + (i - 1);
    }
    Ok(pos + 1)
}

/// Inverse of [`flat_index`].
pub fn unflatten_index(position: usize, d: usize, k: usize) -> Result<Vec<usize>> {
    let total = (d as u128).pow(k as u32);
    if position == 0 || position as u128 > total {
        return Err(Error::IndexOutOfRange {
            mode: 0,
            index: position,
            dim: total.min(usize::MAX as u128) as usize,
        });
    }
    let mut rest = position - 1;
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = rest % d + 1;
        rest /= d;
    }
    Ok(out)
}

/// `v^{⊗k}`.
pub fn rank_one_tensor(v: &[f64], k: usize) -> Result<DenseTensor> {
    rank_one_tensor_with_budget(v, k, DEFAULT_ELEMENT_BUDGET)
}

pub fn rank_one_tensor_with_budget(v: &[f64], k: usize, budget: usize) -> Result<DenseTensor> {
    let d = v.len();
    let len = element_count(k, d, budget)?;
    let mut data = Vec::with_capacity(len);
    data.extend_from_slice(v);
    for _ in 1..k {
        let prev = std::mem::take(&mut data);
        data = Vec::with_capacity(prev.len() * d);
        for &a in &prev {
            data.extend(v.iter().map(|&b| a * b));
        }
    }
    Ok(DenseTensor {
        order: k,
        dim: d,
        data,
    })
}

pub fn tensor_inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(dot(&a.data, &b.data))
}

/// `⟨W^{⊗m}, T⟩` for `T` of order `2m`, pairing modes `(1,2), (3,4), ...`
/// with `W`'s (row, column).
pub fn contract_matrix_power(t: &DenseTensor, w: &SquareMatrix) -> Result<f64> {
    check_even_pairing(t, w)?;
    let block = w.as_slice();
    let mut cur = contract_trailing(&t.data, block);
    while cur.len() > 1 {
        cur = contract_trailing(&cur, block);
    }
    Ok(cur[0])
}

/// `∇_W ⟨W^{⊗m}, T⟩`, summing over every slot (noise tensors are not symmetric).
pub fn reward_gradient(t: &DenseTensor, w: &SquareMatrix) -> Result<SquareMatrix> {
    reward_and_gradient(t, w).map(|(_, g)| g)
}

/// Reward `⟨W^{⊗m}, T⟩` and its gradient in one pass.
///
/// The reward comes out for free as `⟨W, G_1⟩`, where `G_1` is the first-slot
/// partial gradient.
pub fn reward_and_gradient(t: &DenseTensor, w: &SquareMatrix) -> Result<(f64, SquareMatrix)> {
    check_even_pairing(t, w)?;
    let block = w.as_slice();
    let slots = t.order / 2;
    let (grad, first) = slot_gradients(&t.data, block, slots);
    Ok((dot(&first, block), SquareMatrix::from_raw(w.dim(), grad)))
}

/// Sums the free-slot contractions over all `slots` positions of a block
/// (`block` is `W` flattened, or a vector for the order-k vector gradient).
/// Also returns the first-slot term.
fn slot_gradients(data: &[f64], block: &[f64], slots: usize) -> (Vec<f64>, Vec<f64>) {
    let b = block.len();
    let mut grad = vec![0.0; b];
    let mut first = Vec::new();
    let mut prefix = std::borrow::Cow::Borrowed(data);
    for l in 0..slots {
        let mut cur = std::borrow::Cow::Borrowed(prefix.as_ref());
        for _ in l + 1..slots {
            cur = std::borrow::Cow::Owned(contract_trailing(&cur, block));
        }
        debug_assert_eq!(cur.len(), b);
        for (g, c) in grad.iter_mut().zip(cur.iter()) {
            *g += c;
        }
        if l == 0 {
            first = cur.into_owned();
        }
        if l + 1 < slots {
            prefix = std::borrow::Cow::Owned(contract_leading(&prefix, block));
        }
    }
    (grad, first)
}

fn check_even_pairing(t: &DenseTensor, w: &SquareMatrix) -> Result<()> {
    if !t.order.is_multiple_of(2) {
        return Err(Error::InvalidOrder {
            order: t.order,
            reason: "matrix-power contraction needs an even order",
        });
    }
    if t.dim != w.dim() {
        return Err(Error::ShapeMismatch(format!(
            "tensor dimension {} vs matrix dimension {}",
            t.dim,
            w.dim()
        )));
    }
    Ok(())
}

/// `T(u)`: contracts `u` against the first mode.
pub fn mode1_contract(t: &DenseTensor, u: &[f64]) -> Result<DenseTensor> {
    if t.order < 2 {
        return Err(Error::InvalidOrder {
            order: t.order,
            reason: "mode-1 contraction needs order >= 2",
        });
    }
    check_vec_dim(t, u)?;
    Ok(DenseTensor {
        order: t.order - 1,
        dim: t.dim,
        data: contract_leading(&t.data, u),
    })
}

/// `T(I^{⊗(k-1)/2})`: traces out the mode pairs `(2,3), (4,5), ...`, leaving mode 1.
pub fn partial_trace_vector(t: &DenseTensor) -> Result<Vec<f64>> {
    if t.order.is_multiple_of(2) || t.order < 3 {
        return Err(Error::InvalidOrder {
            order: t.order,
            reason: "partial trace needs an odd order >= 3",
        });
    }
    let d = t.dim;
    let identity = SquareMatrix::identity(d);
    let mut cur = contract_trailing(&t.data, identity.as_slice());
    while cur.len() > d {
        cur = contract_trailing(&cur, identity.as_slice());
    }
    Ok(cur)
}

/// `⟨v^{⊗k}, T⟩`.
pub fn vector_reward(t: &DenseTensor, v: &[f64]) -> Result<f64> {
    check_vec_dim(t, v)?;
    let mut cur = contract_trailing(&t.data, v);
    while cur.len() > 1 {
        cur = contract_trailing(&cur, v);
    }
    Ok(cur[0])
}

/// `∇_v ⟨v^{⊗k}, T⟩`, summing over all `k` slots.
pub fn vector_gradient(t: &DenseTensor, v: &[f64]) -> Result<Vec<f64>> {
    check_vec_dim(t, v)?;
    Ok(slot_gradients(&t.data, v, t.order).0)
}

fn check_vec_dim(t: &DenseTensor, v: &[f64]) -> Result<()> {
    if v.len() != t.dim {
        return Err(Error::ShapeMismatch(format!(
            "tensor dimension {} vs vector length {}",
            t.dim,
            v.len()
        )));
    }
    Ok(())
}

/// Contracts `block` against the trailing `block.len()` entries of every row.
fn contract_trailing(data: &[f64], block: &[f64]) -> Vec<f64> {
    data.chunks_exact(block.len())
        .map(|row| dot(row, block))
        .collect()
}

/// Contracts `block` against the leading modes: `Σ_j block[j] · data[j, ..]`.
fn contract_leading(data: &[f64], block: &[f64]) -> Vec<f64> {
    let rest = data.len() / block.len();
    let mut out = vec![0.0; rest];
    for (&c, chunk) in block.iter().zip(data.chunks_exact(rest)) {
        if c == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(chunk) {
            *o += c * x;
        }
    }
    out
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
