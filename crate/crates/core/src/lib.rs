//! Tensor PCA on the spiked tensor model with overparameterized normalized
//! stochastic gradient ascent (NSGA).
//!
//! Observations `T = λ v_*^{⊗k} + E` arrive one at a time from an
//! [`model::ObservationStream`]. For even `k`, [`optim::nsga_even`] runs
//! gradient ascent on `⟨W^{⊗k/2}, T⟩ / ‖W‖_F^{k/2−2}` over a `d x d` matrix
//! `W` started at the identity and reads the estimate off the top eigenvector
//! of `W + Wᵀ`. For odd `k`, [`optim::nsga_odd`] contracts each observation
//! with a preprocessing vector and runs two sign-opposed instances.
//! [`baselines`] holds the vector-parameterized competitors, [`diagnostics`]
//! the numerical checks, and [`harness`] the seeded experiment runner behind
//! the `spiked-tensor` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod model;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
