//! Exact symbolic engine: partitions, monomial symmetric polynomials, the
//! `D₊` operator, Laplace-equation constraint systems, similarity series,
//! Laguerre radial factors and degeneracy counting.
//!
//! Everything except the `*_f64` Laguerre helpers and
//! [`poly::FloatPolynomial`] is exact rational arithmetic.

pub mod constraints;
pub mod degeneracy;
pub mod dplus;
pub mod laguerre;
pub mod linalg;
pub mod partition;
pub mod poly;

use thiserror::Error;

use crate::model::ModelError;

pub use constraints::{laplace_constraints, ConstraintSolution, Regime};
pub use degeneracy::degeneracy;
pub use dplus::{apply_dplus, recurrence_check, similarity_series};
pub use laguerre::radial_laguerre;
pub use partition::{partition_count, partitions, Partition};
pub use poly::{monomial_symmetric, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SympolyError {
    /// `(∂ᵢ − ∂ⱼ) f` is not divisible by `(xᵢ − xⱼ)`; indices are 1-based in
    /// the message.
    #[error("non-polynomial result: pair ({}, {}) leaves a nonzero remainder", .i + 1, .j + 1)]
    NonPolynomial { i: usize, j: usize },
    #[error("partition length {length} exceeds N = {n}")]
    LengthExceedsN { length: usize, n: usize },
    #[error("degree {k} > N = {n} is outside the constraint regime")]
    OutOfRegime { k: u32, n: usize },
    #[error("polynomial does not satisfy D₊P = 0")]
    ConstraintViolation,
    #[error("invalid partition {0:?}")]
    InvalidPartition(Vec<u32>),
    #[error("expected {expected} variables, got {got}")]
    VariableCount { expected: usize, got: usize },
    #[error("cannot parse rational {0:?}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
