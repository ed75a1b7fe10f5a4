//! Recovery of hierarchically sparse signals from linear measurements.
//!
//! A signal of `N` blocks with `n` entries each is (s, sigma)-sparse when at
//! most `s` blocks are active and each active block has at most `sigma`
//! non-zero entries; rooted trees generalize this to arbitrarily nested
//! block structures. This crate provides:
//!
//! - [`model`]: sparsity structures ([`model::FlatSparsity`],
//!   [`model::SparsityTree`]), hierarchical supports and signal vectors;
//! - [`threshold`]: the hierarchical thresholding operators and exhaustive
//!   oracles for them;
//! - [`measure`]: dense Gaussian and subsampled-DFT measurement operators
//!   with adjoints and column normalization;
//! - [`solve`]: the HTP and HiHTP pursuit iterations with restricted least
//!   squares;
//! - [`ripcalc`]: restricted-isometry constants (exhaustive and
//!   Monte-Carlo), sample-complexity bounds and the convergence-guarantee
//!   constants;
//! - [`bench`]: a reproducible experiment harness with CSV/JSON
//!   persistence.
//!
//! Everything is deterministic for fixed seeds; sweep results replay byte
//! for byte apart from wall-clock columns.

pub mod bench;
pub mod error;
pub mod measure;
pub mod model;
pub mod ripcalc;
pub mod scalar;
pub mod solve;
pub mod threshold;

pub use error::{Error, Result};
pub use model::{
    FlatSparsity, HierarchicalSupport, SignalVector, Sparsity, SparsityTree, TreeSpec,
    UnstructuredSparsity,
};
pub use scalar::Scalar;
