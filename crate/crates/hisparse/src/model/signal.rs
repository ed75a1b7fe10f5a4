use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense real or complex vector with a block interpretation supplied
/// externally by a sparsity structure. Immutable by convention: operations
/// return new vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalVector<T: Scalar> {
    entries: Vec<T>,
}

impl<T: Scalar> SignalVector<T> {
    /// Build from entries, rejecting non-finite values.
    pub fn new(entries: Vec<T>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if !e.to_complex().re.is_finite() || !e.to_complex().im.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite entry at index {i}"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![T::zero(); dim],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<T> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.entries.iter()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.modulus_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product, conjugate-linear in `self`: sum_i conj(self_i) * rhs_i.
    pub fn dot(&self, rhs: &Self) -> T {
        assert_eq!(self.len(), rhs.len(), "dot of mismatched lengths");
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .fold(T::zero(), |acc, (a, b)| acc + a.conjugate() * *b)
    }

    /// Projection onto the index set: keeps entries in `omega`, zeroes the rest.
    pub fn project(&self, omega: &[usize]) -> Result<Self> {
        let mut out = vec![T::zero(); self.len()];
        for &i in omega {
            if i >= self.len() {
                return Err(Error::InvalidArgument(format!(
                    "projection index {i} out of range for dimension {}",
                    self.len()
                )));
            }
            out[i] = self.entries[i];
        }
        Ok(Self { entries: out })
    }

    /// Restriction x_omega: the |omega| entries in index order.
    pub fn gather(&self, omega: &[usize]) -> Result<Vec<T>> {
        omega
            .iter()
            .map(|&i| {
                self.entries.get(i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "index {i} out of range for dimension {}",
                        self.len()
                    ))
                })
            })
            .collect()
    }

    /// Place values at the given indices of a fresh zero vector of length `dim`.
    pub fn scatter(dim: usize, omega: &[usize], values: &[T]) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "scatter: {} indices vs {} values",
                omega.len(),
                values.len()
            )));
        }
        let mut out = vec![T::zero(); dim];
        for (&i, &v) in omega.iter().zip(values.iter()) {
            if i >= dim {
                return Err(Error::InvalidArgument(format!(
                    "scatter index {i} out of range for dimension {dim}"
                )));
            }
            out[i] = v;
        }
        Ok(Self { entries: out })
    }

    /// Indices of non-zero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "add of mismatched lengths");
        Self {
            entries: self
                .entries
                .iter()
                .zip(rhs.entries.iter())
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "sub of mismatched lengths");
        Self {
            entries: self
                .entries
                .iter()
                .zip(rhs.entries.iter())
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|a| a.scale(factor)).collect(),
        }
    }

    /// Entry-wise map, preserving length.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            entries: self.entries.iter().map(|a| f(*a)).collect(),
        }
    }
}

impl<T: Scalar> std::ops::Index<usize> for SignalVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.entries[i]
    }
}

impl<T: Scalar> From<Vec<T>> for SignalVector<T> {
    /// Infallible conversion for trusted internal values; public inputs
    /// should go through `new` for the finiteness check.
    fn from(entries: Vec<T>) -> Self {
        Self { entries }
    }
}
