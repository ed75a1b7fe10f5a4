//! Measurement operators: dense matrices (Gaussian ensembles) and the
//! subsampled unitary DFT, with adjoints, column normalization and
//! JSON-header / binary-blob serialization for exact replay.
//!
//! DFT convention: forward kernel exp(-2*pi*i*j*k/d) with unitary 1/sqrt(d)
//! scaling, so the full transform is an isometry and subsampled rows keep
//! unit-norm columns. The adjoint zero-fills, applies the unnormalized
//! inverse transform and scales by 1/sqrt(d).

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SignalVector;
use crate::scalar::Scalar;

/// Abstract linear map with forward and adjoint application.
pub trait MeasurementOperator<T: Scalar>: Send + Sync {
    /// Measurement dimension m.
    fn rows(&self) -> usize;

    /// Ambient dimension d.
    fn cols(&self) -> usize;

    /// y = A x.
    fn apply(&self, x: &SignalVector<T>) -> Result<SignalVector<T>>;

    /// x = A* y (conjugate transpose).
    fn adjoint_apply(&self, y: &SignalVector<T>) -> Result<SignalVector<T>>;

    /// The m x |omega| column restriction A_omega, column-major.
    fn restricted_columns(&self, omega: &[usize]) -> Result<Vec<T>>;
}

/// Dense m x d operator. Stored column-major: the pursuit gathers column
/// restrictions every iteration, and contiguous columns keep that gather
/// (and the adjoint) streaming for block-structured and scattered supports
/// alike.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseOperator<T> {
    /// Build from row-major entries (the natural literal order).
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} operator needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        for e in &data {
            let c = e.to_complex();
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidArgument("non-finite matrix entry".into()));
            }
        }
        let mut col_major = vec![T::zero(); rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                col_major[j * rows + i] = data[i * cols + j];
            }
        }
        Ok(Self {
            rows,
            cols,
            data: col_major,
        })
    }

    fn from_columns(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![T::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = T::one();
        }
        Self {
            rows: dim,
            cols: dim,
            data,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.entry(i, j));
            }
        }
        out
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.column(j)
            .iter()
            .map(|e| e.modulus_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Scale every entry by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.scale(factor)).collect(),
        }
    }
}

impl DenseOperator<f64> {
    /// Promote a real operator into complex arithmetic.
    pub fn promote_to_complex(&self) -> DenseOperator<Complex64> {
        DenseOperator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&e| Complex64::new(e, 0.0)).collect(),
        }
    }
}

impl<T: Scalar> MeasurementOperator<T> for DenseOperator<T> {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &SignalVector<T>) -> Result<SignalVector<T>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "operator expects dimension {}, signal has {}",
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![T::zero(); self.rows];
        for (j, &xj) in x.as_slice().iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.column(j).iter()) {
                *o += *a * xj;
            }
        }
        Ok(SignalVector::from(out))
    }

    fn adjoint_apply(&self, y: &SignalVector<T>) -> Result<SignalVector<T>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "adjoint expects dimension {}, vector has {}",
                self.rows,
                y.len()
            )));
        }
        let ys = y.as_slice();
        let mut out = Vec::with_capacity(self.cols);
        for j in 0..self.cols {
            let mut acc = T::zero();
            for (a, b) in self.column(j).iter().zip(ys.iter()) {
                acc += a.conjugate() * *b;
            }
            out.push(acc);
        }
        Ok(SignalVector::from(out))
    }

    fn restricted_columns(&self, omega: &[usize]) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.rows * omega.len());
        for &j in omega {
            if j >= self.cols {
                return Err(Error::InvalidArgument(format!(
                    "column {j} out of range for {} columns",
                    self.cols
                )));
            }
            out.extend_from_slice(self.column(j));
        }
        Ok(out)
    }
}

/// Dense m x d matrix with i.i.d. standard normal entries from a seeded
/// deterministic generator; the same seed reproduces the matrix exactly.
/// Entries are not pre-divided by sqrt(m); experiments normalize columns
/// instead, and RIP bound checks divide by sqrt(m) themselves.
pub fn gaussian_operator(rows: usize, cols: usize, seed: u64) -> Result<DenseOperator<f64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(
            "operator dimensions must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| f64::standard_normal(&mut rng))
        .collect();
    DenseOperator::new(rows, cols, data)
}

/// Positive per-column scales recorded by [`normalize_columns`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub scales: Vec<f64>,
}

impl ColumnScaling {
    pub fn identity(dim: usize) -> Self {
        Self {
            scales: vec![1.0; dim],
        }
    }
}

/// Rescale every column to unit l2-norm, returning the normalized operator
/// and the original norms so solutions can be mapped back.
pub fn normalize_columns<T: Scalar>(
    op: &DenseOperator<T>,
) -> Result<(DenseOperator<T>, ColumnScaling)> {
    let mut scales = Vec::with_capacity(op.cols);
    for j in 0..op.cols {
        let norm = op.column_norm(j);
        if norm == 0.0 {
            return Err(Error::DegenerateInput(format!("column {j} is zero")));
        }
        scales.push(norm);
    }
    let mut data = op.data.clone();
    for (j, chunk) in data.chunks_mut(op.rows).enumerate() {
        for e in chunk.iter_mut() {
            *e = e.scale(1.0 / scales[j]);
        }
    }
    Ok((
        DenseOperator {
            rows: op.rows,
            cols: op.cols,
            data,
        },
        ColumnScaling { scales },
    ))
}

/// Map an estimate computed against the normalized operator back to the
/// original operator's coordinates: x_i <- x_i / scales_i.
pub fn unnormalize_solution<T: Scalar>(
    x: &SignalVector<T>,
    scaling: &ColumnScaling,
) -> Result<SignalVector<T>> {
    if x.len() != scaling.scales.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has dimension {}, scaling has {}",
            x.len(),
            scaling.scales.len()
        )));
    }
    Ok(SignalVector::from(
        x.iter()
            .zip(scaling.scales.iter())
            .map(|(e, &s)| e.scale(1.0 / s))
            .collect::<Vec<T>>(),
    ))
}

/// How the measured Fourier rows are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSelection {
    /// m distinct rows sampled uniformly without replacement.
    UniformRandom { seed: u64 },
    /// The m lowest Fourier coefficients: rows 0..m.
    Lowest,
}

/// Uniformly subsampled unitary DFT; complex field only. Real inputs must
/// be promoted to complex by the caller.
#[derive(Clone)]
pub struct SubsampledDftOperator {
    dim: usize,
    rows: Vec<usize>,
    selection: RowSelection,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SubsampledDftOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubsampledDftOperator")
            .field("dim", &self.dim)
            .field("rows", &self.rows.len())
            .field("selection", &self.selection)
            .finish()
    }
}

/// Build a subsampled DFT operator of ambient dimension d keeping m rows.
pub fn subsampled_dft(
    dim: usize,
    m: usize,
    selection: RowSelection,
) -> Result<SubsampledDftOperator> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if m == 0 || m > dim {
        return Err(Error::InvalidArgument(format!(
            "row count must satisfy 1 <= m <= {dim}, got {m}"
        )));
    }
    let rows = match selection {
        RowSelection::Lowest => (0..m).collect(),
        RowSelection::UniformRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut r = rand::seq::index::sample(&mut rng, dim, m).into_vec();
            r.sort_unstable();
            r
        }
    };
    let mut planner = FftPlanner::new();
    Ok(SubsampledDftOperator {
        dim,
        fft_fwd: planner.plan_fft_forward(dim),
        fft_inv: planner.plan_fft_inverse(dim),
        rows,
        selection,
    })
}

impl SubsampledDftOperator {
    pub fn row_indices(&self) -> &[usize] {
        &self.rows
    }

    pub fn selection(&self) -> RowSelection {
        self.selection
    }

    /// The explicit m x d matrix (test oracle and blob export).
    pub fn to_dense(&self) -> DenseOperator<Complex64> {
        let scale = 1.0 / (self.dim as f64).sqrt();
        let mut data = Vec::with_capacity(self.rows.len() * self.dim);
        for j in 0..self.dim {
            for &r in &self.rows {
                data.push(dft_entry(self.dim, r, j).scale(scale));
            }
        }
        DenseOperator::from_columns(self.rows.len(), self.dim, data)
    }
}

/// exp(-2 pi i r j / d), evaluated with the product reduced mod d to keep
/// the angle small and the entries exactly periodic.
fn dft_entry(dim: usize, r: usize, j: usize) -> Complex64 {
    let prod = ((r as u128 * j as u128) % dim as u128) as f64;
    let angle = -2.0 * std::f64::consts::PI * prod / dim as f64;
    Complex64::new(angle.cos(), angle.sin())
}

impl MeasurementOperator<Complex64> for SubsampledDftOperator {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &SignalVector<Complex64>) -> Result<SignalVector<Complex64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator expects dimension {}, signal has {}",
                self.dim,
                x.len()
            )));
        }
        let mut buf: Vec<Complex64> = x.as_slice().to_vec();
        self.fft_fwd.process(&mut buf);
        let scale = 1.0 / (self.dim as f64).sqrt();
        Ok(SignalVector::from(
            self.rows
                .iter()
                .map(|&r| buf[r].scale(scale))
                .collect::<Vec<_>>(),
        ))
    }

    fn adjoint_apply(&self, y: &SignalVector<Complex64>) -> Result<SignalVector<Complex64>> {
        if y.len() != self.rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "adjoint expects dimension {}, vector has {}",
                self.rows.len(),
                y.len()
            )));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.dim];
        for (t, &r) in self.rows.iter().enumerate() {
            buf[r] = y[t];
        }
        self.fft_inv.process(&mut buf);
        let scale = 1.0 / (self.dim as f64).sqrt();
        Ok(SignalVector::from(
            buf.into_iter().map(|v| v.scale(scale)).collect::<Vec<_>>(),
        ))
    }

    fn restricted_columns(&self, omega: &[usize]) -> Result<Vec<Complex64>> {
        let scale = 1.0 / (self.dim as f64).sqrt();
        let mut out = Vec::with_capacity(self.rows.len() * omega.len());
        for &j in omega {
            if j >= self.dim {
                return Err(Error::InvalidArgument(format!(
                    "column {j} out of range for {} columns",
                    self.dim
                )));
            }
            for &r in &self.rows {
                out.push(dft_entry(self.dim, r, j).scale(scale));
            }
        }
        Ok(out)
    }
}

/// Replayable description of an operator: kind + dimensions + seed/rows.
/// Dense matrices without a generating seed ship their entries in a raw
/// little-endian f64 blob (row-major; complex entries interleave re, im).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorHeader {
    pub kind: OperatorKind,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_indices: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Gaussian,
    DftUniform,
    DftLowest,
    DenseReal,
    DenseComplex,
}

impl OperatorHeader {
    pub fn for_gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            kind: OperatorKind::Gaussian,
            rows,
            cols,
            seed: Some(seed),
            row_indices: None,
        }
    }

    pub fn for_dft(op: &SubsampledDftOperator) -> Self {
        let (kind, seed) = match op.selection() {
            RowSelection::UniformRandom { seed } => (OperatorKind::DftUniform, Some(seed)),
            RowSelection::Lowest => (OperatorKind::DftLowest, None),
        };
        Self {
            kind,
            rows: op.rows.len(),
            cols: op.dim,
            seed,
            row_indices: Some(op.rows.clone()),
        }
    }

    /// Rebuild the Gaussian operator this header describes.
    pub fn replay_gaussian(&self) -> Result<DenseOperator<f64>> {
        if self.kind != OperatorKind::Gaussian {
            return Err(Error::Config(format!(
                "header kind {:?} is not gaussian",
                self.kind
            )));
        }
        let seed = self
            .seed
            .ok_or_else(|| Error::Config("gaussian header without seed".into()))?;
        gaussian_operator(self.rows, self.cols, seed)
    }

    /// Rebuild the subsampled DFT operator this header describes, preferring
    /// the stored row set over re-sampling.
    pub fn replay_dft(&self) -> Result<SubsampledDftOperator> {
        let selection = match (self.kind, self.seed) {
            (OperatorKind::DftUniform, Some(seed)) => RowSelection::UniformRandom { seed },
            (OperatorKind::DftLowest, _) => RowSelection::Lowest,
            _ => {
                return Err(Error::Config(format!(
                    "header kind {:?} is not a dft",
                    self.kind
                )))
            }
        };
        let op = subsampled_dft(self.cols, self.rows, selection)?;
        if let Some(rows) = &self.row_indices {
            if rows != &op.rows {
                return Err(Error::Config(
                    "stored row set disagrees with seed replay".into(),
                ));
            }
        }
        Ok(op)
    }
}

/// Write the entries of a real dense operator as little-endian f64,
/// row-major.
pub fn write_dense_blob_f64(op: &DenseOperator<f64>, w: &mut impl Write) -> Result<()> {
    for e in op.to_row_major() {
        w.write_all(&e.to_le_bytes())?;
    }
    Ok(())
}

/// Read a real dense operator back from a little-endian f64 blob.
pub fn read_dense_blob_f64(
    rows: usize,
    cols: usize,
    r: &mut impl Read,
) -> Result<DenseOperator<f64>> {
    let mut data = vec![0.0f64; rows * cols];
    let mut buf = [0u8; 8];
    for e in data.iter_mut() {
        r.read_exact(&mut buf)?;
        *e = f64::from_le_bytes(buf);
    }
    DenseOperator::new(rows, cols, data)
}

/// Write a complex dense operator, each entry as interleaved re, im.
pub fn write_dense_blob_c64(op: &DenseOperator<Complex64>, w: &mut impl Write) -> Result<()> {
    for e in op.to_row_major() {
        w.write_all(&e.re.to_le_bytes())?;
        w.write_all(&e.im.to_le_bytes())?;
    }
    Ok(())
}

/// Read a complex dense operator from an interleaved re, im blob.
pub fn read_dense_blob_c64(
    rows: usize,
    cols: usize,
    r: &mut impl Read,
) -> Result<DenseOperator<Complex64>> {
    let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
    let mut buf = [0u8; 8];
    for e in data.iter_mut() {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let im = f64::from_le_bytes(buf);
        *e = Complex64::new(re, im);
    }
    DenseOperator::new(rows, cols, data)
}
