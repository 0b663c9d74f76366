//! Dense third-order tensors and observation sets.
//!
//! Values are stored column-major over `(i1, i2, i3)`: the linear offset of
//! entry `(i1, i2, i3)` (0-based) is `i1 + I1 * (i2 + I2 * i3)`. With this
//! layout the mode-1 unfolding is the storage buffer itself, viewed as an
//! `I1 x (I2 * I3)` column-major matrix.
//!
//! Public element accessors and observation indices are 1-based.

use std::collections::HashSet;

use nalgebra::{DMatrixView, DMatrixViewMut};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Tensor dimension triple `(I1, I2, I3)`.
pub type Dims3 = [usize; 3];

/// A dense real tensor of order three.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor3 {
    dims: Dims3,
    data: Vec<f64>,
}

fn check_dims(dims: Dims3) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::Dimension(format!(
            "tensor dimensions must be positive, got {dims:?}"
        )));
    }
    Ok(())
}

fn check_mode(n: usize) -> Result<usize> {
    if (1..=3).contains(&n) {
        Ok(n - 1)
    } else {
        Err(Error::Mode(n))
    }
}

impl DenseTensor3 {
    /// Builds a tensor from values in canonical (column-major) order.
    pub fn from_vec(dims: Dims3, data: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        let expected = dims.iter().product::<usize>();
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "expected {expected} values for dims {dims:?}, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "value at linear offset {pos} is {}",
                data[pos]
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims3) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self::zeros_unchecked(dims))
    }

    pub(crate) fn zeros_unchecked(dims: Dims3) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    /// Builds a tensor from a function of 1-based indices.
    pub fn from_fn(dims: Dims3, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        check_dims(dims)?;
        let mut data = Vec::with_capacity(dims.iter().product());
        for i3 in 1..=dims[2] {
            for i2 in 1..=dims[1] {
                for i1 in 1..=dims[0] {
                    data.push(f(i1, i2, i3));
                }
            }
        }
        Self::from_vec(dims, data)
    }

    /// Wraps a buffer produced by finite arithmetic; callers that may
    /// produce non-finite values check with [`DenseTensor3::is_finite`].
    pub(crate) fn from_raw(dims: Dims3, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self { dims, data }
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Values in canonical order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Linear offset of a 1-based index triple.
    pub fn offset(&self, i1: usize, i2: usize, i3: usize) -> usize {
        linear_offset(self.dims, i1, i2, i3)
    }

    /// Entry at 1-based indices. Panics when out of range.
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.data[self.offset(i1, i2, i3)]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(self.dims, self.data.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self += alpha * other`.
    pub fn add_scaled_mut(&mut self, alpha: f64, other: &Self) -> Result<()> {
        same_dims(self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_dims(self, other)?;
        Ok(Self::from_raw(
            self.dims,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

pub(crate) fn linear_offset(dims: Dims3, i1: usize, i2: usize, i3: usize) -> usize {
    assert!(
        (1..=dims[0]).contains(&i1) && (1..=dims[1]).contains(&i2) && (1..=dims[2]).contains(&i3),
        "index ({i1}, {i2}, {i3}) out of range for dims {dims:?}"
    );
    (i1 - 1) + dims[0] * ((i2 - 1) + dims[1] * (i3 - 1))
}

fn same_dims(a: &DenseTensor3, b: &DenseTensor3) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::Dimension(format!(
            "tensor dims {:?} and {:?} differ",
            a.dims, b.dims
        )));
    }
    Ok(())
}

/// Mode-`n` unfolding (`n` in 1..=3) into an `I_n x prod_{j != n} I_j` matrix.
///
/// Column index of entry `(i1, i2, i3)` follows the lexicographic order of the
/// remaining indices with the lowest mode varying fastest.
pub fn unfold(t: &DenseTensor3, n: usize) -> Result<Matrix> {
    let mode = check_mode(n)?;
    let [d1, d2, d3] = t.dims;
    let m = match mode {
        0 => Matrix::from_column_slice(d1, d2 * d3, &t.data),
        1 => {
            let mut out = vec![0.0; t.data.len()];
            // column c = i1 + d1 * i3, row i2
            for i3 in 0..d3 {
                for i1 in 0..d1 {
                    let col = i1 + d1 * i3;
                    let dst = &mut out[col * d2..(col + 1) * d2];
                    for (i2, slot) in dst.iter_mut().enumerate() {
                        *slot = t.data[i1 + d1 * (i2 + d2 * i3)];
                    }
                }
            }
            Matrix::from_vec(d2, d1 * d3, out)
        }
        _ => DMatrixView::from_slice(&t.data, d1 * d2, d3).transpose(),
    };
    Ok(m)
}

/// Inverse of [`unfold`] for the same mode and dims.
pub fn refold(m: &Matrix, n: usize, dims: Dims3) -> Result<DenseTensor3> {
    let mode = check_mode(n)?;
    check_dims(dims)?;
    let rows = dims[mode];
    let cols: usize = dims.iter().product::<usize>() / rows;
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Dimension(format!(
            "cannot refold a {}x{} matrix along mode {n} into dims {dims:?} (expected {rows}x{cols})",
            m.nrows(),
            m.ncols()
        )));
    }
    let [d1, d2, d3] = dims;
    let data = match mode {
        0 => m.as_slice().to_vec(),
        1 => {
            let mut out = vec![0.0; m.len()];
            let src = m.as_slice();
            for i3 in 0..d3 {
                for i1 in 0..d1 {
                    let col = i1 + d1 * i3;
                    for i2 in 0..d2 {
                        out[i1 + d1 * (i2 + d2 * i3)] = src[col * d2 + i2];
                    }
                }
            }
            out
        }
        _ => m.transpose().as_slice().to_vec(),
    };
    Ok(DenseTensor3::from_raw(dims, data))
}

/// `n`-mode product `t x_n m`: contracts mode `n` of `t` with the columns of `m`.
pub fn mode_product(t: &DenseTensor3, m: &Matrix, n: usize) -> Result<DenseTensor3> {
    let mode = check_mode(n)?;
    let [d1, d2, d3] = t.dims;
    if m.ncols() != t.dims[mode] {
        return Err(Error::Dimension(format!(
            "mode-{n} product needs a matrix with {} columns, got {}x{}",
            t.dims[mode],
            m.nrows(),
            m.ncols()
        )));
    }
    let j = m.nrows();
    if j == 0 {
        return Err(Error::Dimension("mode product with an empty matrix".into()));
    }
    let mut dims = t.dims;
    dims[mode] = j;
    let mut out = vec![0.0; dims.iter().product()];
    match mode {
        0 => {
            let x = DMatrixView::from_slice(&t.data, d1, d2 * d3);
            let mut y = DMatrixViewMut::from_slice(&mut out, j, d2 * d3);
            y.gemm(1.0, m, &x, 0.0);
        }
        1 => {
            let mt = m.transpose();
            let slab_in = d1 * d2;
            let slab_out = d1 * j;
            for i3 in 0..d3 {
                let x = DMatrixView::from_slice(&t.data[i3 * slab_in..(i3 + 1) * slab_in], d1, d2);
                let mut y =
                    DMatrixViewMut::from_slice(&mut out[i3 * slab_out..(i3 + 1) * slab_out], d1, j);
                y.gemm(1.0, &x, &mt, 0.0);
            }
        }
        _ => {
            let mt = m.transpose();
            let x = DMatrixView::from_slice(&t.data, d1 * d2, d3);
            let mut y = DMatrixViewMut::from_slice(&mut out, d1 * d2, j);
            y.gemm(1.0, &x, &mt, 0.0);
        }
    }
    Ok(DenseTensor3::from_raw(dims, out))
}

/// Applies `u`, `v`, `w` on modes 1, 2, 3 in order (each transposed when
/// `transposed` is set): `t x1 u x2 v x3 w` or `t x1 u^T x2 v^T x3 w^T`.
pub fn multi_mode_product(
    t: &DenseTensor3,
    u: &Matrix,
    v: &Matrix,
    w: &Matrix,
    transposed: bool,
) -> Result<DenseTensor3> {
    if transposed {
        let a = mode_product(t, &u.transpose(), 1)?;
        let b = mode_product(&a, &v.transpose(), 2)?;
        mode_product(&b, &w.transpose(), 3)
    } else {
        let a = mode_product(t, u, 1)?;
        let b = mode_product(&a, v, 2)?;
        mode_product(&b, w, 3)
    }
}

/// Sum of entrywise products.
pub fn inner(a: &DenseTensor3, b: &DenseTensor3) -> Result<f64> {
    same_dims(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn frobenius(t: &DenseTensor3) -> f64 {
    t.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Elementwise product.
pub fn hadamard(a: &DenseTensor3, b: &DenseTensor3) -> Result<DenseTensor3> {
    a.zip_with(b, |x, y| x * y)
}

/// `P_Omega(t)` (or its complement when `complement` is set): keeps entries on
/// the selected index set and zeros the rest.
pub fn project(t: &DenseTensor3, omega: &ObservationSet, complement: bool) -> Result<DenseTensor3> {
    if t.dims != omega.dims {
        return Err(Error::Dimension(format!(
            "tensor dims {:?} do not match observation dims {:?}",
            t.dims, omega.dims
        )));
    }
    if complement {
        let mut out = t.clone();
        for &p in &omega.offsets {
            out.data[p] = 0.0;
        }
        Ok(out)
    } else {
        let mut out = DenseTensor3::zeros_unchecked(t.dims);
        for &p in &omega.offsets {
            out.data[p] = t.data[p];
        }
        Ok(out)
    }
}

/// One observed entry; indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub index: [usize; 3],
    pub value: f64,
}

/// An index set `Omega` with observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    dims: Dims3,
    entries: Vec<Entry>,
    offsets: Vec<usize>,
}

impl ObservationSet {
    /// Validates bounds, uniqueness and finiteness of the entries.
    pub fn new(dims: Dims3, entries: Vec<Entry>) -> Result<Self> {
        check_dims(dims)?;
        let mut seen = HashSet::with_capacity(entries.len());
        let mut offsets = Vec::with_capacity(entries.len());
        for e in &entries {
            let [i1, i2, i3] = e.index;
            if !(1..=dims[0]).contains(&i1)
                || !(1..=dims[1]).contains(&i2)
                || !(1..=dims[2]).contains(&i3)
            {
                return Err(Error::Validation(format!(
                    "index ({i1}, {i2}, {i3}) out of range for dims {dims:?}"
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "observed value at ({i1}, {i2}, {i3}) is {}",
                    e.value
                )));
            }
            let p = linear_offset(dims, i1, i2, i3);
            if !seen.insert(p) {
                return Err(Error::Validation(format!(
                    "duplicate index ({i1}, {i2}, {i3})"
                )));
            }
            offsets.push(p);
        }
        Ok(Self {
            dims,
            entries,
            offsets,
        })
    }

    /// Observes `source` at 0-based linear offsets (canonical layout).
    pub fn from_offsets(source: &DenseTensor3, offsets: &[usize]) -> Result<Self> {
        let [d1, d2, _] = source.dims;
        let entries = offsets
            .iter()
            .map(|&p| {
                if p >= source.len() {
                    return Err(Error::Validation(format!(
                        "offset {p} out of range for dims {:?}",
                        source.dims
                    )));
                }
                let i1 = p % d1;
                let i2 = (p / d1) % d2;
                let i3 = p / (d1 * d2);
                Ok(Entry {
                    index: [i1 + 1, i2 + 1, i3 + 1],
                    value: source.data[p],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(source.dims, entries)
    }

    /// Every entry of `t` observed.
    pub fn full(t: &DenseTensor3) -> Self {
        let offsets: Vec<usize> = (0..t.len()).collect();
        Self::from_offsets(t, &offsets).expect("all offsets are in range")
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 0-based linear offsets of the observed entries, in entry order.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `P_Omega(T)`: observed values with zeros elsewhere.
    pub fn to_dense(&self) -> DenseTensor3 {
        let mut out = DenseTensor3::zeros_unchecked(self.dims);
        for (e, &p) in self.entries.iter().zip(&self.offsets) {
            out.data[p] = e.value;
        }
        out
    }

    /// The 0/1 indicator tensor of `Omega`.
    pub fn mask(&self) -> DenseTensor3 {
        let mut out = DenseTensor3::zeros_unchecked(self.dims);
        for &p in &self.offsets {
            out.data[p] = 1.0;
        }
        out
    }

    /// Frobenius norm of the observed values.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value * e.value)
            .sum::<f64>()
            .sqrt()
    }
}
