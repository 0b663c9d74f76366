//! Seeded synthetic data: low-rank Tucker tensors, observation masks, noise
//! and graph Laplacians.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`, so output
//! depends only on the arguments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor::{multi_mode_product, DenseTensor3, Dims3, ObservationSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `C x1 U1 x2 U2 x3 U3` with `C` uniform on [0, 1] and factors uniform on
/// [-0.5, 0.5].
pub fn gen_tucker(dims: Dims3, rank: [usize; 3], seed: u64) -> Result<DenseTensor3> {
    for n in 0..3 {
        if dims[n] == 0 {
            return Err(Error::Dimension(format!("dims {dims:?} must be positive")));
        }
        if rank[n] == 0 || rank[n] > dims[n] {
            return Err(Error::Range(format!(
                "rank {rank:?} must satisfy 1 <= r_n <= I_n for dims {dims:?}"
            )));
        }
    }
    let mut rng = rng(seed);
    let core = DenseTensor3::from_fn(rank, |_, _, _| rng.random_range(0.0..1.0))?;
    let mut factor =
        |rows: usize, cols: usize| Matrix::from_fn(rows, cols, |_, _| rng.random_range(-0.5..0.5));
    let u = factor(dims[0], rank[0]);
    let v = factor(dims[1], rank[1]);
    let w = factor(dims[2], rank[2]);
    multi_mode_product(&core, &u, &v, &w, false)
}

/// `round(ratio * I1 I2 I3)` distinct 0-based linear offsets, sorted,
/// drawn without replacement.
pub fn sample_offsets(dims: Dims3, ratio: f64, seed: u64) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Range(format!(
            "sampling ratio must be in (0, 1], got {ratio}"
        )));
    }
    let total: usize = dims.iter().product();
    let count = ((ratio * total as f64).round() as usize).min(total);
    let mut rng = rng(seed);
    let mut pool: Vec<usize> = (0..total).collect();
    // partial Fisher-Yates: the first `count` slots are a uniform sample
    for i in 0..count {
        let j = rng.random_range(i..total);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool.sort_unstable();
    Ok(pool)
}

/// Observation set over a uniform sample of `source`'s entries.
pub fn sample_mask(source: &DenseTensor3, ratio: f64, seed: u64) -> Result<ObservationSet> {
    let offsets = sample_offsets(source.dims(), ratio, seed)?;
    ObservationSet::from_offsets(source, &offsets)
}

/// Offsets in `0..total` that are not in the sorted list `offsets`.
pub fn complement_offsets(dims: Dims3, offsets: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total.saturating_sub(offsets.len()));
    let mut it = offsets.iter().peekable();
    for k in 0..total {
        if it.peek() == Some(&&k) {
            it.next();
        } else {
            out.push(k);
        }
    }
    out
}

/// `t + nf * E` with `E` i.i.d. standard Gaussian.
pub fn add_noise(t: &DenseTensor3, nf: f64, seed: u64) -> Result<DenseTensor3> {
    if !(nf >= 0.0) || !nf.is_finite() {
        return Err(Error::Range(format!(
            "noise factor must be finite and >= 0, got {nf}"
        )));
    }
    if nf == 0.0 {
        return Ok(t.clone());
    }
    let mut rng = rng(seed);
    let data = t
        .as_slice()
        .iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x + nf * e
        })
        .collect();
    DenseTensor3::from_vec(t.dims(), data)
}

/// `L = D - W` for a symmetric nonnegative affinity `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacian {
    matrix: Matrix,
}

impl GraphLaplacian {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// The all-zero Laplacian (no graph on this mode).
    pub fn empty(n: usize) -> Self {
        Self {
            matrix: Matrix::zeros(n, n),
        }
    }
}

pub fn laplacian_from_affinity(w: &Matrix) -> Result<GraphLaplacian> {
    if w.nrows() != w.ncols() {
        return Err(Error::Input(format!(
            "affinity must be square, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Input(format!(
            "affinity entries must be finite and >= 0, found {v}"
        )));
    }
    let n = w.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (w[(i, j)] - w[(j, i)]).abs() > 1e-10 {
                return Err(Error::Input(format!(
                    "affinity is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut l = -w.clone();
    for j in 0..n {
        let degree: f64 = w.column(j).sum();
        l[(j, j)] += degree;
    }
    // make exactly symmetric when w was symmetric only within tolerance
    let l = (&l + l.transpose()) * 0.5;
    Ok(GraphLaplacian { matrix: l })
}

/// Random symmetric affinity with edge probability `density` and uniform
/// [0, 1] weights; no self loops.
pub fn random_affinity(n: usize, density: f64, seed: u64) -> Result<Matrix> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Range(format!(
            "density must be in [0, 1], got {density}"
        )));
    }
    let mut rng = rng(seed);
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            if rng.random_bool(density) {
                let x: f64 = rng.random_range(0.0..1.0);
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
    }
    Ok(w)
}
