use crate::error::{Error, Result};
use crate::linalg::svds;
use crate::tensor::{frobenius, mode_product, unfold, DenseTensor3};

use super::{initial_factors, Init, TuckerModel};

/// Higher-order orthogonal iteration from an HOSVD start. Stops when the fit
/// `||t - reconstruction||_F` changes by less than `tol * ||t||_F`, or after
/// `maxiter` sweeps.
pub fn solve_hooi(
    t: &DenseTensor3,
    rank: [usize; 3],
    tol: f64,
    maxiter: usize,
) -> Result<TuckerModel> {
    hooi_with_history(t, rank, tol, maxiter).map(|(m, _)| m)
}

/// [`solve_hooi`] plus the fit after each sweep.
pub fn hooi_with_history(
    t: &DenseTensor3,
    rank: [usize; 3],
    tol: f64,
    maxiter: usize,
) -> Result<(TuckerModel, Vec<f64>)> {
    let dims = t.dims();
    for n in 0..3 {
        if rank[n] == 0 || rank[n] > dims[n] {
            return Err(Error::Range(format!(
                "rank {rank:?} incompatible with dims {dims:?}"
            )));
        }
        let rest: usize = (0..3).filter(|&j| j != n).map(|j| rank[j]).product();
        if rank[n] > rest {
            return Err(Error::Range(format!(
                "rank {rank:?}: d{} exceeds the product of the other two",
                n + 1
            )));
        }
    }
    if !(tol >= 0.0) {
        return Err(Error::Config(format!("tol must be >= 0, got {tol}")));
    }
    let norm = frobenius(t);
    let [mut u, mut v, w0] = initial_factors(t, rank, Init::HosvdOfFilled, 0)?;
    let mut w = w0;
    let mut history = Vec::new();
    let mut core = DenseTensor3::zeros(rank)?;
    let mut prev = f64::INFINITY;
    for _ in 0..maxiter.max(1) {
        let m1 = mode_product(&mode_product(t, &w.transpose(), 3)?, &v.transpose(), 2)?;
        u = svds(&unfold(&m1, 1)?, rank[0])?;
        let p = mode_product(t, &u.transpose(), 1)?;
        v = svds(&unfold(&mode_product(&p, &w.transpose(), 3)?, 2)?, rank[1])?;
        let q = mode_product(&p, &v.transpose(), 2)?;
        w = svds(&unfold(&q, 3)?, rank[2])?;
        core = mode_product(&q, &w.transpose(), 3)?;
        let model = TuckerModel::new(core.clone(), u.clone(), v.clone(), w.clone())?;
        let fit = frobenius(&t.sub(&model.reconstruct())?);
        history.push(fit);
        if (prev - fit).abs() <= tol * norm {
            break;
        }
        prev = fit;
    }
    Ok((TuckerModel::new(core, u, v, w)?, history))
}
