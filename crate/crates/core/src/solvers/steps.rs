//! Individual block updates shared by the solvers. Each is usable on its own,
//! which is how the tests check them against direct evaluations.

use crate::error::{Error, Result};
use crate::linalg::{ort_with_diagnostic, spectral_norm_estimate, svds, svt, Matrix, PolarFactor};
use crate::tensor::{
    frobenius, mode_product, multi_mode_product, refold, unfold, DenseTensor3, ObservationSet,
};

use super::TuckerModel;

/// Power-iteration steps for the GROID step-size estimate.
pub const POWER_STEPS: usize = 20;

/// `SVT_{weight/(lambda rho)}(core_unfolding + multiplier / rho)`.
pub fn shrink_aux(
    core_unfolding: &Matrix,
    multiplier: &Matrix,
    rho: f64,
    lambda: f64,
    weight: f64,
) -> Result<Matrix> {
    if core_unfolding.shape() != multiplier.shape() {
        return Err(Error::Dimension(format!(
            "core unfolding {:?} vs multiplier {:?}",
            core_unfolding.shape(),
            multiplier.shape()
        )));
    }
    if !(rho > 0.0) || !(lambda > 0.0) || !(weight >= 0.0) {
        return Err(Error::Range(format!(
            "shrink_aux needs rho > 0, lambda > 0, weight >= 0 (got {rho}, {lambda}, {weight})"
        )));
    }
    svt(
        &(core_unfolding + multiplier / rho),
        weight / (lambda * rho),
    )
}

/// `refold(aux_n - multiplier_n / rho)` for each mode, at core dims `rank`.
pub fn aux_targets(
    aux: &[Matrix],
    multipliers: &[Matrix; 3],
    rho: f64,
    rank: [usize; 3],
) -> Result<[DenseTensor3; 3]> {
    if aux.len() != 3 {
        return Err(Error::Dimension(format!(
            "expected 3 auxiliary matrices, got {}",
            aux.len()
        )));
    }
    Ok([
        refold(&(&aux[0] - &multipliers[0] / rho), 1, rank)?,
        refold(&(&aux[1] - &multipliers[1] / rho), 2, rank)?,
        refold(&(&aux[2] - &multipliers[2] / rho), 3, rank)?,
    ])
}

/// Sum of the three [`aux_targets`].
pub fn target_sum(targets: &[DenseTensor3; 3]) -> Result<DenseTensor3> {
    let mut b = targets[0].clone();
    b.add_scaled_mut(1.0, &targets[1])?;
    b.add_scaled_mut(1.0, &targets[2])?;
    Ok(b)
}

/// `||A + rho B||_F^2` with `A = x x1 U^T x2 V^T x3 W^T`; the factor steps never
/// decrease it.
pub fn procrustes_gain(
    x: &DenseTensor3,
    u: &Matrix,
    v: &Matrix,
    w: &Matrix,
    b: &DenseTensor3,
    rho: f64,
) -> Result<f64> {
    let mut a = multi_mode_product(x, u, v, w, true)?;
    a.add_scaled_mut(rho, b)?;
    Ok(frobenius(&a).powi(2))
}

/// `sum_n rho/2 ||G - targets_n||^2 + 1/2 ||x - G x1 U x2 V x3 W||^2`: the
/// joint objective of the factor/core block for fixed auxiliaries.
pub fn subproblem_objective(
    x: &DenseTensor3,
    model: &TuckerModel,
    targets: &[DenseTensor3; 3],
    rho: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for t in targets {
        total += 0.5 * rho * frobenius(&model.core.sub(t)?).powi(2);
    }
    let fit = x.sub(&model.reconstruct())?;
    Ok(total + 0.5 * frobenius(&fit).powi(2))
}

/// `-g / (2(1 + 3 rho)) + mu/2 sum_n tr(F_n^T L_n F_n)` where `g` is
/// [`procrustes_gain`]. The graph factor step never increases it.
#[allow(clippy::too_many_arguments)]
pub fn graph_cost(
    x: &DenseTensor3,
    u: &Matrix,
    v: &Matrix,
    w: &Matrix,
    b: &DenseTensor3,
    rho: f64,
    mu: f64,
    laplacians: &[Matrix; 3],
) -> Result<f64> {
    let g = procrustes_gain(x, u, v, w, b, rho)?;
    let mut graph = 0.0;
    for (f, l) in [u, v, w].into_iter().zip(laplacians) {
        graph += (f.transpose() * l * f).trace();
    }
    Ok(-g / (2.0 * (1.0 + 3.0 * rho)) + 0.5 * mu * graph)
}

/// Which factor step to take.
#[derive(Debug, Clone, Copy)]
pub enum FactorRule<'a> {
    /// Procrustes step maximizing the linearized gain (exact `svds` at `rho = 0`).
    Procrustes,
    /// Linearized step on the graph-regularized cost.
    Graph {
        mu: f64,
        laplacians: &'a [Matrix; 3],
    },
}

/// New factors plus `A = x x1 U^T x2 V^T x3 W^T` at those factors.
#[derive(Debug, Clone)]
pub struct FactorUpdate {
    pub u: Matrix,
    pub v: Matrix,
    pub w: Matrix,
    pub a: DenseTensor3,
    /// Procrustes inputs found rank deficient during this sweep.
    pub nonunique: usize,
}

/// One factor step for `mode` given `m = x` multiplied by the transposes of the
/// other two factors (so `m` has the full size only along `mode`).
fn mode_step(
    m: &DenseTensor3,
    f: &Matrix,
    mode: usize,
    b: &DenseTensor3,
    rho: f64,
    rule: FactorRule<'_>,
) -> Result<PolarFactor> {
    let mn = unfold(m, mode)?;
    let d = f.ncols();
    if rho == 0.0 && matches!(rule, FactorRule::Procrustes) {
        return Ok(PolarFactor {
            factor: svds(&mn, d)?,
            rank: d,
        });
    }
    let mut target = f.transpose() * &mn;
    target += unfold(b, mode)? * rho;
    let pull = &mn * target.transpose();
    match rule {
        FactorRule::Procrustes => ort_with_diagnostic(&pull),
        FactorRule::Graph { mu, laplacians } => {
            let c = 1.0 + 3.0 * rho;
            let l = &laplacians[mode - 1];
            let m_norm = spectral_norm_estimate(&mn, POWER_STEPS);
            let mut tau = m_norm * m_norm / c;
            let mut arg = pull / c;
            if mu != 0.0 {
                tau += mu * spectral_norm_estimate(l, POWER_STEPS);
                arg -= (l * f) * mu;
            }
            arg += f * tau;
            ort_with_diagnostic(&arg)
        }
    }
}

pub(crate) fn sweep_for(
    x: &DenseTensor3,
    model: &TuckerModel,
    b: &DenseTensor3,
    rho: f64,
    rule: FactorRule<'_>,
) -> Result<FactorUpdate> {
    if b.dims() != model.rank() {
        return Err(Error::Dimension(format!(
            "B has dims {:?}, core has {:?}",
            b.dims(),
            model.rank()
        )));
    }
    let mut nonunique = 0;
    let mut count = |p: PolarFactor| {
        if !p.is_unique() {
            nonunique += 1;
        }
        p.factor
    };
    let m1 = mode_product(
        &mode_product(x, &model.w.transpose(), 3)?,
        &model.v.transpose(),
        2,
    )?;
    let u = count(mode_step(&m1, &model.u, 1, b, rho, rule)?);
    let p = mode_product(x, &u.transpose(), 1)?;
    let m2 = mode_product(&p, &model.w.transpose(), 3)?;
    let v = count(mode_step(&m2, &model.v, 2, b, rho, rule)?);
    let m3 = mode_product(&p, &v.transpose(), 2)?;
    let w = count(mode_step(&m3, &model.w, 3, b, rho, rule)?);
    let a = mode_product(&m3, &w.transpose(), 3)?;
    Ok(FactorUpdate {
        u,
        v,
        w,
        a,
        nonunique,
    })
}

/// Factor step for a single mode with the other two factors held fixed.
pub fn factor_mode_update(
    x: &DenseTensor3,
    model: &TuckerModel,
    mode: usize,
    b: &DenseTensor3,
    rho: f64,
    rule: FactorRule<'_>,
) -> Result<PolarFactor> {
    let (f, m) = match mode {
        1 => (
            &model.u,
            mode_product(
                &mode_product(x, &model.w.transpose(), 3)?,
                &model.v.transpose(),
                2,
            )?,
        ),
        2 => (
            &model.v,
            mode_product(
                &mode_product(x, &model.u.transpose(), 1)?,
                &model.w.transpose(),
                3,
            )?,
        ),
        3 => (
            &model.w,
            mode_product(
                &mode_product(x, &model.u.transpose(), 1)?,
                &model.v.transpose(),
                2,
            )?,
        ),
        other => return Err(Error::Mode(other)),
    };
    mode_step(&m, f, mode, b, rho, rule)
}

/// Gauss-Seidel procrustes sweep over U, V, W.
pub fn factor_update(
    x: &DenseTensor3,
    model: &TuckerModel,
    b: &DenseTensor3,
    rho: f64,
) -> Result<FactorUpdate> {
    sweep_for(x, model, b, rho, FactorRule::Procrustes)
}

/// Gauss-Seidel sweep of the linearized graph-regularized factor step.
pub fn graph_factor_update(
    x: &DenseTensor3,
    model: &TuckerModel,
    b: &DenseTensor3,
    rho: f64,
    mu: f64,
    laplacians: &[Matrix; 3],
) -> Result<FactorUpdate> {
    check_laplacians(laplacians, model.dims())?;
    sweep_for(x, model, b, rho, FactorRule::Graph { mu, laplacians })
}

pub(crate) fn check_laplacians(laplacians: &[Matrix; 3], dims: [usize; 3]) -> Result<()> {
    for (n, l) in laplacians.iter().enumerate() {
        if l.shape() != (dims[n], dims[n]) {
            return Err(Error::Dimension(format!(
                "laplacian {} is {}x{}, expected {}x{}",
                n + 1,
                l.nrows(),
                l.ncols(),
                dims[n],
                dims[n]
            )));
        }
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("laplacian {}", n + 1)));
        }
        let asym = (l - l.transpose()).norm();
        if asym > 1e-12 * (1.0 + l.norm()) {
            return Err(Error::Input(format!(
                "laplacian {} is not symmetric (||L - L^T|| = {asym:e})",
                n + 1
            )));
        }
    }
    Ok(())
}

/// `(x x1 U^T x2 V^T x3 W^T + rho b) / (1 + 3 rho)`.
pub fn core_update(
    x: &DenseTensor3,
    u: &Matrix,
    v: &Matrix,
    w: &Matrix,
    b: &DenseTensor3,
    rho: f64,
) -> Result<DenseTensor3> {
    let a = multi_mode_product(x, u, v, w, true)?;
    combine_core(a, b, rho)
}

pub(crate) fn combine_core(
    mut a: DenseTensor3,
    b: &DenseTensor3,
    rho: f64,
) -> Result<DenseTensor3> {
    a.add_scaled_mut(rho, b)?;
    Ok(a.scale(1.0 / (1.0 + 3.0 * rho)))
}

/// Observed values on `omega`, model reconstruction elsewhere.
pub fn interpolate_x(omega: &ObservationSet, model: &TuckerModel) -> Result<DenseTensor3> {
    if omega.dims() != model.dims() {
        return Err(Error::Dimension(format!(
            "observation dims {:?} vs model dims {:?}",
            omega.dims(),
            model.dims()
        )));
    }
    Ok(fill_observed(omega, model.reconstruct()))
}

pub(crate) fn fill_observed(omega: &ObservationSet, mut x: DenseTensor3) -> DenseTensor3 {
    let data = x.data_mut();
    for (e, &o) in omega.entries().iter().zip(omega.offsets()) {
        data[o] = e.value;
    }
    x
}

/// SHOOI split-variable update: `(T + rho R - Y)/(1 + rho)` on `omega` and
/// `R - Y / rho` elsewhere.
pub fn shooi_z_update(
    omega: &ObservationSet,
    recon: &DenseTensor3,
    multiplier: &DenseTensor3,
    rho: f64,
) -> Result<DenseTensor3> {
    if recon.dims() != omega.dims() || multiplier.dims() != omega.dims() {
        return Err(Error::Dimension(
            "reconstruction, multiplier and observations differ in dims".into(),
        ));
    }
    if !(rho > 0.0) {
        return Err(Error::Range(format!("rho must be > 0, got {rho}")));
    }
    let mut z = recon.clone();
    z.add_scaled_mut(-1.0 / rho, multiplier)?;
    let r = recon.as_slice();
    let y = multiplier.as_slice();
    let data = z.data_mut();
    for (e, &o) in omega.entries().iter().zip(omega.offsets()) {
        data[o] = (e.value + rho * r[o] - y[o]) / (1.0 + rho);
    }
    Ok(z)
}
