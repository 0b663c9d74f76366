use crate::admm::{
    penalty_update, AdmmState, IterationRecord, IterationTrace, Multipliers, Residuals,
};
use crate::error::{Error, Result};
use crate::linalg::svds;
use crate::metrics::rse;
use crate::tensor::{
    frobenius, mode_product, multi_mode_product, unfold, DenseTensor3, ObservationSet,
};

use super::steps::{fill_observed, shooi_z_update};
use super::{
    initial_factors, Diagnostics, Monitor, SolverConfig, SolverResult, SweepInfo, TuckerModel,
};

/// Lower bound on the SHOOI penalty: the Lipschitz constant of the gradient
/// of `1/2 ||P_Omega(Z - T)||^2`. Below it the nonconvex split can cycle
/// instead of settling on noisy data.
pub const SHOOI_RHO_FLOOR: f64 = 1.0;

/// Sparse HOOI: Tucker fit to the observed entries through the split
/// `Z = G x1 U x2 V x3 W` with a tensor multiplier. `lambda`, `mu` and the
/// weights in `config` are unused, and the penalty never drops below
/// [`SHOOI_RHO_FLOOR`].
pub fn solve_shooi(omega: &ObservationSet, config: &SolverConfig) -> Result<SolverResult> {
    solve_shooi_monitored(omega, config, Monitor::default())
}

pub fn solve_shooi_monitored(
    omega: &ObservationSet,
    config: &SolverConfig,
    mut monitor: Monitor<'_>,
) -> Result<SolverResult> {
    let dims = omega.dims();
    config.validate(dims)?;
    let rank = config.rank;
    for n in 0..3 {
        let rest: usize = (0..3).filter(|&j| j != n).map(|j| rank[j]).product();
        if rank[n] > rest {
            return Err(Error::Range(format!(
                "rank {rank:?}: d{} exceeds the product of the other two",
                n + 1
            )));
        }
    }
    if omega.is_empty() {
        return Err(Error::Degenerate("no observed entries".into()));
    }
    let schedule = config.penalty();
    let t_norm = omega.norm();
    let mut z = omega.to_dense();
    let [u, v, w] = initial_factors(&z, rank, config.init, config.seed)?;
    let core = multi_mode_product(&z, &u, &v, &w, true)?;
    let mut model = TuckerModel::new(core, u, v, w)?;

    if t_norm == 0.0 {
        model.core = DenseTensor3::zeros(rank)?;
        return Ok(SolverResult {
            completed: DenseTensor3::zeros(dims)?,
            model,
            trace: IterationTrace::default(),
            iterations: 0,
            converged: true,
            diagnostics: Diagnostics::default(),
        });
    }

    let floor = schedule.rho_min.max(SHOOI_RHO_FLOOR);
    let mut state = AdmmState::tensor(dims, schedule.rho0.max(floor).min(schedule.rho_max));
    let mut trace = IterationTrace::default();
    let mut is_converged = false;
    let mut recon = model.reconstruct();

    while state.iteration < config.maxiter {
        state.iteration += 1;
        let k = state.iteration;
        let rho = state.rho;
        let Multipliers::Tensor(ref mut y) = state.multipliers else {
            unreachable!("tensor state")
        };

        let mut h = z.clone();
        h.add_scaled_mut(1.0 / rho, y)?;
        let m1 = mode_product(
            &mode_product(&h, &model.w.transpose(), 3)?,
            &model.v.transpose(),
            2,
        )?;
        model.u = svds(&unfold(&m1, 1)?, rank[0])?;
        let p = mode_product(&h, &model.u.transpose(), 1)?;
        model.v = svds(
            &unfold(&mode_product(&p, &model.w.transpose(), 3)?, 2)?,
            rank[1],
        )?;
        let q = mode_product(&p, &model.v.transpose(), 2)?;
        model.w = svds(&unfold(&q, 3)?, rank[2])?;
        model.core = mode_product(&q, &model.w.transpose(), 3)?;
        if !model.core.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite iterate at iteration {k}"
            )));
        }
        recon = model.reconstruct();

        let z_next = shooi_z_update(omega, &recon, y, rho)?;
        let gap = z_next.sub(&recon)?;
        y.add_scaled_mut(rho, &gap)?;
        let x_change = frobenius(&z_next.sub(&z)?);
        z = z_next;
        let res = Residuals {
            primal: frobenius(&gap),
            dual: rho * x_change,
        };
        state.r = res.primal;
        state.s = res.dual;
        state.rho = penalty_update(
            rho,
            res.primal,
            res.dual,
            schedule.gamma,
            floor,
            schedule.rho_max,
        );
        is_converged = res.primal / t_norm < config.tol;

        if config.record_trace || monitor.reference.is_some() {
            let completed = fill_observed(omega, recon.clone());
            let fit = omega
                .entries()
                .iter()
                .zip(omega.offsets())
                .map(|(e, &o)| (e.value - recon.as_slice()[o]).powi(2))
                .sum::<f64>();
            let rse_k = match monitor.reference {
                Some(reference) => Some(rse(&completed, reference)?),
                None => None,
            };
            if config.record_trace {
                trace.push(IterationRecord {
                    iter: k,
                    r: res.primal,
                    s: res.dual,
                    rho,
                    objective: 0.5 * fit,
                    rse: rse_k,
                });
            }
        }
        monitor.notify(&SweepInfo {
            iteration: k,
            model: &model,
            x: &z,
            residuals: res,
            rho,
            x_change,
            aux_change: 0.0,
        });
        if is_converged {
            break;
        }
    }

    Ok(SolverResult {
        completed: fill_observed(omega, recon),
        model,
        trace,
        iterations: state.iteration,
        converged: is_converged,
        diagnostics: Diagnostics::default(),
    })
}
