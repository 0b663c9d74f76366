//! The unfolding-split ADMM loop behind ROID, GROID and the full-tensor
//! variant.

use crate::admm::{
    converged, residuals, AdmmState, IterationRecord, IterationTrace, Multipliers, Residuals,
};
use crate::error::{Error, Result};
use crate::linalg::{singular_values, Matrix};
use crate::metrics::rse;
use crate::tensor::{frobenius, multi_mode_product, unfold, DenseTensor3, ObservationSet};

use super::steps::{
    aux_targets, check_laplacians, combine_core, fill_observed, shrink_aux, target_sum, FactorRule,
};
use super::{
    initial_factors, Diagnostics, Monitor, SolverConfig, SolverResult, SweepInfo, TuckerModel,
};

/// Besides the primal test, a run only counts as converged once the iterates
/// have stopped moving: successive changes of `X` and of the auxiliary
/// matrices below `STALL_FACTOR * tol * ||T||`.
pub const STALL_FACTOR: f64 = 10.0;

enum Data<'a> {
    Completion(&'a ObservationSet),
    Full(&'a DenseTensor3),
}

/// Trace-norm regularized completion from the entries in `omega`.
pub fn solve_roid(omega: &ObservationSet, config: &SolverConfig) -> Result<SolverResult> {
    solve_roid_monitored(omega, config, Monitor::default())
}

pub fn solve_roid_monitored(
    omega: &ObservationSet,
    config: &SolverConfig,
    monitor: Monitor<'_>,
) -> Result<SolverResult> {
    run(
        Data::Completion(omega),
        FactorRule::Procrustes,
        config,
        monitor,
    )
}

/// Completion with additional graph smoothness on the factors.
pub fn solve_groid(
    omega: &ObservationSet,
    laplacians: &[Matrix; 3],
    config: &SolverConfig,
) -> Result<SolverResult> {
    solve_groid_monitored(omega, laplacians, config, Monitor::default())
}

pub fn solve_groid_monitored(
    omega: &ObservationSet,
    laplacians: &[Matrix; 3],
    config: &SolverConfig,
    monitor: Monitor<'_>,
) -> Result<SolverResult> {
    check_laplacians(laplacians, omega.dims())?;
    let rule = FactorRule::Graph {
        mu: config.mu,
        laplacians,
    };
    run(Data::Completion(omega), rule, config, monitor)
}

/// Decomposition of a fully known tensor; `completed` is the reconstruction.
pub fn solve_full(t: &DenseTensor3, config: &SolverConfig) -> Result<SolverResult> {
    solve_full_monitored(t, config, Monitor::default())
}

pub fn solve_full_monitored(
    t: &DenseTensor3,
    config: &SolverConfig,
    monitor: Monitor<'_>,
) -> Result<SolverResult> {
    run(Data::Full(t), FactorRule::Procrustes, config, monitor)
}

fn check_finite(model: &TuckerModel, iteration: usize) -> Result<()> {
    let ok = model.core.is_finite()
        && model
            .factors()
            .iter()
            .all(|f| f.iter().all(|v| v.is_finite()));
    if ok {
        Ok(())
    } else {
        Err(Error::Diverged(format!(
            "non-finite iterate at iteration {iteration}"
        )))
    }
}

fn objective(
    model: &TuckerModel,
    x: &DenseTensor3,
    recon: &DenseTensor3,
    config: &SolverConfig,
    rule: FactorRule<'_>,
) -> Result<f64> {
    let mut total = 0.0;
    for n in 1..=3 {
        let nuclear: f64 = singular_values(&unfold(&model.core, n)?).iter().sum();
        total += config.weights.get(n) / config.lambda * nuclear;
    }
    total += 0.5 * frobenius(&x.sub(recon)?).powi(2);
    if let FactorRule::Graph { mu, laplacians } = rule {
        for (f, l) in model.factors().into_iter().zip(laplacians) {
            total += 0.5 * mu * (f.transpose() * l * f).trace();
        }
    }
    Ok(total)
}

fn run(
    data: Data<'_>,
    rule: FactorRule<'_>,
    config: &SolverConfig,
    mut monitor: Monitor<'_>,
) -> Result<SolverResult> {
    let dims = match data {
        Data::Completion(omega) => omega.dims(),
        Data::Full(t) => t.dims(),
    };
    config.validate(dims)?;
    let schedule = config.penalty();
    let rank = config.rank;
    let (mut x, t_norm) = match data {
        Data::Completion(omega) => {
            if omega.is_empty() {
                return Err(Error::Degenerate("no observed entries".into()));
            }
            (omega.to_dense(), omega.norm())
        }
        Data::Full(t) => (t.clone(), frobenius(t)),
    };

    let [u, v, w] = initial_factors(&x, rank, config.init, config.seed)?;
    let core = multi_mode_product(&x, &u, &v, &w, true)?;
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

    let mut state = AdmmState::per_mode(rank, schedule.rho0);
    let mut trace = IterationTrace::default();
    let mut diagnostics = Diagnostics::default();
    let mut is_converged = false;
    let track_x = matches!(data, Data::Completion(_));

    while state.iteration < config.maxiter {
        state.iteration += 1;
        let k = state.iteration;
        let rho = state.rho;
        let Multipliers::PerMode(ref mut y) = state.multipliers else {
            unreachable!("per-mode state")
        };

        let mut aux_change: f64 = 0.0;
        for n in 0..3 {
            let g = shrink_aux(
                &unfold(&model.core, n + 1)?,
                &y[n],
                rho,
                config.lambda,
                config.weights.get(n + 1),
            )?;
            aux_change = aux_change.max((&g - &state.aux[n]).norm());
            state.aux[n] = g;
        }
        let b = target_sum(&aux_targets(&state.aux, y, rho, rank)?)?;

        let step = super::steps::sweep_for(&x, &model, &b, rho, rule)?;
        diagnostics.nonunique_procrustes += step.nonunique;
        let core_prev = std::mem::replace(&mut model.core, combine_core(step.a, &b, rho)?);
        model.u = step.u;
        model.v = step.v;
        model.w = step.w;
        check_finite(&model, k)?;

        // The reconstruction is only kept when the trace needs it; completion
        // otherwise overwrites it in place with the observed values.
        let mut recon = if track_x || config.record_trace || monitor.reference.is_some() {
            Some(model.reconstruct())
        } else {
            None
        };
        let mut x_change = 0.0;
        let x_prev = if let Data::Completion(omega) = data {
            let base = if config.record_trace {
                recon.clone().expect("reconstruction computed")
            } else {
                recon.take().expect("reconstruction computed")
            };
            let next = fill_observed(omega, base);
            x_change = distance(&next, &x);
            Some(std::mem::replace(&mut x, next))
        } else {
            None
        };

        let aux: [Matrix; 3] = [
            state.aux[0].clone(),
            state.aux[1].clone(),
            state.aux[2].clone(),
        ];
        for n in 0..3 {
            y[n] += (unfold(&model.core, n + 1)? - &aux[n]) * rho;
        }
        let res: Residuals = residuals(
            &core_prev,
            &model.core,
            &aux,
            x_prev.as_ref(),
            &x,
            (&model.u, &model.v, &model.w),
            rho,
        )?;
        state.r = res.primal;
        state.s = res.dual;
        state.rho = schedule.update(rho, res.primal, res.dual);

        let unfoldings = [
            unfold(&model.core, 1)?,
            unfold(&model.core, 2)?,
            unfold(&model.core, 3)?,
        ];
        is_converged = converged(&aux, &unfoldings, t_norm, config.tol)?
            && x_change.max(aux_change) < STALL_FACTOR * config.tol * t_norm;

        if config.record_trace {
            let recon = recon.as_ref().expect("reconstruction kept for the trace");
            let completed = if track_x { &x } else { recon };
            trace.push(IterationRecord {
                iter: k,
                r: res.primal,
                s: res.dual,
                rho,
                objective: objective(&model, &x, recon, config, rule)?,
                rse: match monitor.reference {
                    Some(reference) => Some(rse(completed, reference)?),
                    None => None,
                },
            });
        }
        monitor.notify(&SweepInfo {
            iteration: k,
            model: &model,
            x: &x,
            residuals: res,
            rho,
            x_change,
            aux_change,
        });
        if is_converged {
            break;
        }
    }

    let completed = match data {
        Data::Completion(_) => x,
        Data::Full(_) => model.reconstruct(),
    };
    Ok(SolverResult {
        model,
        completed,
        trace,
        iterations: state.iteration,
        converged: is_converged,
        diagnostics,
    })
}

fn distance(a: &DenseTensor3, b: &DenseTensor3) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}
