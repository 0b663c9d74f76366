//! ADMM bookkeeping shared by the solvers: penalty adaptation, primal/dual
//! residuals, the stopping rule and optional per-iteration traces.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor::{frobenius, multi_mode_product, unfold, DenseTensor3};

pub const DEFAULT_RHO0: f64 = 1e-2;
pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_RHO_MIN: f64 = 1e-6;
pub const DEFAULT_RHO_MAX: f64 = 1e6;

/// Residual-balancing penalty rule: grow by `gamma` when the primal
/// residual dominates (`r > 10 s`), shrink when the dual one does
/// (`s > 10 r`), then clamp to `[rho_min, rho_max]`.
pub fn penalty_update(rho: f64, r: f64, s: f64, gamma: f64, rho_min: f64, rho_max: f64) -> f64 {
    let next = if r > 10.0 * s {
        gamma * rho
    } else if s > 10.0 * r {
        rho / gamma
    } else {
        rho
    };
    next.clamp(rho_min, rho_max)
}

/// Penalty parameters for one solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub rho0: f64,
    pub gamma: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self {
            rho0: DEFAULT_RHO0,
            gamma: DEFAULT_GAMMA,
            rho_min: DEFAULT_RHO_MIN,
            rho_max: DEFAULT_RHO_MAX,
        }
    }
}

impl PenaltySchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::Config(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho_max && self.rho_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < rho_min <= rho_max < inf, got [{}, {}]",
                self.rho_min, self.rho_max
            )));
        }
        if !(self.rho0 >= self.rho_min && self.rho0 <= self.rho_max) {
            return Err(Error::Config(format!(
                "rho0 = {} outside [{}, {}]",
                self.rho0, self.rho_min, self.rho_max
            )));
        }
        Ok(())
    }

    pub fn update(&self, rho: f64, r: f64, s: f64) -> f64 {
        penalty_update(rho, r, s, self.gamma, self.rho_min, self.rho_max)
    }
}

/// Primal (`r`) and dual (`s`) residuals of one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

/// `max_n ||core_(n) - aux_n||_F`.
pub fn primal_residual(core: &DenseTensor3, aux: &[Matrix; 3]) -> Result<f64> {
    let mut r: f64 = 0.0;
    for (n, g) in aux.iter().enumerate() {
        let cn = unfold(core, n + 1)?;
        if cn.shape() != g.shape() {
            return Err(Error::Dimension(format!(
                "auxiliary matrix {} has shape {:?}, core unfolding has {:?}",
                n + 1,
                g.shape(),
                cn.shape()
            )));
        }
        r = r.max((cn - g).norm());
    }
    Ok(r)
}

/// Residuals for the unfolding-split problems.
///
/// `r = max_n ||core_(n) - aux_n||_F`;
/// `s = max(rho ||core - core_prev||_F, rho ||(x - x_prev) x1 U^T x2 V^T x3 W^T||_F)`.
/// Pass `x_prev = None` when the data tensor does not change between sweeps.
#[allow(clippy::too_many_arguments)]
pub fn residuals(
    core_prev: &DenseTensor3,
    core: &DenseTensor3,
    aux: &[Matrix; 3],
    x_prev: Option<&DenseTensor3>,
    x: &DenseTensor3,
    factors: (&Matrix, &Matrix, &Matrix),
    rho: f64,
) -> Result<Residuals> {
    let primal = primal_residual(core, aux)?;
    let mut dual = rho * frobenius(&core.sub(core_prev)?);
    if let Some(xp) = x_prev {
        let dx = x.sub(xp)?;
        let projected = multi_mode_product(&dx, factors.0, factors.1, factors.2, true)?;
        dual = dual.max(rho * frobenius(&projected));
    }
    Ok(Residuals { primal, dual })
}

/// Stopping rule: `max_n ||core_(n) - aux_n||_F / ||T||_F < tol`.
pub fn converged(
    aux: &[Matrix; 3],
    core_unfoldings: &[Matrix; 3],
    t_norm: f64,
    tol: f64,
) -> Result<bool> {
    if !(t_norm > 0.0) {
        return Err(Error::Degenerate(
            "observed tensor has zero norm; relative convergence is undefined".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for (g, c) in aux.iter().zip(core_unfoldings) {
        if g.shape() != c.shape() {
            return Err(Error::Dimension(format!(
                "auxiliary shape {:?} differs from unfolding shape {:?}",
                g.shape(),
                c.shape()
            )));
        }
        worst = worst.max((c - g).norm());
    }
    Ok(worst / t_norm < tol)
}

/// Dual variables: one matrix per unfolding, or a single tensor.
#[derive(Debug, Clone)]
pub enum Multipliers {
    PerMode([Matrix; 3]),
    Tensor(DenseTensor3),
}

/// Mutable state of one ADMM run.
#[derive(Debug, Clone)]
pub struct AdmmState {
    /// Auxiliary matrices `G_n` (empty for the tensor-multiplier solver).
    pub aux: Vec<Matrix>,
    pub multipliers: Multipliers,
    pub rho: f64,
    pub iteration: usize,
    pub r: f64,
    pub s: f64,
}

impl AdmmState {
    /// Zero auxiliaries and multipliers shaped for core dims `rank`.
    pub fn per_mode(rank: [usize; 3], rho0: f64) -> Self {
        let shape = |n: usize| {
            let rows = rank[n];
            let cols = rank.iter().product::<usize>() / rows;
            Matrix::zeros(rows, cols)
        };
        Self {
            aux: vec![shape(0), shape(1), shape(2)],
            multipliers: Multipliers::PerMode([shape(0), shape(1), shape(2)]),
            rho: rho0,
            iteration: 0,
            r: 0.0,
            s: 0.0,
        }
    }

    pub fn tensor(dims: [usize; 3], rho0: f64) -> Self {
        Self {
            aux: Vec::new(),
            multipliers: Multipliers::Tensor(DenseTensor3::zeros_unchecked(dims)),
            rho: rho0,
            iteration: 0,
            r: 0.0,
            s: 0.0,
        }
    }
}

/// One row of an [`IterationTrace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub r: f64,
    pub s: f64,
    pub rho: f64,
    pub objective: f64,
    pub rse: Option<f64>,
}

/// Per-iteration diagnostics of a solver run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub const CSV_HEADER: &'static str = "iter,r,s,rho,objective,rse";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: IterationRecord) {
        self.records.push(record);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let rse = r.rse.map(|v| format!("{v:e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{}",
                r.iter, r.r, r.s, r.rho, r.objective, rse
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
