//! Tucker-model solvers.
//!
//! * [`solve_roid`]: completion with a trace-norm penalty on the core tensor,
//!   split over the three core unfoldings.
//! * [`solve_groid`]: the same with graph-Laplacian penalties on the factors.
//! * [`solve_full`]: the fully observed decomposition variant.
//! * [`solve_shooi`]: sparse HOOI, fitting the Tucker model on observed
//!   entries only through a tensor-valued split.
//! * [`solve_hooi`]: classic higher-order orthogonal iteration.

mod engine;
mod hooi;
mod shooi;
pub mod steps;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::admm::{IterationTrace, PenaltySchedule, Residuals};
use crate::error::{Error, Result};
use crate::linalg::{svds, Matrix, ModeWeights};
use crate::tensor::{multi_mode_product, unfold, DenseTensor3, Dims3};

pub use engine::{
    solve_full, solve_full_monitored, solve_groid, solve_groid_monitored, solve_roid,
    solve_roid_monitored, STALL_FACTOR,
};
pub use hooi::{hooi_with_history, solve_hooi};
pub use shooi::{solve_shooi, solve_shooi_monitored, SHOOI_RHO_FLOOR};
pub use steps::{
    core_update, factor_mode_update, factor_update, graph_cost, graph_factor_update, interpolate_x,
    procrustes_gain, shrink_aux, subproblem_objective, FactorRule, FactorUpdate,
};

/// Core tensor plus column-orthonormal factors: `X = G x1 U x2 V x3 W`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    pub core: DenseTensor3,
    pub u: Matrix,
    pub v: Matrix,
    pub w: Matrix,
}

impl TuckerModel {
    pub fn new(core: DenseTensor3, u: Matrix, v: Matrix, w: Matrix) -> Result<Self> {
        let d = core.dims();
        for (n, f) in [&u, &v, &w].into_iter().enumerate() {
            if f.ncols() != d[n] || f.nrows() < d[n] {
                return Err(Error::Dimension(format!(
                    "factor {} is {}x{}, core dim is {}",
                    n + 1,
                    f.nrows(),
                    f.ncols(),
                    d[n]
                )));
            }
        }
        Ok(Self { core, u, v, w })
    }

    pub fn rank(&self) -> [usize; 3] {
        self.core.dims()
    }

    pub fn dims(&self) -> Dims3 {
        [self.u.nrows(), self.v.nrows(), self.w.nrows()]
    }

    pub fn reconstruct(&self) -> DenseTensor3 {
        multi_mode_product(&self.core, &self.u, &self.v, &self.w, false)
            .expect("model shapes are validated")
    }

    pub fn factors(&self) -> [&Matrix; 3] {
        [&self.u, &self.v, &self.w]
    }

    /// `max_n ||F_n^T F_n - I||_F`.
    pub fn orthonormality_error(&self) -> f64 {
        self.factors()
            .iter()
            .map(|f| (f.transpose() * *f - Matrix::identity(f.ncols(), f.ncols())).norm())
            .fold(0.0, f64::max)
    }
}

/// How the factors are initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Dominant left singular vectors of each unfolding of the zero-filled
    /// observed tensor.
    #[default]
    HosvdOfFilled,
    /// Orthonormalised seeded Gaussian matrices.
    RandomOrthonormal,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hosvd" | "hosvd-of-filled" => Ok(Self::HosvdOfFilled),
            "random" | "random-orthonormal" => Ok(Self::RandomOrthonormal),
            other => Err(Error::Config(format!("unknown init '{other}'"))),
        }
    }
}

impl std::fmt::Display for Init {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::HosvdOfFilled => "hosvd",
            Self::RandomOrthonormal => "random",
        })
    }
}

/// Parameters shared by the ADMM solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Core dims `(d1, d2, d3)`.
    pub rank: [usize; 3],
    /// Trace-norm weight is `alpha_n / lambda`.
    pub lambda: f64,
    /// Graph penalty weight (GROID only).
    pub mu: f64,
    pub weights: ModeWeights,
    pub rho0: f64,
    pub gamma: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub tol: f64,
    pub maxiter: usize,
    pub init: Init,
    pub seed: u64,
    /// Record an [`IterationTrace`]; off by default.
    pub record_trace: bool,
}

impl SolverConfig {
    pub fn new(rank: [usize; 3]) -> Self {
        let p = PenaltySchedule::default();
        Self {
            rank,
            lambda: 100.0,
            mu: 0.0,
            weights: ModeWeights::uniform(),
            rho0: p.rho0,
            gamma: p.gamma,
            rho_min: p.rho_min,
            rho_max: p.rho_max,
            tol: 1e-5,
            maxiter: 500,
            init: Init::default(),
            seed: 0,
            record_trace: false,
        }
    }

    pub fn penalty(&self) -> PenaltySchedule {
        PenaltySchedule {
            rho0: self.rho0,
            gamma: self.gamma,
            rho_min: self.rho_min,
            rho_max: self.rho_max,
        }
    }

    pub fn validate(&self, dims: Dims3) -> Result<()> {
        for n in 0..3 {
            if self.rank[n] == 0 || self.rank[n] > dims[n] {
                return Err(Error::Range(format!(
                    "rank {:?} incompatible with dims {dims:?}: need 1 <= d_n <= I_n",
                    self.rank
                )));
            }
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.maxiter == 0 {
            return Err(Error::Config("maxiter must be >= 1".into()));
        }
        self.penalty().validate()
    }
}

/// Counters for numerically notable events during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Procrustes inputs that were rank deficient (non-unique maximizer).
    pub nonunique_procrustes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub model: TuckerModel,
    /// The recovered tensor `X`.
    pub completed: DenseTensor3,
    /// Empty unless `record_trace` was set.
    pub trace: IterationTrace,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

/// Read-only view of a solver after each sweep.
#[derive(Debug)]
pub struct SweepInfo<'a> {
    pub iteration: usize,
    pub model: &'a TuckerModel,
    /// Current `X` (ROID/GROID/full) or `Z` (SHOOI).
    pub x: &'a DenseTensor3,
    pub residuals: Residuals,
    /// Penalty used during this sweep.
    pub rho: f64,
    /// Successive-iterate change `||X^{k+1} - X^k||_F`.
    pub x_change: f64,
    /// Largest change of an auxiliary matrix `||G_n^{k+1} - G_n^k||_F`.
    pub aux_change: f64,
}

/// Optional hooks for a solver run: a ground truth for per-iteration RSE in
/// the trace and a per-sweep callback.
#[derive(Default)]
pub struct Monitor<'a> {
    pub reference: Option<&'a DenseTensor3>,
    pub on_sweep: Option<&'a mut dyn FnMut(&SweepInfo<'_>)>,
}

impl<'a> Monitor<'a> {
    pub fn with_reference(reference: &'a DenseTensor3) -> Self {
        Self {
            reference: Some(reference),
            on_sweep: None,
        }
    }

    pub(crate) fn notify(&mut self, info: &SweepInfo<'_>) {
        if let Some(cb) = self.on_sweep.as_mut() {
            cb(info);
        }
    }
}

/// Initial factors for `x` at core dims `rank`.
pub fn initial_factors(
    x: &DenseTensor3,
    rank: [usize; 3],
    init: Init,
    seed: u64,
) -> Result<[Matrix; 3]> {
    match init {
        Init::HosvdOfFilled => Ok([
            svds(&unfold(x, 1)?, rank[0])?,
            svds(&unfold(x, 2)?, rank[1])?,
            svds(&unfold(x, 3)?, rank[2])?,
        ]),
        Init::RandomOrthonormal => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = x.dims();
            let mut out = Vec::with_capacity(3);
            for n in 0..3 {
                let g = Matrix::from_fn(dims[n], rank[n], |_, _| StandardNormal.sample(&mut rng));
                out.push(g.qr().q());
            }
            Ok([out.remove(0), out.remove(0), out.remove(0)])
        }
    }
}

/// Wall-clock helper used by the CLI around solver calls.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed())
}
