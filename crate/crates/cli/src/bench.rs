//! Parameter sweeps over synthetic Tucker data.
//!
//! The grid is `methods x rank x ratio x nf x lambda x repetitions`. Every run
//! in repetition `r` uses seed `seed + r` for the ground truth, so all methods
//! and settings within one repetition see the same tensor, mask and noise.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use roid_core::datagen::{
    add_noise, gen_tucker, laplacian_from_affinity, random_affinity, sample_offsets,
};
use roid_core::metrics::rse;
use roid_core::{Matrix, ObservationSet};

use crate::commands::{complete_with, decompose_with, Method};
use crate::params::{parse_list, parse_triple, solver_config, Params, SOLVER_KEYS};
use crate::report::{save_rows, ResultRow};
use crate::{BenchArgs, CliError};

const GRID_KEYS: &[&str] = &[
    "methods",
    "method",
    "dims",
    "true_rank",
    "rank_true",
    "rank",
    "rank_given",
    "ratio",
    "nf",
    "repetitions",
    "graph_density",
];

// Offsets separating the streams derived from one run seed.
const MASK_STREAM: u64 = 1 << 32;
const NOISE_STREAM: u64 = 2 << 32;
const GRAPH_STREAM: u64 = 3 << 32;

/// One point of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub method: Method,
    pub rank: [usize; 3],
    pub ratio: f64,
    pub nf: f64,
    pub lambda: f64,
    pub seed: u64,
}

/// A parsed sweep description.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub params: Params,
    pub dims: [usize; 3],
    pub true_rank: [usize; 3],
    pub graph_density: f64,
    pub runs: Vec<RunSpec>,
}

impl Sweep {
    pub fn from_params(params: Params) -> Result<Self, CliError> {
        let mut allowed = GRID_KEYS.to_vec();
        allowed.extend_from_slice(SOLVER_KEYS);
        params.check_keys(&allowed)?;

        let methods: Vec<String> = parse_list(
            params
                .get("methods")
                .or(params.get("method"))
                .unwrap_or("roid"),
        )?;
        let methods = methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<Method>, _>>()?;
        let dims = parse_triple(params.get("dims").unwrap_or("40"))?;
        let true_rank = parse_triple(
            params
                .get("true_rank")
                .or(params.get("rank_true"))
                .unwrap_or("3"),
        )?;
        let ranks: Vec<[usize; 3]> = match params.get("rank").or(params.get("rank_given")) {
            Some(r) => parse_list::<usize>(r)?
                .into_iter()
                .map(|d| [d, d, d])
                .collect(),
            None => vec![true_rank],
        };
        let ratios: Vec<f64> = parse_list(params.get("ratio").unwrap_or("0.3"))?;
        let nfs: Vec<f64> = parse_list(params.get("nf").unwrap_or("0"))?;
        let lambdas: Vec<f64> = parse_list(params.get("lambda").unwrap_or("100"))?;
        let reps: u64 = params.parsed_or("repetitions", 1)?;
        let base_seed: u64 = params.parsed_or("seed", 0)?;
        let graph_density: f64 = params.parsed_or("graph_density", 0.1)?;
        if reps == 0 {
            return Err(CliError::Config("repetitions must be at least 1".into()));
        }

        let mut runs = Vec::new();
        for &method in &methods {
            // Decompositions see every entry, so the ratio axis collapses.
            let method_ratios = if method.is_completion() {
                ratios.clone()
            } else {
                vec![1.0]
            };
            for &rank in &ranks {
                for &ratio in &method_ratios {
                    for &nf in &nfs {
                        for &lambda in &lambdas {
                            for rep in 0..reps {
                                runs.push(RunSpec {
                                    method,
                                    rank,
                                    ratio,
                                    nf,
                                    lambda,
                                    seed: base_seed.wrapping_add(rep),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            params,
            dims,
            true_rank,
            graph_density,
            runs,
        })
    }

    /// Parameters of a single run, used for its `config_hash`.
    fn run_params(&self, run: &RunSpec) -> Params {
        let mut p = self.params.clone();
        p.set("methods", run.method.name());
        p.set("rank", crate::params::format_triple(run.rank));
        p.set("ratio", run.ratio.to_string());
        p.set("nf", run.nf.to_string());
        p.set("lambda", run.lambda.to_string());
        p.set("seed", run.seed.to_string());
        p.set("repetitions", "1");
        p
    }

    /// Executes one run; the RSE is measured against the noiseless tensor.
    pub fn execute(&self, run: &RunSpec) -> Result<ResultRow, CliError> {
        let truth = gen_tucker(self.dims, self.true_rank, run.seed)?;
        let observed = if run.nf > 0.0 {
            add_noise(&truth, run.nf, run.seed.wrapping_add(NOISE_STREAM))?
        } else {
            truth.clone()
        };
        let rp = self.run_params(run);
        let mut config = solver_config(&rp, run.rank, Some(run.seed))?;
        config.lambda = run.lambda;

        let (completed, iters, converged, elapsed) = if run.method.is_completion() {
            let offsets = sample_offsets(self.dims, run.ratio, run.seed.wrapping_add(MASK_STREAM))?;
            let omega = ObservationSet::from_offsets(&observed, &offsets)?;
            let laplacians = match run.method {
                Method::Groid => Some(self.laplacians(run.seed)?),
                _ => None,
            };
            let (res, elapsed) =
                complete_with(run.method, &omega, laplacians.as_ref(), &config, None)?;
            (res.completed, res.iterations, res.converged, elapsed)
        } else {
            let (out, elapsed) = decompose_with(run.method, &observed, &config, None)?;
            (out.recon, out.iterations, out.converged, elapsed)
        };
        Ok(ResultRow {
            method: run.method.name().into(),
            dims: self.dims,
            rank: run.rank,
            ratio: run.ratio,
            lambda: run.method.uses_lambda().then_some(run.lambda),
            seed: run.seed,
            rse: Some(rse(&completed, &truth)?),
            auc: None,
            iters,
            seconds: elapsed.as_secs_f64(),
            nf: Some(run.nf),
            converged,
            config_hash: rp.hash(),
        })
    }

    fn laplacians(&self, seed: u64) -> Result<[Matrix; 3], CliError> {
        let mut out = Vec::with_capacity(3);
        for (n, &d) in self.dims.iter().enumerate() {
            let w = random_affinity(
                d,
                self.graph_density,
                seed.wrapping_add(GRAPH_STREAM + n as u64),
            )?;
            out.push(laplacian_from_affinity(&w)?.into_matrix());
        }
        let [a, b, c]: [Matrix; 3] = out.try_into().expect("three modes");
        Ok([a, b, c])
    }

    /// A row for a run that failed with an error.
    fn failed_row(&self, run: &RunSpec) -> ResultRow {
        ResultRow {
            method: run.method.name().into(),
            dims: self.dims,
            rank: run.rank,
            ratio: run.ratio,
            lambda: run.method.uses_lambda().then_some(run.lambda),
            seed: run.seed,
            rse: None,
            auc: None,
            iters: 0,
            seconds: 0.0,
            nf: Some(run.nf),
            converged: false,
            config_hash: self.run_params(run).hash(),
        }
    }

    /// Runs the whole grid on `jobs` threads; rows come back in grid order.
    pub fn execute_all(&self, jobs: usize) -> Result<Vec<ResultRow>, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        let done = AtomicUsize::new(0);
        let total = self.runs.len();
        let rows = pool.install(|| {
            self.runs
                .par_iter()
                .map(|run| {
                    let row = self.execute(run).unwrap_or_else(|e| {
                        eprintln!(
                            "run {} rank {:?} seed {} failed: {e}",
                            run.method.name(),
                            run.rank,
                            run.seed
                        );
                        self.failed_row(run)
                    });
                    let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                    eprintln!(
                        "[{k}/{total}] {} rank {} ratio {} rse {}",
                        row.method,
                        row.rank[0],
                        row.ratio,
                        row.rse
                            .map(|v| format!("{v:.3e}"))
                            .unwrap_or_else(|| "-".into())
                    );
                    row
                })
                .collect()
        });
        Ok(rows)
    }
}

fn default_jobs() -> usize {
    std::env::var("ROID_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&j: &usize| j > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

pub(crate) fn run_bench(a: BenchArgs) -> Result<bool, CliError> {
    let mut p = match &a.spec {
        Some(path) => Params::load(path)?,
        None => Params::default(),
    };
    p.overlay([
        ("methods", a.methods.clone()),
        ("dims", a.dims.clone()),
        ("true_rank", a.true_rank.clone()),
        ("rank", a.rank.clone()),
        ("ratio", a.ratio.clone()),
        ("nf", a.nf.clone()),
        ("repetitions", a.repetitions.clone()),
        ("graph_density", a.graph_density.clone()),
    ]);
    p.overlay(a.solver.overrides());
    let sweep = Sweep::from_params(p)?;
    let rows = sweep.execute_all(a.jobs.unwrap_or_else(default_jobs))?;
    save_rows(&a.out, &rows)?;
    Ok(rows.iter().all(|r| r.converged))
}
