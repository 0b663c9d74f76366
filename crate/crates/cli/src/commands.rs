use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use roid_core::admm::IterationTrace;
use roid_core::datagen::{
    add_noise, complement_offsets, gen_tucker, laplacian_from_affinity, sample_offsets,
};
use roid_core::io::{read_coo, read_dense, read_matrix, write_coo, write_dense};
use roid_core::metrics::{auc, rse, ScoredLabels};
use roid_core::solvers::{
    hooi_with_history, solve_full_monitored, solve_groid_monitored, solve_roid_monitored,
    solve_shooi_monitored, timed, Monitor,
};
use roid_core::tensor::frobenius;
use roid_core::{DenseTensor3, Matrix, ObservationSet, SolverConfig, SolverResult};

use crate::params::{parse_triple, solver_config, Params, SOLVER_KEYS};
use crate::report::{save_rows, ResultRow};
use crate::{
    CliError, CompleteArgs, DecomposeArgs, EvaluateArgs, GenerateArgs, MaskArgs, NoiseArgs,
};

/// Solver methods; the first three complete, the last two decompose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Roid,
    Groid,
    Shooi,
    /// Full-tensor decomposition with the trace-norm penalty.
    Full,
    Hooi,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Roid => "roid",
            Method::Groid => "groid",
            Method::Shooi => "shooi",
            Method::Full => "full",
            Method::Hooi => "hooi",
        }
    }

    /// Whether `lambda` affects the result.
    pub fn uses_lambda(self) -> bool {
        !matches!(self, Method::Shooi | Method::Hooi)
    }

    /// Whether the method works from a sampled subset of entries.
    pub fn is_completion(self) -> bool {
        matches!(self, Method::Roid | Method::Groid | Method::Shooi)
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "roid" => Ok(Method::Roid),
            "groid" => Ok(Method::Groid),
            "shooi" => Ok(Method::Shooi),
            "full" => Ok(Method::Full),
            "hooi" => Ok(Method::Hooi),
            other => Err(CliError::Usage(format!(
                "unknown method '{other}' (roid, groid, shooi, full, hooi)"
            ))),
        }
    }
}

/// Runs one completion, timing the solver only.
pub fn complete_with(
    method: Method,
    omega: &ObservationSet,
    laplacians: Option<&[Matrix; 3]>,
    config: &SolverConfig,
    reference: Option<&DenseTensor3>,
) -> Result<(SolverResult, Duration), CliError> {
    let monitor = Monitor {
        reference,
        on_sweep: None,
    };
    let (res, elapsed) = timed(|| match method {
        Method::Roid => solve_roid_monitored(omega, config, monitor),
        Method::Shooi => solve_shooi_monitored(omega, config, monitor),
        Method::Groid => {
            let zeros;
            let l = match laplacians {
                Some(l) => l,
                None => {
                    let d = omega.dims();
                    zeros = [
                        Matrix::zeros(d[0], d[0]),
                        Matrix::zeros(d[1], d[1]),
                        Matrix::zeros(d[2], d[2]),
                    ];
                    &zeros
                }
            };
            solve_groid_monitored(omega, l, config, monitor)
        }
        Method::Full | Method::Hooi => Err(roid_core::Error::Config(format!(
            "{} is a decomposition method; use decompose",
            method.name()
        ))),
    });
    Ok((res?, elapsed))
}

/// Outcome of a decomposition run.
pub struct Decomposition {
    pub recon: DenseTensor3,
    pub iterations: usize,
    pub converged: bool,
    /// Empty for HOOI.
    pub trace: IterationTrace,
}

/// Decomposes a fully observed tensor, timing the solver only. HOOI counts as
/// converged when it stopped on the fit tolerance before `maxiter`.
pub fn decompose_with(
    method: Method,
    t: &DenseTensor3,
    config: &SolverConfig,
    reference: Option<&DenseTensor3>,
) -> Result<(Decomposition, Duration), CliError> {
    match method {
        Method::Full => {
            let monitor = Monitor {
                reference,
                on_sweep: None,
            };
            let (res, elapsed) = timed(|| solve_full_monitored(t, config, monitor));
            let res = res?;
            let out = Decomposition {
                recon: res.model.reconstruct(),
                iterations: res.iterations,
                converged: res.converged,
                trace: res.trace,
            };
            Ok((out, elapsed))
        }
        Method::Hooi => {
            let (res, elapsed) =
                timed(|| hooi_with_history(t, config.rank, config.tol, config.maxiter));
            let (model, history) = res?;
            let n = history.len();
            let settled =
                n >= 2 && (history[n - 1] - history[n - 2]).abs() <= config.tol * frobenius(t);
            let out = Decomposition {
                recon: model.reconstruct(),
                iterations: n,
                converged: n < config.maxiter || settled,
                trace: IterationTrace::default(),
            };
            Ok((out, elapsed))
        }
        other => Err(CliError::Usage(format!(
            "{} is a completion method; use complete",
            other.name()
        ))),
    }
}

/// Scores completed entries at the test positions; a test value above 0.5
/// counts as a positive label.
pub fn test_auc(pred: &DenseTensor3, test: &ObservationSet) -> Result<f64, CliError> {
    if test.dims() != pred.dims() {
        return Err(CliError::Usage(format!(
            "test set dims {:?} do not match tensor dims {:?}",
            test.dims(),
            pred.dims()
        )));
    }
    let scores = test.offsets().iter().map(|&o| pred.as_slice()[o]).collect();
    let labels = test.entries().iter().map(|e| e.value > 0.5).collect();
    Ok(auc(&ScoredLabels::new(scores, labels)?)?)
}

fn load_params(config: Option<&Path>) -> Result<Params, CliError> {
    match config {
        Some(p) => Params::load(p),
        None => Ok(Params::default()),
    }
}

fn check_dims(what: &str, got: [usize; 3], want: [usize; 3]) -> Result<(), CliError> {
    if got != want {
        return Err(CliError::Usage(format!(
            "{what} dims {got:?} do not match {want:?}"
        )));
    }
    Ok(())
}

pub fn generate(a: GenerateArgs) -> Result<bool, CliError> {
    let dims = parse_triple(&a.dims)?;
    let rank = parse_triple(&a.rank)?;
    let t = gen_tucker(dims, rank, a.seed)?;
    write_dense(&a.out, &t)?;
    Ok(true)
}

pub fn mask(a: MaskArgs) -> Result<bool, CliError> {
    let t = read_dense(&a.input)?;
    let offsets = sample_offsets(t.dims(), a.ratio, a.seed)?;
    write_coo(&a.out, &ObservationSet::from_offsets(&t, &offsets)?)?;
    if let Some(h) = &a.holdout {
        let rest = complement_offsets(t.dims(), &offsets);
        write_coo(h, &ObservationSet::from_offsets(&t, &rest)?)?;
    }
    Ok(true)
}

pub fn noise(a: NoiseArgs) -> Result<bool, CliError> {
    let t = read_dense(&a.input)?;
    write_dense(&a.out, &add_noise(&t, a.nf, a.seed)?)?;
    Ok(true)
}

/// Three per-mode matrices from a comma-separated list of files, where
/// `none` stands for a zero matrix.
fn graph_files(list: &str, dims: [usize; 3], affinity: bool) -> Result<[Matrix; 3], CliError> {
    let files: Vec<&str> = list.split(',').map(str::trim).collect();
    if files.len() != 3 {
        return Err(CliError::Usage(format!(
            "expected 3 graph files, got {}",
            files.len()
        )));
    }
    let mut out = Vec::with_capacity(3);
    for (n, f) in files.iter().enumerate() {
        let m = if *f == "none" {
            Matrix::zeros(dims[n], dims[n])
        } else {
            let m = read_matrix(f)?;
            if affinity {
                laplacian_from_affinity(&m)?.into_matrix()
            } else {
                m
            }
        };
        if m.shape() != (dims[n], dims[n]) {
            return Err(CliError::Usage(format!(
                "graph for mode {} is {}x{}, expected {}x{}",
                n + 1,
                m.nrows(),
                m.ncols(),
                dims[n],
                dims[n]
            )));
        }
        out.push(m);
    }
    let [a, b, c]: [Matrix; 3] = out.try_into().expect("three matrices");
    Ok([a, b, c])
}

pub fn complete(a: CompleteArgs) -> Result<bool, CliError> {
    let mut p = load_params(a.config.as_deref())?;
    p.overlay([
        ("method", a.method.clone()),
        ("rank", a.rank.clone()),
        ("laplacians", a.laplacians.clone()),
        ("affinity", a.affinity.clone()),
    ]);
    p.overlay(a.solver.overrides());
    let mut allowed = vec!["method", "rank", "laplacians", "affinity"];
    allowed.extend_from_slice(SOLVER_KEYS);
    p.check_keys(&allowed)?;

    let method: Method = p.get("method").unwrap_or("roid").parse()?;
    if !method.is_completion() {
        return Err(CliError::Usage(format!(
            "{} is a decomposition method; use decompose",
            method.name()
        )));
    }
    let rank = parse_triple(p.require("rank")?)?;
    let mut config = solver_config(&p, rank, None)?;
    config.record_trace = a.trace.is_some();

    let omega = read_coo(&a.obs)?;
    let dims = omega.dims();
    let reference = a.reference.as_ref().map(read_dense).transpose()?;
    if let Some(r) = &reference {
        check_dims("reference", r.dims(), dims)?;
    }
    let laplacians = match (method, p.get("laplacians"), p.get("affinity")) {
        (Method::Groid, Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either laplacians or affinity, not both".into(),
            ))
        }
        (Method::Groid, Some(l), None) => Some(graph_files(l, dims, false)?),
        (Method::Groid, None, Some(w)) => Some(graph_files(w, dims, true)?),
        (Method::Groid, None, None) => None,
        (_, None, None) => None,
        _ => return Err(CliError::Usage("graph files only apply to groid".into())),
    };

    let (res, elapsed) = complete_with(
        method,
        &omega,
        laplacians.as_ref(),
        &config,
        reference.as_ref(),
    )?;
    write_dense(&a.out, &res.completed)?;
    if let Some(t) = &a.trace {
        res.trace.save_csv(t)?;
    }
    let rse_value = reference
        .as_ref()
        .map(|r| rse(&res.completed, r))
        .transpose()?;
    let auc_value = a
        .test
        .as_ref()
        .map(|t| {
            read_coo(t)
                .map_err(CliError::from)
                .and_then(|t| test_auc(&res.completed, &t))
        })
        .transpose()?;

    eprintln!(
        "{}: {} iterations, {}, {:.3}s",
        method.name(),
        res.iterations,
        if res.converged {
            "converged"
        } else {
            "not converged"
        },
        elapsed.as_secs_f64()
    );
    if res.diagnostics.nonunique_procrustes > 0 {
        eprintln!(
            "warning: {} rank-deficient factor updates (non-unique orthonormal factor)",
            res.diagnostics.nonunique_procrustes
        );
    }
    if let Some(path) = &a.report {
        p.set("method", method.name());
        let row = ResultRow {
            method: method.name().into(),
            dims,
            rank,
            ratio: omega.len() as f64 / dims.iter().product::<usize>() as f64,
            lambda: method.uses_lambda().then_some(config.lambda),
            seed: config.seed,
            rse: rse_value,
            auc: auc_value,
            iters: res.iterations,
            seconds: elapsed.as_secs_f64(),
            nf: None,
            converged: res.converged,
            config_hash: p.hash(),
        };
        save_rows(path, &[row])?;
    }
    Ok(res.converged)
}

pub fn decompose(a: DecomposeArgs) -> Result<bool, CliError> {
    let mut p = load_params(a.config.as_deref())?;
    p.overlay([("method", a.method.clone()), ("rank", a.rank.clone())]);
    p.overlay(a.solver.overrides());
    let mut allowed = vec!["method", "rank"];
    allowed.extend_from_slice(SOLVER_KEYS);
    p.check_keys(&allowed)?;

    let method: Method = p.get("method").unwrap_or("hooi").parse()?;
    let rank = parse_triple(p.require("rank")?)?;
    let mut config = solver_config(&p, rank, None)?;
    config.record_trace = a.trace.is_some();
    let t = read_dense(&a.input)?;
    let reference = match &a.reference {
        Some(r) => {
            let r = read_dense(r)?;
            check_dims("reference", r.dims(), t.dims())?;
            r
        }
        None => t.clone(),
    };

    if method == Method::Hooi && a.trace.is_some() {
        return Err(CliError::Usage(
            "--trace is only available for method full".into(),
        ));
    }
    let (out, elapsed) = decompose_with(method, &t, &config, Some(&reference))?;
    if let Some(path) = &a.trace {
        out.trace.save_csv(path)?;
    }
    let (recon, iters, converged) = (out.recon, out.iterations, out.converged);
    write_dense(&a.out, &recon)?;
    let rse_value = rse(&recon, &reference)?;
    eprintln!(
        "{}: {iters} iterations, {}, rse {rse_value:e}",
        method.name(),
        if converged {
            "converged"
        } else {
            "not converged"
        }
    );
    if let Some(path) = &a.report {
        p.set("method", method.name());
        let row = ResultRow {
            method: method.name().into(),
            dims: t.dims(),
            rank,
            ratio: 1.0,
            lambda: method.uses_lambda().then_some(config.lambda),
            seed: config.seed,
            rse: Some(rse_value),
            auc: None,
            iters,
            seconds: elapsed.as_secs_f64(),
            nf: None,
            converged,
            config_hash: p.hash(),
        };
        save_rows(path, &[row])?;
    }
    Ok(converged)
}

pub fn evaluate(a: EvaluateArgs) -> Result<bool, CliError> {
    if a.reference.is_none() && a.test.is_none() {
        return Err(CliError::Usage(
            "evaluate needs --reference, --test or both".into(),
        ));
    }
    let pred = read_dense(&a.pred)?;
    let rse_value = match &a.reference {
        Some(r) => {
            let r = read_dense(r)?;
            check_dims("reference", r.dims(), pred.dims())?;
            Some(rse(&pred, &r)?)
        }
        None => None,
    };
    let auc_value = match &a.test {
        Some(t) => Some(test_auc(&pred, &read_coo(t)?)?),
        None => None,
    };
    let show = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    println!("rse,auc");
    println!("{},{}", show(rse_value), show(auc_value));
    Ok(true)
}
