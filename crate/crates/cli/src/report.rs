use std::io::Write;
use std::path::Path;

use crate::params::format_triple;
use crate::CliError;

pub const HEADER: [&str; 13] = [
    "method",
    "dims",
    "rank",
    "ratio",
    "lambda",
    "seed",
    "rse",
    "auc",
    "iters",
    "seconds",
    "nf",
    "converged",
    "config_hash",
];

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub dims: [usize; 3],
    pub rank: [usize; 3],
    pub ratio: f64,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub rse: Option<f64>,
    pub auc: Option<f64>,
    pub iters: usize,
    pub seconds: f64,
    pub nf: Option<f64>,
    pub converged: bool,
    pub config_hash: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl ResultRow {
    pub fn fields(&self) -> [String; 13] {
        [
            self.method.clone(),
            format_triple(self.dims),
            format_triple(self.rank),
            format!("{}", self.ratio),
            self.lambda.map(|l| format!("{l}")).unwrap_or_default(),
            self.seed.to_string(),
            opt(self.rse),
            opt(self.auc),
            self.iters.to_string(),
            format!("{:.6}", self.seconds),
            self.nf.map(|n| format!("{n}")).unwrap_or_default(),
            self.converged.to_string(),
            self.config_hash.clone(),
        ]
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_rows(path: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(roid_core::Error::from)?;
    write_rows(file, rows)
}
