//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use roid_core::{Init, ModeWeights, SolverConfig};

use crate::CliError;

/// Effective parameters of one command: file values overlaid by flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Params {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected 'key = value'", i + 1))
            })?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", i + 1)));
            }
            values.insert(key, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize(key), value.into());
    }

    /// Copies every `Some` override on top of the current values.
    pub fn overlay<'a>(&mut self, overrides: impl IntoIterator<Item = (&'a str, Option<String>)>) {
        for (k, v) in overrides {
            if let Some(v) = v {
                self.set(k, v);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Rejects keys outside `allowed`, catching typos in config files.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for k in self.values.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown key '{k}'")));
            }
        }
        Ok(())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing required '{key}'")))
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("invalid value '{s}' for '{key}'"))),
        }
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(other) => Err(CliError::Config(format!(
                "invalid boolean '{other}' for '{key}'"
            ))),
        }
    }

    /// Canonical text of the parameters; stable across runs and platforms.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Params::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// A comma-separated list, optionally in brackets; integer items may be
/// ranges `a..=b` or `a..b`.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    for item in inner.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let parse = |x: &str| {
            x.trim()
                .trim_matches('"')
                .parse::<T>()
                .map_err(|_| CliError::Config(format!("invalid list item '{x}'")))
        };
        if let Some((a, b)) = item.split_once("..") {
            let (b, inclusive) = match b.strip_prefix('=') {
                Some(b) => (b, true),
                None => (b, false),
            };
            let lo: i64 = a
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("invalid range '{item}'")))?;
            let hi: i64 = b
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("invalid range '{item}'")))?;
            let hi = if inclusive { hi } else { hi - 1 };
            if hi < lo {
                return Err(CliError::Config(format!("empty range '{item}'")));
            }
            for v in lo..=hi {
                out.push(parse(&v.to_string())?);
            }
        } else {
            out.push(parse(item)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("empty list '{s}'")));
    }
    Ok(out)
}

/// `a,b,c` or `axbxc`, or a single value repeated.
pub fn parse_triple(s: &str) -> Result<[usize; 3], CliError> {
    let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| CliError::Config(format!("invalid size list '{s}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match nums.as_slice() {
        [a] => Ok([*a, *a, *a]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(CliError::Config(format!(
            "expected 1 or 3 sizes, got '{s}'"
        ))),
    }
}

pub fn format_triple(t: [usize; 3]) -> String {
    format!("{}x{}x{}", t[0], t[1], t[2])
}

/// Solver keys shared by `complete`, `decompose` and `bench`.
pub const SOLVER_KEYS: &[&str] = &[
    "lambda", "mu", "weights", "rho0", "gamma", "rho_min", "rho_max", "tol", "maxiter", "init",
    "seed",
];

/// Builds a solver configuration at `rank`, with `seed` taken from the
/// parameters unless given.
pub fn solver_config(
    p: &Params,
    rank: [usize; 3],
    seed: Option<u64>,
) -> Result<SolverConfig, CliError> {
    let mut c = SolverConfig::new(rank);
    c.lambda = p.parsed_or("lambda", c.lambda)?;
    c.mu = p.parsed_or("mu", c.mu)?;
    if let Some(w) = p.get("weights") {
        let w: Vec<f64> = parse_list(w)?;
        if w.len() != 3 {
            return Err(CliError::Config(format!(
                "weights need 3 values, got {}",
                w.len()
            )));
        }
        c.weights = ModeWeights::new([w[0], w[1], w[2]])?;
    }
    c.rho0 = p.parsed_or("rho0", c.rho0)?;
    c.gamma = p.parsed_or("gamma", c.gamma)?;
    c.rho_min = p.parsed_or("rho_min", c.rho_min)?;
    c.rho_max = p.parsed_or("rho_max", c.rho_max)?;
    c.tol = p.parsed_or("tol", c.tol)?;
    c.maxiter = p.parsed_or("maxiter", c.maxiter)?;
    if let Some(i) = p.get("init") {
        c.init = i.parse::<Init>()?;
    }
    c.seed = match seed {
        Some(s) => s,
        None => p.parsed_or("seed", 0u64)?,
    };
    Ok(c)
}
