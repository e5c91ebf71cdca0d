//! Run configuration: a flat `key = value` file merged with command-line
//! flags, defaults filled per problem and rezone mode.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use sale_core::grid::{decompose_domain, BlockLayout, GlobalGrid};
use sale_core::hydro::{ExchangeMode, HydroParams, Rezone};
use sale_core::problems::{ProblemKind, ProblemSpec};
use thiserror::Error;

/// Cycle cap used when only an end time is given.
pub const UNBOUNDED_CYCLES: usize = 1_000_000;

/// Keys accepted in config files and as `--key` flags.
pub const KEYS: [&str; 13] = [
    "problem", "rezone", "cells", "ranks", "cycles", "t_end", "cfl", "backend", "exchange", "materials", "gamma",
    "verify", "out",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown config key '{0}'")]
    UnknownKey(String),

    #[error("invalid value for '{key}': {reason}")]
    Invalid { key: String, reason: String },

    #[error("{path}:{line}: expected 'key = value', found '{text}'")]
    Syntax { path: String, line: usize, text: String },

    #[error("cannot read config file {path}: {reason}")]
    Io { path: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// One thread per rank, channel transport.
    InProcess,
    /// One worker process per rank, TCP transport on loopback.
    MultiProcess,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Self::InProcess => "inprocess",
            Self::MultiProcess => "multiprocess",
        }
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inprocess" => Ok(Self::InProcess),
            "multiprocess" => Ok(Self::MultiProcess),
            other => Err(format!("unknown backend '{other}' (expected inprocess|multiprocess)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub rezone: Rezone,
    pub cells: [usize; 3],
    pub ranks: [usize; 3],
    pub cycles: usize,
    pub cfl: f64,
    pub backend: Backend,
    pub exchange: ExchangeMode,
    pub materials: usize,
    pub out: Option<PathBuf>,
    pub verify: bool,
}

/// Canonical key spelling: flags use dashes, files may use either.
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Split a config file into `(key, value)` pairs. `#` starts a comment.
pub fn parse_config_text(text: &str, path: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { path: path.to_string(), line: n + 1, text: line.to_string() });
        };
        pairs.push((normalize_key(k), v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_config_text(&text, &path.display().to_string())
}

fn parse_triple(key: &str, v: &str) -> Result<[usize; 3], ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(invalid(key, format!("expected 1 to 3 comma-separated counts, got '{v}'")));
    }
    let mut out = [1usize; 3];
    for (d, p) in parts.iter().enumerate() {
        out[d] = p.parse().map_err(|_| invalid(key, format!("'{p}' is not a count")))?;
        if out[d] == 0 {
            return Err(invalid(key, "counts must be positive"));
        }
    }
    Ok(out)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| invalid(key, format!("cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(invalid(key, format!("'{v}' is not a boolean"))),
    }
}

impl RunConfig {
    /// Defaults for `kind`: a 1D tube for Sod and Noh, a 3D octant for
    /// Sedov, one rank, Lagrangian rezoning.
    pub fn defaults(kind: ProblemKind) -> Self {
        let cells = match kind {
            ProblemKind::Sedov => [16, 16, 16],
            ProblemKind::Sod | ProblemKind::Noh => [400, 1, 1],
        };
        Self {
            problem: ProblemSpec::new(kind),
            rezone: Rezone::Lagrange,
            cells,
            ranks: [1, 1, 1],
            cycles: 20,
            cfl: 0.25,
            backend: Backend::InProcess,
            exchange: ExchangeMode::Blocking,
            materials: 1,
            out: None,
            verify: false,
        }
    }

    /// Build a config from ordered `(key, value)` pairs; later pairs win.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut last = std::collections::BTreeMap::new();
        for (k, v) in pairs {
            let k = normalize_key(k);
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k));
            }
            last.insert(k, v.trim().to_string());
        }
        let get = |k: &str| last.get(k).map(String::as_str);
        let kind = match get("problem") {
            Some(v) => v.parse::<ProblemKind>().map_err(|e| invalid("problem", e))?,
            None => ProblemKind::Sedov,
        };
        let mut c = Self::defaults(kind);
        if let Some(v) = get("rezone") {
            c.rezone = v.parse().map_err(|e: String| invalid("rezone", e))?;
        }
        c.cycles = if c.rezone == Rezone::Euler { 200 } else { 20 };
        if let Some(v) = get("cells") {
            c.cells = parse_triple("cells", v)?;
        }
        if let Some(v) = get("ranks") {
            c.ranks = parse_triple("ranks", v)?;
        }
        if let Some(v) = get("t_end") {
            let t: f64 = parse_num("t_end", v)?;
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("t_end", "must be positive"));
            }
            c.problem.t_end = t;
            // an explicit end time without a cycle count runs to that time
            c.cycles = UNBOUNDED_CYCLES;
        }
        if let Some(v) = get("cycles") {
            c.cycles = parse_num("cycles", v)?;
            if c.cycles == 0 {
                return Err(invalid("cycles", "must be positive"));
            }
        }
        if let Some(v) = get("cfl") {
            c.cfl = parse_num("cfl", v)?;
            if !(c.cfl > 0.0 && c.cfl < 1.0) {
                return Err(invalid("cfl", "must lie in (0, 1)"));
            }
        }
        if let Some(v) = get("backend") {
            c.backend = v.parse().map_err(|e: String| invalid("backend", e))?;
        }
        if let Some(v) = get("exchange") {
            c.exchange = v.parse().map_err(|e: String| invalid("exchange", e))?;
        }
        if let Some(v) = get("gamma") {
            c.problem.gamma = parse_num("gamma", v)?;
            if !(c.problem.gamma > 1.0) {
                return Err(invalid("gamma", "must exceed 1"));
            }
        }
        if let Some(v) = get("materials") {
            c.materials = parse_num("materials", v)?;
            match (c.materials, kind) {
                (1, _) => {}
                (2, ProblemKind::Sod) => c.problem.sod_two_material = true,
                (2, _) => return Err(invalid("materials", "two materials are only defined for sod")),
                _ => return Err(invalid("materials", "must be 1 or 2")),
            }
        }
        if let Some(v) = get("verify") {
            c.verify = parse_bool("verify", v)?;
        }
        if let Some(v) = get("out") {
            c.out = Some(PathBuf::from(v));
        }
        c.validate()?;
        Ok(c)
    }

    /// Check the layout preconditions and problem requirements.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cycles == 0 {
            return Err(invalid("cycles", "must be positive"));
        }
        let grid = self.grid()?;
        if self.problem.kind == ProblemKind::Sedov && grid.dimensionality() < 2 {
            return Err(invalid("cells", "sedov needs at least two axes with more than one cell"));
        }
        decompose_domain(&grid, self.ranks).map_err(|e| invalid("ranks", e.to_string()))?;
        self.problem.validate().map_err(|e| invalid("problem", e.to_string()))
    }

    /// Unit-length domain along every axis.
    pub fn grid(&self) -> Result<GlobalGrid, ConfigError> {
        GlobalGrid::new(self.cells, [1.0; 3]).map_err(|e| invalid("cells", e.to_string()))
    }

    pub fn layout(&self) -> Result<BlockLayout, ConfigError> {
        decompose_domain(&self.grid()?, self.ranks).map_err(|e| invalid("ranks", e.to_string()))
    }

    pub fn rank_count(&self) -> usize {
        self.ranks.iter().product()
    }

    pub fn t_end(&self) -> f64 {
        self.problem.t_end
    }

    pub fn params(&self) -> HydroParams {
        HydroParams {
            cfl: self.cfl,
            t_end: self.problem.t_end,
            rezone: self.rezone,
            exchange_mode: self.exchange,
            ..HydroParams::default()
        }
    }

    /// The effective configuration as `(key, value)` pairs. Feeding them
    /// back through [`RunConfig::from_pairs`] gives the same config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let triple = |a: [usize; 3]| format!("{},{},{}", a[0], a[1], a[2]);
        let mut v = vec![
            ("problem", self.problem.kind.name().to_string()),
            ("rezone", self.rezone.name().to_string()),
            ("cells", triple(self.cells)),
            ("ranks", triple(self.ranks)),
            ("t_end", format!("{}", self.problem.t_end)),
            ("cycles", self.cycles.to_string()),
            ("cfl", format!("{}", self.cfl)),
            ("backend", self.backend.name().to_string()),
            (
                "exchange",
                match self.exchange {
                    ExchangeMode::Blocking => "blocking",
                    ExchangeMode::NonBlocking => "nonblocking",
                }
                .to_string(),
            ),
            ("materials", self.materials.to_string()),
            ("gamma", format!("{}", self.problem.gamma)),
            ("verify", self.verify.to_string()),
        ];
        if let Some(out) = &self.out {
            v.push(("out", out.display().to_string()));
        }
        v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}
