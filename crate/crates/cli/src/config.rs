use std::path::Path;

use einbein::{Error, LoopParameter, RefractionModel, SourceSpec};
use serde::Deserialize;

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnsupportedCombination(_)
            | Error::DimensionMismatch(_)
            | Error::NonPolynomialModel
            | Error::OrderOverflow(_)
            | Error::InvalidPoleIndex(_)
            | Error::NonPositiveParameters(_)
            | Error::InvalidInput(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

pub fn config_err(m: impl Into<String>) -> Failure {
    Failure::Config(m.into())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub z: [f64; 2],
    pub nx: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        let axis = |r: [f64; 2], n: usize| (0..n).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64).collect();
        (axis(self.x, self.nx), axis(self.z, self.nz))
    }

    fn validate(&self) -> Result<(), Failure> {
        if self.nx < 2 || self.nz < 2 {
            return Err(config_err("grid resolution must be at least 2 per axis"));
        }
        if self.x.iter().chain(&self.z).any(|v| !v.is_finite()) {
            return Err(config_err("grid ranges must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadeSpec {
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub parameter: LoopParameter,
    #[serde(default = "one")]
    pub winding: i32,
}

fn one() -> i32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransectSpec {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub n: usize,
    #[serde(default = "unit")]
    pub c0: f64,
}

fn unit() -> f64 {
    1.0
}

/// JSON run description; command flags override the matching fields.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: RefractionModel,
    pub source: SourceSpec,
    #[serde(default)]
    pub k0: Vec<f64>,
    pub grid: Option<GridSpec>,
    pub point: Option<Vec<f64>>,
    #[serde(default)]
    pub absorption: f64,
    pub window: Option<f64>,
    pub order: Option<usize>,
    pub pade: Option<PadeSpec>,
    pub monodromy: Option<LoopSpec>,
    pub transect: Option<TransectSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        cfg.model.validate()?;
        cfg.source.validate()?;
        if let Some(g) = &cfg.grid {
            g.validate()?;
        }
        cfg.check_k0()?;
        Ok(cfg)
    }

    pub fn check_k0(&self) -> Result<(), Failure> {
        if self.k0.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(config_err("k0 values must be positive and finite"));
        }
        Ok(())
    }

    pub fn apply_grid(&mut self, res: &str) -> Result<(), Failure> {
        let parts: Vec<&str> = res.split(',').collect();
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| config_err(format!("bad --grid value {res:?}")));
        if parts.len() != 2 {
            return Err(config_err("--grid takes NX,NZ"));
        }
        let g = self.grid.as_mut().ok_or_else(|| config_err("--grid needs a grid range in the config"))?;
        g.nx = parse(parts[0])?;
        g.nz = parse(parts[1])?;
        g.validate()
    }

    pub fn first_k0(&self) -> Result<f64, Failure> {
        self.k0.first().copied().ok_or_else(|| config_err("no k0 given"))
    }

    pub fn grid(&self) -> Result<&GridSpec, Failure> {
        self.grid.as_ref().ok_or_else(|| config_err("config has no grid"))
    }

    pub fn point(&self) -> Result<&[f64], Failure> {
        let p = self.point.as_deref().ok_or_else(|| config_err("no observation point given"))?;
        if p.len() != self.source.dim() {
            return Err(config_err(format!("point has {} components, source has {}", p.len(), self.source.dim())));
        }
        Ok(p)
    }
}

pub fn parse_point(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| config_err(format!("bad coordinate list {s:?}"))))
        .collect()
}
