//! TOML run configuration.
//!
//! ```toml
//! [model]
//! domain = [[0.0, inf]]            # intervals [lo, hi] and isolated points
//! cost = [{ kind = "exponential", alpha = 1.0, shift = 0.0 }]
//!
//! [params]
//! sigma2 = 1.0
//! b = 1.0
//! p = 5.0                          # or beta_hat = 0.1
//!
//! [sim]                            # optional
//! dt = 1e-3
//! horizon = 1e4
//! n_reps = 64
//! seed = 42
//!
//! [output]
//! dir = "out"
//! ```
//!
//! A `[wireless]` block (`lambda`, `d`, `alpha`, `sigma`, `theta_min`) may
//! replace `[model]`; it then also fixes `sigma2 = sigma²` and `b = lambda·d`.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::bellman::{SolverSettings, SystemParams};
use crate::constrained::wireless_setup;
use crate::cost_model::{validate, ActionSet, CostModel, CostPiece, CostSpec, Segment};
use crate::simulator::SimConfig;
use crate::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelBlock>,
    pub wireless: Option<WirelessBlock>,
    pub params: ParamsBlock,
    pub sim: Option<SimBlock>,
    pub solver: Option<SolverBlock>,
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub domain: Vec<DomainEntry>,
    pub cost: Vec<CostEntry>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DomainEntry {
    Point(f64),
    Interval([f64; 2]),
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CostEntry {
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    Power {
        coeff: f64,
        exponent: f64,
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        offset: f64,
    },
    Exponential {
        alpha: f64,
        #[serde(default)]
        shift: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    Table {
        x: Vec<f64>,
        c: Vec<f64>,
    },
}

impl From<&CostEntry> for CostPiece {
    fn from(e: &CostEntry) -> Self {
        match e.clone() {
            CostEntry::Constant { value } => CostPiece::constant(value),
            CostEntry::Linear { slope, intercept } => CostPiece::Linear { slope, intercept },
            CostEntry::Power { coeff, exponent, shift, offset } => CostPiece::Power { coeff, exponent, shift, offset },
            CostEntry::Exponential { alpha, shift, scale, offset } => {
                CostPiece::Exponential { alpha, shift, scale, offset }
            }
            CostEntry::Table { x, c } => CostPiece::Table { xs: x, cs: c },
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WirelessBlock {
    pub lambda: f64,
    pub d: f64,
    pub alpha: f64,
    pub sigma: f64,
    #[serde(default)]
    pub theta_min: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub sigma2: Option<f64>,
    pub b: Option<f64>,
    pub p: Option<f64>,
    pub beta_hat: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub n_reps: Option<usize>,
    pub seed: Option<u64>,
    pub burn_in: Option<f64>,
    pub z0: Option<f64>,
    pub n_bins: Option<usize>,
    pub boundary_correction: Option<bool>,
    pub tol_mc: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub n_z: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<String>,
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    match (&cfg.model, &cfg.wireless) {
        (None, None) => return Err(ConfigError::Invalid("need a [model] or a [wireless] block".into())),
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid("[model] and [wireless] are mutually exclusive".into()))
        }
        _ => {}
    }
    if cfg.wireless.is_some() && (cfg.params.sigma2.is_some() || cfg.params.b.is_some()) {
        return Err(ConfigError::Invalid(
            "sigma2 and b are derived from [wireless] and must not be given in [params]".into(),
        ));
    }
    if cfg.model.is_some() {
        if cfg.params.sigma2.is_none() {
            return Err(ConfigError::Invalid("missing key params.sigma2".into()));
        }
        if cfg.params.b.is_none() {
            return Err(ConfigError::Invalid("missing key params.b".into()));
        }
    }
    if cfg.params.p.is_some() && cfg.params.beta_hat.is_some() {
        return Err(ConfigError::Invalid("give exactly one of params.p and params.beta_hat".into()));
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
    parse(&text)
}

impl RunConfig {
    /// Validated model and system parameters.
    pub fn build(&self) -> Result<(CostModel, SystemParams), Error> {
        if let Some(w) = &self.wireless {
            return Ok(wireless_setup(w.lambda, w.d, w.alpha, w.sigma, w.theta_min)?);
        }
        let m = self.model.as_ref().expect("checked in parse");
        let segments = m
            .domain
            .iter()
            .map(|d| match *d {
                DomainEntry::Point(x) => Segment::point(x),
                DomainEntry::Interval([lo, hi]) => Segment::interval(lo, hi),
            })
            .collect();
        let cost = CostSpec::new(m.cost.iter().map(CostPiece::from).collect());
        let model = validate(&ActionSet::new(segments), &cost)?;
        let sys = SystemParams::new(self.params.sigma2.unwrap(), self.params.b.unwrap())?;
        Ok((model, sys))
    }

    pub fn p(&self) -> Result<f64, Error> {
        self.params
            .p
            .ok_or_else(|| ConfigError::Invalid("this command needs params.p".into()).into())
    }

    pub fn beta_hat(&self) -> Result<f64, Error> {
        self.params
            .beta_hat
            .ok_or_else(|| ConfigError::Invalid("this command needs params.beta_hat".into()).into())
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let mut s = SolverSettings::default();
        if let Some(n) = self.solver.as_ref().and_then(|s| s.n_z) {
            s.n_z = n;
        }
        s
    }

    pub fn sim_config(&self) -> SimConfig {
        let d = SimConfig::default();
        let Some(s) = &self.sim else { return d };
        SimConfig {
            dt: s.dt.unwrap_or(d.dt),
            horizon: s.horizon.unwrap_or(d.horizon),
            n_reps: s.n_reps.unwrap_or(d.n_reps),
            seed: s.seed.unwrap_or(d.seed),
            burn_in: s.burn_in.unwrap_or(d.burn_in),
            z0: s.z0.or(d.z0),
            n_bins: s.n_bins.unwrap_or(d.n_bins),
            boundary_correction: s.boundary_correction.unwrap_or(d.boundary_correction),
            dump_stride: None,
        }
    }

    pub fn tol_mc(&self) -> f64 {
        self.sim.as_ref().and_then(|s| s.tol_mc).unwrap_or(0.02)
    }

    pub fn output_dir(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.dir.as_deref())
    }
}
