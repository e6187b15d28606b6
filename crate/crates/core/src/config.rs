//! Harness configuration.
//!
//! Values resolve in the order: command-line flag, then config file, then
//! the built-in defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decode::NmsParams;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::losses::{FocalParams, ObjectiveParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Positive cells per nodule.
    pub k: usize,
    /// Negative-to-positive ratio kept by hard-negative mining.
    pub n: usize,
    pub lambda_s: f64,
    /// Candidates decoded per grid.
    pub top_n: usize,
    pub t: f64,
    pub w: f64,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub nms: NmsParams,
    pub grid: GridSpec,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        let objective = ObjectiveParams::default();
        Self {
            k: 7,
            n: 100,
            lambda_s: objective.lambda_s,
            top_n: 100,
            t: objective.focal.t,
            w: objective.focal.w,
            beta: objective.beta,
            alpha: objective.focal.alpha,
            gamma: objective.focal.gamma,
            nms: NmsParams::default(),
            grid: GridSpec {
                dims: [24, 24, 24],
                stride: 4,
            },
            seed: 0,
        }
    }
}

/// Per-field overrides, typically parsed from command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub lambda_s: Option<f64>,
    pub top_n: Option<usize>,
    pub t: Option<f64>,
    pub w: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub tau_siou: Option<f64>,
    pub tau_dr: Option<f64>,
    pub grid_dims: Option<[usize; 3]>,
    pub stride: Option<usize>,
    pub seed: Option<u64>,
}

impl HarnessConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Config file (if any) with overrides applied on top.
    pub fn resolve(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<Self> {
        let base = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        let cfg = base.with_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_overrides(mut self, o: &ConfigOverrides) -> Self {
        macro_rules! take {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = o.$field { $target = v; })*
            };
        }
        take!(
            k => self.k,
            n => self.n,
            lambda_s => self.lambda_s,
            top_n => self.top_n,
            t => self.t,
            w => self.w,
            beta => self.beta,
            alpha => self.alpha,
            gamma => self.gamma,
            tau_siou => self.nms.tau_siou,
            tau_dr => self.nms.tau_dr,
            grid_dims => self.grid.dims,
            stride => self.grid.stride,
            seed => self.seed,
        );
        self
    }

    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.grid.dims, self.grid.stride)?;
        self.nms.validate()?;
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.n == 0 || self.top_n == 0 {
            return Err(Error::Config("n and top_n must be >= 1".into()));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::Config(format!("t = {} must lie in (0, 1)", self.t)));
        }
        for (name, v) in [("alpha", self.alpha), ("w", self.w), ("beta", self.beta)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.gamma >= 0.0) || !(self.lambda_s >= 0.0) {
            return Err(Error::Config(
                "gamma and lambda_s must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn focal(&self) -> FocalParams {
        FocalParams {
            alpha: self.alpha,
            gamma: self.gamma,
            t: self.t,
            w: self.w,
        }
    }

    pub fn objective(&self) -> ObjectiveParams {
        ObjectiveParams {
            focal: self.focal(),
            beta: self.beta,
            lambda_s: self.lambda_s,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
