//! Sectioned TOML run configuration for the command-line tool.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::GridConfig;
use crate::error::{Error, Result};
use crate::model::{Model, ModelParams, ProductionFn};
use crate::pde::PdeConfig;
use crate::simulate::SimConfig;

/// Lattice on which `value` tabulates `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValueSection {
    pub t_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    /// Bump for the smooth-fit quotients.
    pub smooth_fit_h: f64,
}

impl Default for ValueSection {
    fn default() -> Self {
        Self {
            t_points: 21,
            x_min: -3.0,
            x_max: 2.0,
            x_points: 101,
            smooth_fit_h: 1e-3,
        }
    }
}

/// Experiment plan for `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySection {
    pub t: f64,
    pub ys: Vec<f64>,
    pub dt_ladder: Vec<f64>,
    pub skorokhod_paths: usize,
    pub comparison_paths: usize,
    pub marginal_paths: usize,
    pub marginal_y: f64,
    pub bump: f64,
    pub dump_paths: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            t: 0.0,
            ys: vec![0.8, 1.5, 2.2],
            dt_ladder: vec![4e-3, 1e-3, 2.5e-4],
            skorokhod_paths: 10_000,
            comparison_paths: 20_000,
            marginal_paths: 200_000,
            marginal_y: 1.5,
            bump: 0.05,
            dump_paths: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub production: ProductionFn,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub pde: PdeConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub value: ValueSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Checks every block and returns the assembled model.
    pub fn validate(&self) -> Result<Model> {
        self.production.validate()?;
        let model = Model::new(self.model, self.production)?;
        self.grid.validate()?;
        self.pde.validate(&model)?;
        self.sim.validate(self.model.horizon)?;
        let v = &self.value;
        if v.t_points < 2 || v.x_points < 3 {
            return Err(Error::invalid("value", "need t_points >= 2 and x_points >= 3"));
        }
        if !(v.x_max > v.x_min) {
            return Err(Error::invalid("value", "x_max must exceed x_min"));
        }
        if !(v.smooth_fit_h > 0.0) {
            return Err(Error::invalid("smooth_fit_h", "must be positive"));
        }
        let vf = &self.verify;
        if !(0.0..self.model.horizon).contains(&vf.t) {
            return Err(Error::invalid("t", "verification start time must lie in [0, T)"));
        }
        if vf.ys.is_empty() || vf.ys.iter().any(|y| !(*y > 0.0)) {
            return Err(Error::invalid("ys", "need at least one positive start value"));
        }
        if vf.dt_ladder.iter().any(|d| !(*d > 0.0 && *d <= self.model.horizon)) {
            return Err(Error::invalid("dt_ladder", "step sizes must lie in (0, T]"));
        }
        let mut distinct = vf.dt_ladder.clone();
        distinct.push(self.sim.dt);
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::invalid("dt_ladder", "need a step size other than sim.dt"));
        }
        if vf.skorokhod_paths == 0 || vf.comparison_paths == 0 || vf.marginal_paths == 0 {
            return Err(Error::invalid("verify", "path counts must be positive"));
        }
        if !(vf.bump > 0.0 && vf.bump < vf.marginal_y) {
            return Err(Error::invalid("bump", "must lie in (0, marginal_y)"));
        }
        Ok(model)
    }
}
