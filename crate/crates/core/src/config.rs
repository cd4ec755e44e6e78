//! The TOML configuration shared by every CLI subcommand.
//!
//! ```toml
//! version = 1
//!
//! [generator]
//! mec_count = 10
//! request_count = 50
//! seed = 7
//!
//! [experiment]
//! request_counts = [30, 35, 40, 50, 60]
//! runs = 50
//!
//! [solver]
//! tol = 1e-7
//! ```
//!
//! Every section is optional and every key falls back to its default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::gen::GeneratorConfig;
use crate::lp::SolverOptions;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub pivot_floor: f64,
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig {
            tol: d.tol,
            pivot_floor: d.pivot_floor,
            max_iterations: d.max_iterations,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            pivot_floor: self.pivot_floor,
            max_iterations: self.max_iterations,
            ..SolverOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            version: CONFIG_VERSION,
            generator: GeneratorConfig::default(),
            experiment: ExperimentConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl ConfigFile {
    /// Parses and validates a config. Parse errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        cfg.generator.validate()?;
        cfg.experiment.validate()?;
        if !(cfg.solver.tol > 0.0 && cfg.solver.pivot_floor > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
