//! TOML configuration. Every command reads its own table; command-line flags
//! override whatever the file sets.
//!
//! ```toml
//! [scan]
//! family = "logistic"
//! fst = 0.01
//!
//! [fwer]
//! replicates = 1000
//! fst = [0.05, 0.01]
//!
//! [fwer.quality]
//! r2_max = 0.8
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ModelFamily;
use crate::error::{Error, Result};
use crate::experiments::{FwerConfig, GenotypeSetting, IndependenceConfig, MarginalConfig, PowerConfig};
use crate::glm::ConvergenceControl;
use crate::two_stage::{K1Mode, QualityConfig, Stage1Threshold};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scan: ScanSection,
    pub simulate: SimulateSection,
    pub fwer: FwerConfig,
    pub power: PowerConfig,
    pub independence: IndependenceConfig,
    pub marginal: MarginalConfig,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub family: ModelFamily,
    pub alpha: f64,
    /// A single level or one level per marker.
    pub fst: Stage1Threshold,
    pub k1_mode: K1Mode,
    pub standardize: bool,
    pub quality: QualityConfig,
    pub control: ConvergenceControl,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            family: ModelFamily::Linear,
            alpha: 0.05,
            fst: Stage1Threshold::Scalar(0.05),
            k1_mode: K1Mode::Observed,
            standardize: false,
            quality: QualityConfig::default(),
            control: ConvergenceControl::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub family: ModelFamily,
    pub n: usize,
    pub p: usize,
    pub setting: GenotypeSetting,
    pub block_rho: f64,
    /// Plant the causal markers in columns 0 and 1.
    pub causal: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            family: ModelFamily::Linear,
            n: 1000,
            p: 200,
            setting: GenotypeSetting::Independent,
            block_rho: 0.7,
            causal: false,
            beta1: 0.0,
            beta2: 0.0,
            beta3: 0.0,
        }
    }
}
