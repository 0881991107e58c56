//! Versioned TOML configuration and its validation.

use std::path::Path;

use heisenberg_ibp::harness::McSettings;
use heisenberg_ibp::{CmSpec, CylinderFunction, GroupPoint, Identity, MomentTarget, OmegaForm, TestFunction, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_SAMPLES: usize = 100;

/// Built-in configuration used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub dim_w: usize,
    pub dim_c: usize,
    pub omega: OmegaSpec,
    pub grid: GridSpec,
    pub mc: McSettings,
    #[serde(default)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaMode {
    Standard,
    Random,
    Flat,
    /// Explicit row-major matrices, one per center coordinate.
    Matrices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSpec {
    pub mode: OmegaMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GirsanovCase {
    pub f: CylinderFunction,
    pub z: CylinderFunction,
    pub h: CmSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathIbpCase {
    pub hs: Vec<CmSpec>,
    pub f: CylinderFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupIbpCase {
    pub hs: Vec<GroupPoint>,
    pub f: TestFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionCase {
    pub f: TestFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsCase {
    pub targets: Vec<MomentTarget>,
    #[serde(default = "default_powers")]
    pub p: Vec<u32>,
}

fn default_powers() -> Vec<u32> {
    vec![1, 2, 4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceCase {
    #[serde(default = "three")]
    pub levels: usize,
    pub identities: Vec<Identity>,
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCase {
    #[serde(default = "one")]
    pub paths: usize,
}

fn one() -> usize {
    1
}

impl Default for SampleCase {
    fn default() -> Self {
        Self { paths: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub girsanov: Vec<GirsanovCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path_ibp: Vec<PathIbpCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub group_ibp: Vec<GroupIbpCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub left_ibp: Vec<GroupIbpCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inversion: Vec<InversionCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceCase>,
    #[serde(default)]
    pub sample: SampleCase,
}

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub steps: Option<usize>,
    pub workers: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::parse(&text)
            }
            None => Self::parse(DEFAULT_CONFIG),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.mc.seed = s;
        }
        if let Some(n) = o.samples {
            self.mc.samples = n;
        }
        if let Some(n) = o.steps {
            self.grid.steps = n;
        }
        if let Some(w) = o.workers {
            self.mc.workers = w;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.dim_w < 1 || self.dim_c < 1 {
            return bad("dim_w and dim_c must be at least 1".into());
        }
        if self.grid.steps < 2 {
            return bad("grid.steps must be at least 2".into());
        }
        if !(self.grid.horizon.is_finite() && self.grid.horizon > 0.0) {
            return bad("grid.T must be positive".into());
        }
        if self.mc.samples < MIN_SAMPLES {
            return bad(format!("mc.samples must be at least {MIN_SAMPLES}"));
        }
        if !(self.omega.scale.is_finite()) {
            return bad("omega.scale must be finite".into());
        }
        if (self.omega.mode == OmegaMode::Matrices) != self.omega.matrices.is_some() {
            return bad("omega.matrices is required with mode = \"matrices\" and only then".into());
        }
        let omega = self.omega()?;
        if (omega.dim_w(), omega.dim_c()) != (self.dim_w, self.dim_c) {
            return bad(format!(
                "omega has shape {}x{}x{}, expected {}x{d}x{d}",
                omega.dim_c(),
                omega.dim_w(),
                omega.dim_w(),
                self.dim_c,
                d = self.dim_w
            ));
        }
        self.mc.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn omega(&self) -> Result<OmegaForm, CliError> {
        let scale = self.omega.scale;
        Ok(match self.omega.mode {
            OmegaMode::Standard => OmegaForm::standard(self.dim_w, self.dim_c).scaled(scale),
            OmegaMode::Random => OmegaForm::random(self.dim_w, self.dim_c, self.omega.seed, scale),
            OmegaMode::Flat => OmegaForm::zero(self.dim_w, self.dim_c),
            OmegaMode::Matrices => OmegaForm::from_matrices(self.omega.matrices.as_deref().unwrap_or_default())
                .map_err(|e| CliError::Config(format!("omega.matrices: {e}")))?
                .scaled(scale),
        })
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.grid.horizon, self.grid.steps).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<serde_json::Value, CliError> {
        serde_json::to_value(self).map_err(|e| CliError::Config(e.to_string()))
    }
}
