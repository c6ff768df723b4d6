//! Synthetic continuous market read from a versioned TOML file.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::discretize::{DensityTable, DiscretizeError};

/// The configuration shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../config/synthetic.toml");

pub const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported configuration version {0}")]
    Version(u32),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Table(#[from] DiscretizeError),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub version: u32,
    pub grid: GridConfig,
    pub density: DensityConfig,
    pub kernel: KernelConfig,
    pub study: StudyConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub components: Vec<NormalComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub level: f64,
    pub slope: f64,
    pub hump: f64,
    pub hump_center: f64,
    pub hump_width: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub n_list: Vec<usize>,
}

impl KernelConfig {
    pub fn eval(&self, x: f64) -> f64 {
        let base = self.level * (-self.slope * (x - 1.0)).exp();
        let z = (x - self.hump_center) / self.hump_width;
        base + self.hump * (-0.5 * z * z).exp()
    }

    /// Same kernel without the hump: strictly decreasing.
    pub fn monotone(&self) -> Self {
        Self { hump: 0.0, ..*self }
    }
}

impl NormalComponent {
    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        self.weight * (-0.5 * z * z).exp() / (self.sd * (2.0 * std::f64::consts::PI).sqrt())
    }
}

impl SyntheticConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn default_config() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.version != SUPPORTED_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        let g = &self.grid;
        if !(g.lower.is_finite() && g.upper.is_finite() && g.lower >= 0.0 && g.lower < g.upper) || g.samples < 2 {
            return Err(ConfigError::Invalid(
                "grid needs 0 <= lower < upper and at least two samples".into(),
            ));
        }
        if self.density.components.is_empty()
            || self
                .density
                .components
                .iter()
                .any(|c| !(c.weight > 0.0 && c.sd > 0.0 && c.mean.is_finite()))
        {
            return Err(ConfigError::Invalid(
                "density components need positive weight and sd".into(),
            ));
        }
        let k = &self.kernel;
        if !(k.level > 0.0 && k.slope > 0.0 && k.hump >= 0.0 && k.hump_width > 0.0) {
            return Err(ConfigError::Invalid(
                "kernel needs positive level, slope, width and hump >= 0".into(),
            ));
        }
        if self.study.n_list.is_empty() || self.study.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(
                "n_list must be nonempty and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let g = &self.grid;
        let last = g.samples - 1;
        let h = (g.upper - g.lower) / last as f64;
        (0..g.samples)
            .map(|k| if k == last { g.upper } else { g.lower + h * k as f64 })
            .collect()
    }

    pub fn density(&self) -> Result<DensityTable<f64>, ConfigError> {
        let xs = self.grid_points();
        let ys = xs
            .iter()
            .map(|&x| self.density.components.iter().map(|c| c.pdf(x)).sum())
            .collect();
        Ok(DensityTable::new(xs, ys)?)
    }
}
