//! Run configuration read from TOML. Every section is optional and falls back
//! to the built-in defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetConfig;
use crate::error::{Error, Result};
use crate::ga::GaConfig;
use crate::nn::{Architecture, TrainConfig};
use crate::optimize::SaParams;
use crate::physics::{CellConstants, ChannelSetup, PhysicsConfig, RisGeometry, UnitCellCircuit, VaractorCurve};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "RIS_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub geometry: RisGeometry,
    pub circuit: CellConstants,
    pub channel: ChannelSetup,
    pub w0: f64,
    pub bias_min: f64,
    pub bias_max: f64,
    /// `V C_pF R_ohm` table; the built-in junction-law curve when absent.
    pub varactor_table: Option<PathBuf>,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        let p = PhysicsConfig::default();
        PhysicsSection {
            geometry: p.geometry,
            circuit: p.circuit.constants,
            channel: p.channel,
            w0: p.w0,
            bias_min: p.bias_min,
            bias_max: p.bias_max,
            varactor_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub physics: PhysicsSection,
    pub dataset: DatasetConfig,
    pub training: TrainConfig,
    pub architecture: Option<Architecture>,
    pub ga: GaConfig,
    pub sa: SaParams,
    pub paths: Paths,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::format(origin, e.message().to_string()))?;
        let base = origin.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    /// `default` selects the built-in configuration.
    pub fn from_arg(arg: Option<&str>) -> Result<Self> {
        let env = std::env::var(CONFIG_ENV).ok();
        match arg.or(env.as_deref()) {
            None | Some("default") => Ok(RunConfig::default()),
            Some(path) => Self::load(Path::new(path)),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    // Relative paths are taken relative to the config file.
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.physics.varactor_table);
        fix(&mut self.paths.dataset);
        fix(&mut self.paths.model);
        fix(&mut self.paths.table);
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.physics.varactor_table {
            if !p.is_file() {
                return Err(Error::config(format!("varactor table {} does not exist", p.display())));
            }
        }
        self.dataset.validate()?;
        self.training.validate()?;
        if let Some(a) = &self.architecture {
            a.validate()?;
        }
        self.ga.validate()?;
        self.sa.validate()
    }

    pub fn physics(&self) -> Result<PhysicsConfig> {
        let p = &self.physics;
        let curve = match &p.varactor_table {
            Some(path) => VaractorCurve::load(path)?,
            None => VaractorCurve::default(),
        };
        let cfg = PhysicsConfig {
            geometry: p.geometry.clone(),
            circuit: UnitCellCircuit::new(p.circuit.clone(), curve)?,
            channel: p.channel.clone(),
            w0: p.w0,
            bias_min: p.bias_min,
            bias_max: p.bias_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        let cfg = RunConfig::parse("", Path::new("x.toml")).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.physics().unwrap(), PhysicsConfig::default());
    }

    #[test]
    fn serialized_default_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.sa.max_iter = 500;
        cfg.dataset.count = 1234;
        cfg.physics.channel.grid.count = 41;
        cfg.architecture = Some(Architecture {
            epochs: 90,
            batch_size: 64,
            layers: Architecture::parse_layers("256:relu,64:tanh").unwrap(),
        });
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::parse(&text, Path::new("x.toml")).unwrap(), cfg);
    }

    #[test]
    fn partial_sections_and_unknown_keys() {
        let cfg = RunConfig::parse("[sa]\nmax_iter = 300\n[physics.geometry]\nharmonics = 10\n", Path::new("x.toml"))
            .unwrap();
        assert_eq!(cfg.sa.max_iter, 300);
        assert_eq!(cfg.sa.restart, 200);
        assert_eq!(cfg.physics.geometry.harmonics, 10);
        assert!(RunConfig::parse("[sa]\nmaxiter = 300\n", Path::new("x.toml")).is_err());
        assert!(RunConfig::parse("[extra]\n", Path::new("x.toml")).is_err());
    }

    #[test]
    fn varactor_table_must_exist() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.toml");
        let text = "[physics]\nvaractor_table = \"curve.txt\"\n";
        assert!(matches!(RunConfig::parse(text, &cfg_path), Err(Error::Config(_))));
        std::fs::write(dir.path().join("curve.txt"), VaractorCurve::default().to_table()).unwrap();
        let cfg = RunConfig::parse(text, &cfg_path).unwrap();
        let loaded = cfg.physics().unwrap();
        let builtin = VaractorCurve::default();
        for (a, b) in loaded.circuit.curve.samples().iter().zip(builtin.samples()) {
            assert_eq!(a.voltage, b.voltage);
            assert!((a.capacitance - b.capacitance).abs() <= 1e-15 * b.capacitance);
            assert_eq!(a.resistance, b.resistance);
        }
    }
}
