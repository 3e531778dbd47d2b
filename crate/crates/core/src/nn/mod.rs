//! Dense feed-forward surrogate: architecture genome, network, Adam training
//! and the saved-model format.

mod adam;
mod mlp;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{Gradients, Layer, LayerGradient, Mlp};
pub use model::{load_model, load_model_checked, save_model, Surrogate};
pub use train::{evaluate, train, train_on_dataset, EpochLog, TrainConfig, TrainData, TrainReport};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EPOCH_RANGE: std::ops::RangeInclusive<usize> = 80..=200;
pub const BATCH_SIZES: [usize; 6] = [32, 64, 128, 256, 512, 1024];
pub const NODE_COUNTS: [usize; 6] = [64, 128, 256, 512, 1024, 2048];
pub const LAYER_RANGE: std::ops::RangeInclusive<usize> = 1..=6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Prelu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 4] = [Activation::Relu, Activation::Prelu, Activation::Sigmoid, Activation::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Prelu => "prelu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    /// Rectifiers get fan-in scaling, saturating units fan-average scaling.
    pub fn is_rectifier(self) -> bool {
        matches!(self, Activation::Relu | Activation::Prelu)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::config(format!("unknown activation `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub nodes: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(nodes: usize, activation: Activation) -> Self {
        LayerSpec { nodes, activation }
    }
}

/// Hyperparameters evolved by the genetic search.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub epochs: usize,
    pub batch_size: usize,
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Checks membership in the searchable hyperparameter sets.
    pub fn validate(&self) -> Result<()> {
        if !EPOCH_RANGE.contains(&self.epochs) {
            return Err(Error::config(format!("epochs {} outside {EPOCH_RANGE:?}", self.epochs)));
        }
        if !BATCH_SIZES.contains(&self.batch_size) {
            return Err(Error::config(format!("batch size {} not in {BATCH_SIZES:?}", self.batch_size)));
        }
        if !LAYER_RANGE.contains(&self.layers.len()) {
            return Err(Error::config(format!("{} hidden layers outside {LAYER_RANGE:?}", self.layers.len())));
        }
        if let Some(l) = self.layers.iter().find(|l| !NODE_COUNTS.contains(&l.nodes)) {
            return Err(Error::config(format!("layer width {} not in {NODE_COUNTS:?}", l.nodes)));
        }
        Ok(())
    }

    /// Compact form `256:relu,128:tanh`.
    pub fn layer_string(&self) -> String {
        self.layers.iter().map(|l| format!("{}:{}", l.nodes, l.activation)).collect::<Vec<_>>().join(",")
    }

    pub fn parse_layers(s: &str) -> Result<Vec<LayerSpec>> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|part| {
                let (n, a) = part
                    .split_once(':')
                    .ok_or_else(|| Error::config(format!("layer `{part}` is not `nodes:activation`")))?;
                let nodes = n.trim().parse().map_err(|_| Error::config(format!("bad layer width `{n}`")))?;
                Ok(LayerSpec::new(nodes, a.trim().parse()?))
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let arch: Architecture = toml::from_str(&text).map_err(|e| Error::format(path, e.message().to_string()))?;
        arch.validate()?;
        Ok(arch)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epochs={} batch={} layers=[{}]", self.epochs, self.batch_size, self.layer_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch() -> Architecture {
        Architecture {
            epochs: 120,
            batch_size: 64,
            layers: vec![LayerSpec::new(256, Activation::Relu), LayerSpec::new(128, Activation::Tanh)],
        }
    }

    #[test]
    fn validation_limits() {
        arch().validate().unwrap();
        let mut a = arch();
        a.epochs = 60;
        assert!(a.validate().is_err());
        let mut a = arch();
        a.batch_size = 100;
        assert!(a.validate().is_err());
        let mut a = arch();
        a.layers.clear();
        assert!(a.validate().is_err());
        let mut a = arch();
        a.layers[0].nodes = 100;
        assert!(a.validate().is_err());
    }

    #[test]
    fn layer_string_round_trip() {
        let a = arch();
        assert_eq!(a.layer_string(), "256:relu,128:tanh");
        assert_eq!(Architecture::parse_layers(&a.layer_string()).unwrap(), a.layers);
        assert!(Architecture::parse_layers("12").is_err());
        assert!(Architecture::parse_layers("12:swish").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("arch.toml");
        arch().save(&path).unwrap();
        assert_eq!(Architecture::load(&path).unwrap(), arch());
        std::fs::write(&path, "epochs = 100\nbatch_size = 64\nlayers = []\nextra = 1\n").unwrap();
        assert!(Architecture::load(&path).is_err());
    }
}
