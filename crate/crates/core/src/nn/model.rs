use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};

use super::{Activation, Architecture, Layer, Mlp};
use crate::artifact::{push_f64, Container, PayloadReader};
use crate::dataset::{Dataset, ScalingSpec};
use crate::error::{Error, Result};
use crate::physics::AngleGrid;

const KIND: &str = "ris-model";
const VERSION: u32 = 1;

/// Trained network bundled with everything needed to use it in volts and dB.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub mlp: Mlp,
    pub architecture: Option<Architecture>,
    pub scaling: ScalingSpec,
    pub grid: AngleGrid,
    /// Physics fingerprint of the training data.
    pub fingerprint: String,
}

impl Surrogate {
    pub fn new(mlp: Mlp, architecture: Option<Architecture>, dataset: &Dataset) -> Result<Self> {
        if mlp.inputs() != dataset.harmonics() || mlp.outputs() != dataset.n_angles() {
            return Err(Error::config(format!(
                "network maps {} -> {} but the dataset is {} -> {}",
                mlp.inputs(),
                mlp.outputs(),
                dataset.harmonics(),
                dataset.n_angles()
            )));
        }
        Ok(Surrogate {
            mlp,
            architecture,
            scaling: dataset.scaling,
            grid: dataset.meta.grid,
            fingerprint: dataset.meta.fingerprint.clone(),
        })
    }

    pub fn harmonics(&self) -> usize {
        self.mlp.inputs()
    }

    /// Predicted grid powers (dB) for amplitudes in volts.
    pub fn predict_db(&self, w: &[f64]) -> Result<Vec<f64>> {
        let x: Vec<f64> = w.iter().map(|&v| self.scaling.scale_w(v)).collect();
        Ok(self.mlp.forward_one(&x)?.into_iter().map(|p| self.scaling.unscale_p(p)).collect())
    }

    /// Batched prediction, one amplitude vector (volts) per row.
    pub fn predict_batch_db(&self, w: ArrayView2<f64>) -> Result<Array2<f64>> {
        let x = w.mapv(|v| self.scaling.scale_w(v));
        Ok(self.mlp.forward(x.view())?.mapv(|p| self.scaling.unscale_p(p)))
    }

    pub fn check_fingerprint(&self, expected: &str) -> Result<()> {
        if self.fingerprint != expected {
            return Err(Error::Fingerprint { expected: expected.to_string(), found: self.fingerprint.clone() });
        }
        Ok(())
    }
}

fn activation_name(a: Option<Activation>) -> &'static str {
    a.map_or("linear", Activation::name)
}

pub fn save_model(model: &Surrogate, path: &Path) -> Result<()> {
    let mut c = Container::new(KIND, VERSION);
    let layers = model.mlp.layers();
    let shape: Vec<String> =
        layers.iter().map(|l| format!("{}x{}:{}", l.inputs(), l.outputs(), activation_name(l.activation))).collect();
    c.set("fingerprint", &model.fingerprint)
        .set("layers", shape.join(","))
        .set("w_hi", model.scaling.w_hi)
        .set("p_min", model.scaling.p_min)
        .set("p_max", model.scaling.p_max)
        .set("grid_min_deg", model.grid.min_deg)
        .set("grid_max_deg", model.grid.max_deg)
        .set("grid_count", model.grid.count);
    if let Some(a) = &model.architecture {
        c.set("arch_epochs", a.epochs).set("arch_batch_size", a.batch_size).set("arch_layers", a.layer_string());
    }
    for l in layers {
        push_f64(&mut c.payload, l.weights.iter().chain(l.bias.iter()).copied());
        push_f64(&mut c.payload, [l.slope]);
    }
    c.write(path)
}

pub fn load_model(path: &Path) -> Result<Surrogate> {
    let c = Container::read(path, KIND, VERSION)?;
    let bad = |reason: String| Error::format(path, reason);
    let shape: String = c.parse("layers")?;
    let mut reader = PayloadReader::new(&c.payload);
    let mut layers = Vec::new();
    for spec in shape.split(',') {
        let (dims, act) = spec.split_once(':').ok_or_else(|| bad(format!("bad layer spec `{spec}`")))?;
        let (i, o) = dims.split_once('x').ok_or_else(|| bad(format!("bad layer dims `{dims}`")))?;
        let (i, o): (usize, usize) = (
            i.parse().map_err(|_| bad(format!("bad width `{i}`")))?,
            o.parse().map_err(|_| bad(format!("bad width `{o}`")))?,
        );
        let activation = if act == "linear" { None } else { Some(act.parse()?) };
        let weights = reader.f64s(i * o).map_err(bad)?;
        let bias = reader.f64s(o).map_err(bad)?;
        let slope = reader.f64s(1).map_err(bad)?[0];
        layers.push(Layer {
            weights: Array2::from_shape_vec((i, o), weights).map_err(|e| bad(e.to_string()))?,
            bias: Array1::from(bias),
            activation,
            slope,
        });
    }
    reader.finish().map_err(bad)?;
    let mlp = Mlp::from_layers(layers).map_err(|e| bad(e.to_string()))?;
    let architecture = match c.get("arch_layers") {
        Some(layers) => Some(Architecture {
            epochs: c.parse("arch_epochs")?,
            batch_size: c.parse("arch_batch_size")?,
            layers: Architecture::parse_layers(layers)?,
        }),
        None => None,
    };
    Ok(Surrogate {
        mlp,
        architecture,
        scaling: ScalingSpec::new(c.parse("w_hi")?, c.parse("p_min")?, c.parse("p_max")?)?,
        grid: AngleGrid {
            min_deg: c.parse("grid_min_deg")?,
            max_deg: c.parse("grid_max_deg")?,
            count: c.parse("grid_count")?,
        },
        fingerprint: c.parse("fingerprint")?,
    })
}

/// Loads a model and requires it to match the given physics fingerprint.
pub fn load_model_checked(path: &Path, fingerprint: &str) -> Result<Surrogate> {
    let model = load_model(path)?;
    model.check_fingerprint(fingerprint)?;
    Ok(model)
}
