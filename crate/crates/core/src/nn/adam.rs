use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp};
use crate::artifact::{push_f64, Container, PayloadReader};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates, flattened in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, config: AdamConfig) -> Self {
        let n = mlp.parameter_count();
        AdamState { config, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    /// One bias-corrected update of every parameter.
    pub fn update(&mut self, mlp: &mut Mlp, grads: &Gradients, lr: f64) {
        let AdamConfig { beta1, beta2, epsilon } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let g: Vec<f64> = grads.values(mlp).collect();
        assert_eq!(g.len(), self.m.len(), "moment state does not match the network");
        for (((p, g), m), v) in mlp.parameters_mut().zip(g).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut c = Container::new("ris-adam", 1);
        c.set("beta1", self.config.beta1)
            .set("beta2", self.config.beta2)
            .set("epsilon", self.config.epsilon)
            .set("step", self.step)
            .set("parameters", self.m.len());
        push_f64(&mut c.payload, self.m.iter().chain(&self.v).copied());
        c.write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c = Container::read(path, "ris-adam", 1)?;
        let n: usize = c.parse("parameters")?;
        let mut r = PayloadReader::new(&c.payload);
        let bad = |reason: String| Error::format(path, reason);
        let m = r.f64s(n).map_err(bad)?;
        let v = r.f64s(n).map_err(bad)?;
        r.finish().map_err(bad)?;
        Ok(AdamState {
            config: AdamConfig { beta1: c.parse("beta1")?, beta2: c.parse("beta2")?, epsilon: c.parse("epsilon")? },
            step: c.parse("step")?,
            m,
            v,
        })
    }
}
