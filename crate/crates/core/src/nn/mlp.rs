use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Activation, Architecture, LayerSpec};
use crate::error::{Error, Result};

/// Initial negative-side slope of PReLU units.
pub const PRELU_INITIAL_SLOPE: f64 = 0.25;

/// Dense layer `a = act(x W + b)`; `weights` is `inputs x outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// `None` for the linear output layer.
    pub activation: Option<Activation>,
    /// Learned PReLU slope, shared by the whole layer. Unused otherwise.
    pub slope: f64,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn has_slope(&self) -> bool {
        self.activation == Some(Activation::Prelu)
    }

    fn activate(&self, z: f64) -> f64 {
        match self.activation {
            None => z,
            Some(Activation::Relu) => z.max(0.0),
            Some(Activation::Prelu) => {
                if z > 0.0 {
                    z
                } else {
                    self.slope * z
                }
            }
            Some(Activation::Sigmoid) => 1.0 / (1.0 + (-z).exp()),
            Some(Activation::Tanh) => z.tanh(),
        }
    }

    /// Derivative of the activation given pre-activation `z` and output `a`.
    fn derivative(&self, z: f64, a: f64) -> f64 {
        match self.activation {
            None => 1.0,
            Some(Activation::Relu) => (z > 0.0) as u8 as f64,
            Some(Activation::Prelu) => {
                if z > 0.0 {
                    1.0
                } else {
                    self.slope
                }
            }
            Some(Activation::Sigmoid) => a * (1.0 - a),
            Some(Activation::Tanh) => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub slope: f64,
}

/// Parameter-shaped gradient of the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

/// Dense network with linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Seeded initialization for an evolved architecture.
    pub fn init(arch: &Architecture, inputs: usize, outputs: usize, seed: u64) -> Result<Self> {
        arch.validate()?;
        Ok(Mlp::with_hidden(inputs, &arch.layers, outputs, seed))
    }

    /// Seeded initialization for arbitrary hidden widths: uniform He limits
    /// for rectifiers, uniform Glorot limits otherwise, zero biases.
    pub fn with_hidden(inputs: usize, hidden: &[LayerSpec], outputs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = inputs;
        let specs = hidden.iter().map(|l| (l.nodes, Some(l.activation))).chain([(outputs, None)]);
        for (fan_out, activation) in specs {
            let limit = match activation {
                Some(a) if a.is_rectifier() => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit));
            layers.push(Layer { weights, bias: Array1::zeros(fan_out), activation, slope: PRELU_INITIAL_SLOPE });
            fan_in = fan_out;
        }
        Mlp { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least an output layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::config(format!("layer {i}: bias length {} != width {}", l.bias.len(), l.outputs())));
            }
            if i > 0 && layers[i - 1].outputs() != l.inputs() {
                return Err(Error::config(format!("layer {i} input width does not chain")));
            }
        }
        if layers.last().unwrap().activation.is_some() {
            return Err(Error::config("output layer must be linear"));
        }
        let mlp = Mlp { layers };
        if !mlp.parameters().all(f64::is_finite) {
            return Err(Error::config("network parameters must be finite"));
        }
        Ok(mlp)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn hidden_specs(&self) -> Vec<LayerSpec> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| LayerSpec::new(l.outputs(), l.activation.unwrap()))
            .collect()
    }

    /// Parameters in canonical order: per layer, weights row-major, bias,
    /// then the PReLU slope when present.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().chain(l.has_slope().then_some(l.slope)))
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers.iter_mut().flat_map(|l| {
            let has_slope = l.has_slope();
            l.weights.iter_mut().chain(l.bias.iter_mut()).chain(has_slope.then_some(&mut l.slope))
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len() + l.has_slope() as usize).sum()
    }

    /// Sum of squared weights, the quantity the L2 penalty multiplies.
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.iter().map(|w| w * w).sum::<f64>()).sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.inputs() {
            return Err(Error::domain(format!("expected {} inputs, got {}", self.inputs(), x.ncols())));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("network input must be finite"));
        }
        Ok(())
    }

    /// Batched inference, one sample per row.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        for l in &self.layers {
            let mut z = a.dot(&l.weights);
            z += &l.bias;
            if l.activation.is_some() {
                z.mapv_inplace(|v| l.activate(v));
            }
            a = z;
        }
        Ok(a)
    }

    /// Single-sample inference.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::domain(e.to_string()))?;
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    /// Mean squared error over every output of the batch.
    pub fn mse(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
        let pred = self.forward(x)?;
        check_target(&pred, &y)?;
        Ok(mean_sq_diff(&pred, &y))
    }

    /// MSE plus `l2` times the squared weight norm.
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView2<f64>, l2: f64) -> Result<f64> {
        Ok(self.mse(x, y)? + l2 * self.weight_norm_sq())
    }

    /// Loss (with penalty), its plain MSE part, and reverse-mode gradients.
    pub fn gradients(&self, x: ArrayView2<f64>, y: ArrayView2<f64>, l2: f64) -> Result<(f64, f64, Gradients)> {
        self.check_input(&x)?;
        if x.nrows() == 0 {
            return Err(Error::domain("empty batch"));
        }
        // Keep (input, pre-activation, output) for every layer.
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for l in &self.layers {
            let mut z = a.dot(&l.weights);
            z += &l.bias;
            let out = if l.activation.is_some() { z.mapv(|v| l.activate(v)) } else { z.clone() };
            inputs.push(a);
            pre.push(z);
            a = out;
        }
        check_target(&a, &y)?;
        let mse = mean_sq_diff(&a, &y);
        let loss = mse + l2 * self.weight_norm_sq();

        let scale = 2.0 / (a.len() as f64);
        let mut delta = (&a - &y) * scale;
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let z = &pre[i];
            let mut slope = 0.0;
            if l.activation.is_some() {
                if l.has_slope() {
                    slope =
                        Zip::from(&delta).and(z).fold(0.0, |acc, &d, &zv| if zv > 0.0 { acc } else { acc + d * zv });
                }
                // Output of this layer is the next layer's input (or `a` for the last).
                let out = if i + 1 < self.layers.len() { &inputs[i + 1] } else { &a };
                Zip::from(&mut delta).and(z).and(out).for_each(|d, &zv, &av| *d *= l.derivative(zv, av));
            }
            let mut gw = inputs[i].t().dot(&delta);
            if l2 != 0.0 {
                gw.scaled_add(2.0 * l2, &l.weights);
            }
            let gb = delta.sum_axis(Axis(0));
            let next = if i > 0 { Some(delta.dot(&l.weights.t())) } else { None };
            grads.push(LayerGradient { weights: gw, bias: gb, slope });
            if let Some(n) = next {
                delta = n;
            }
        }
        grads.reverse();
        Ok((loss, mse, Gradients { layers: grads }))
    }
}

impl Gradients {
    /// Components in the same order as [`Mlp::parameters`].
    pub fn values<'a>(&'a self, mlp: &'a Mlp) -> impl Iterator<Item = f64> + 'a {
        self.layers
            .iter()
            .zip(mlp.layers())
            .flat_map(|(g, l)| g.weights.iter().chain(g.bias.iter()).copied().chain(l.has_slope().then_some(g.slope)))
    }
}

fn check_target(pred: &Array2<f64>, y: &ArrayView2<f64>) -> Result<()> {
    if pred.dim() != y.dim() {
        return Err(Error::domain(format!("target shape {:?} does not match output {:?}", y.dim(), pred.dim())));
    }
    Ok(())
}

fn mean_sq_diff(a: &Array2<f64>, b: &ArrayView2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &p, &t| acc + (p - t) * (p - t)) / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn small(seed: u64) -> Mlp {
        Mlp::with_hidden(3, &[LayerSpec::new(5, Activation::Tanh), LayerSpec::new(4, Activation::Prelu)], 2, seed)
    }

    // Scalar reference forward pass.
    fn naive_forward(mlp: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in mlp.layers() {
            let mut out = vec![0.0; l.outputs()];
            for (j, o) in out.iter_mut().enumerate() {
                let mut z = l.bias[j];
                for (i, ai) in a.iter().enumerate() {
                    z += ai * l.weights[[i, j]];
                }
                *o = match l.activation {
                    None => z,
                    Some(Activation::Relu) => {
                        if z > 0.0 {
                            z
                        } else {
                            0.0
                        }
                    }
                    Some(Activation::Prelu) => {
                        if z > 0.0 {
                            z
                        } else {
                            l.slope * z
                        }
                    }
                    Some(Activation::Sigmoid) => 1.0 / (1.0 + (-z).exp()),
                    Some(Activation::Tanh) => z.tanh(),
                };
            }
            a = out;
        }
        a
    }

    #[test]
    fn same_seed_same_parameters() {
        assert_eq!(small(4), small(4));
        assert_ne!(small(4), small(5));
    }

    #[test]
    fn matches_scalar_reference() {
        let mlp = Mlp::with_hidden(
            4,
            &[
                LayerSpec::new(6, Activation::Relu),
                LayerSpec::new(5, Activation::Sigmoid),
                LayerSpec::new(3, Activation::Prelu),
            ],
            2,
            11,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let got = mlp.forward_one(&x).unwrap();
            for (g, e) in got.iter().zip(naive_forward(&mlp, &x)) {
                assert!((g - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn batch_equals_single() {
        let mlp = small(1);
        let x = Array2::from_shape_fn((17, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin().abs());
        let batch = mlp.forward(x.view()).unwrap();
        for i in 0..17 {
            let one = mlp.forward_one(x.row(i).as_slice().unwrap()).unwrap();
            for (a, b) in one.iter().zip(batch.row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_weights_give_activated_bias() {
        let mut mlp = small(2);
        let mut expected_hidden = Vec::new();
        for (k, l) in mlp.layers.iter_mut().enumerate() {
            l.weights.fill(0.0);
            l.bias = Array1::from_shape_fn(l.outputs(), |j| 0.1 * (j as f64 + 1.0) - 0.2 * k as f64);
            expected_hidden.push(l.bias.mapv(|b| l.activate(b)));
        }
        let out = mlp.forward_one(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(out, expected_hidden.last().unwrap().to_vec());
    }

    #[test]
    fn identity_linear_layer() {
        let layer = Layer { weights: Array2::eye(3), bias: Array1::zeros(3), activation: None, slope: 0.0 };
        let mlp = Mlp::from_layers(vec![layer]).unwrap();
        assert_eq!(mlp.forward_one(&[0.2, 0.5, 0.9]).unwrap(), vec![0.2, 0.5, 0.9]);
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(matches!(small(0).forward_one(&[0.0, f64::NAN, 1.0]), Err(Error::Domain(_))));
        assert!(small(0).forward_one(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn loss_identities() {
        let mlp = small(3);
        let x = array![[0.1, 0.2, 0.3], [0.9, 0.4, 0.0]];
        let y = mlp.forward(x.view()).unwrap();
        let l2 = 1e-3;
        assert!((mlp.loss(x.view(), y.view(), l2).unwrap() - l2 * mlp.weight_norm_sq()).abs() < 1e-15);
        let shifted = &y + &array![[0.5, -1.0], [0.0, 2.0]];
        let single = mlp.loss(x.view(), shifted.view(), 0.0).unwrap();
        assert!((single - (0.25 + 1.0 + 0.0 + 4.0) / 4.0).abs() < 1e-12);
        let xx = ndarray::concatenate![Axis(0), x, x];
        let yy = ndarray::concatenate![Axis(0), shifted, shifted];
        assert!(
            (mlp.loss(xx.view(), yy.view(), l2).unwrap() - mlp.loss(x.view(), shifted.view(), l2).unwrap()).abs()
                < 1e-15
        );
    }

    #[test]
    fn l2_term_adds_exactly() {
        let mlp = small(6);
        let x = array![[0.1, 0.7, 0.3]];
        let y = array![[0.3, -0.2]];
        let (_, _, g0) = mlp.gradients(x.view(), y.view(), 0.0).unwrap();
        let (_, _, g1) = mlp.gradients(x.view(), y.view(), 0.01).unwrap();
        for ((a, b), l) in g0.layers.iter().zip(&g1.layers).zip(mlp.layers()) {
            let expected = &a.weights + &(l.weights.mapv(|w| 2.0 * 0.01 * w));
            assert!((&b.weights - &expected).iter().all(|d| d.abs() < 1e-15));
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn dead_relu_gets_no_weight_gradient() {
        let mut mlp = Mlp::with_hidden(2, &[LayerSpec::new(3, Activation::Relu)], 1, 9);
        mlp.layers[0].bias[1] = -10.0;
        let x = array![[0.1, 0.5], [0.9, 0.2], [0.4, 0.4]];
        let y = array![[1.0], [0.0], [0.5]];
        let (_, _, g) = mlp.gradients(x.view(), y.view(), 0.0).unwrap();
        assert!(g.layers[0].weights.column(1).iter().all(|&v| v == 0.0));
        assert_eq!(g.layers[0].bias[1], 0.0);
    }

    #[test]
    fn init_variance_matches_fan_scale() {
        let he = Mlp::with_hidden(100, &[LayerSpec::new(100, Activation::Relu)], 1, 1);
        let w = &he.layers()[0].weights;
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert!((var / (2.0 / 100.0) - 1.0).abs() < 0.2, "{var}");
        let glorot = Mlp::with_hidden(100, &[LayerSpec::new(100, Activation::Tanh)], 1, 1);
        let w = &glorot.layers()[0].weights;
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert!((var / (2.0 / 200.0) - 1.0).abs() < 0.2, "{var}");
        assert!(glorot.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn parameter_views_agree() {
        let mut mlp = small(8);
        let n = mlp.parameter_count();
        assert_eq!(mlp.parameters().count(), n);
        assert_eq!(mlp.parameters_mut().count(), n);
        let (_, _, g) = mlp.gradients(array![[0.1, 0.2, 0.3]].view(), array![[0.0, 0.0]].view(), 0.0).unwrap();
        assert_eq!(g.values(&mlp).count(), n);
    }
}
