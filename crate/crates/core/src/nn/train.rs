use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, Architecture, Mlp};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Weight-decay coefficient on the squared weight norm.
    pub l2: f64,
    pub learning_rate: f64,
    /// Non-improving epochs before the learning rate is halved.
    pub plateau_patience: usize,
    /// Non-improving epochs before training stops.
    pub stop_patience: usize,
    /// Validation loss must drop by more than this to count as improvement.
    pub min_delta: f64,
    pub seed: u64,
    /// Leading fraction of the dataset used for training.
    pub train_fraction: f64,
    /// Upper bound on epochs regardless of the architecture's own count.
    pub epoch_cap: Option<usize>,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2: 5e-7,
            learning_rate: 1e-3,
            plateau_patience: 20,
            stop_patience: 30,
            min_delta: 1e-6,
            seed: 0,
            train_fraction: 0.9,
            epoch_cap: None,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config("l2 must be finite and non-negative"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(0 < self.plateau_patience && self.plateau_patience < self.stop_patience) {
            return Err(Error::config("need 0 < plateau_patience < stop_patience"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        if self.epoch_cap == Some(0) {
            return Err(Error::config("epoch cap must be positive"));
        }
        Ok(())
    }
}

/// Scaled training and validation matrices.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub x_train: Array2<f64>,
    pub y_train: Array2<f64>,
    pub x_val: Array2<f64>,
    pub y_val: Array2<f64>,
}

impl TrainData {
    /// Normalized dataset split in stored order.
    pub fn from_dataset(ds: &Dataset, train_fraction: f64) -> Self {
        let (x, y) = ds.normalize();
        let cut = ds.split_index(train_fraction);
        TrainData {
            x_train: x.slice(s![..cut, ..]).to_owned(),
            y_train: y.slice(s![..cut, ..]).to_owned(),
            x_val: x.slice(s![cut.., ..]).to_owned(),
            y_val: y.slice(s![cut.., ..]).to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    /// Learning rate in force during each epoch.
    pub learning_rate: Vec<f64>,
    /// `(epoch, new rate)` for every halving.
    pub lr_events: Vec<(usize, f64)>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub best_train_mse: f64,
    pub epochs_run: usize,
    pub stopped_early: bool,
}

const EVAL_CHUNK: usize = 2048;

fn chunked_mse(mlp: &Mlp, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    let mut total = 0.0;
    for (xc, yc) in x.axis_chunks_iter(Axis(0), EVAL_CHUNK).zip(y.axis_chunks_iter(Axis(0), EVAL_CHUNK)) {
        total += mlp.mse(xc, yc)? * yc.len() as f64;
    }
    Ok(total / y.len() as f64)
}

/// Mini-batch Adam with plateau halving, early stopping and best-epoch restore.
pub fn train(
    mlp: &mut Mlp,
    data: &TrainData,
    epochs: usize,
    batch_size: usize,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainReport> {
    cfg.validate()?;
    let n = data.x_train.nrows();
    if n == 0 || data.x_val.nrows() == 0 {
        return Err(Error::DegenerateDataset("training and validation splits must be non-empty".into()));
    }
    if batch_size == 0 {
        return Err(Error::config("batch size must be positive"));
    }
    let epochs = cfg.epoch_cap.map_or(epochs, |cap| epochs.min(cap));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(mlp, cfg.adam);
    let mut lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport {
        train_mse: Vec::new(),
        val_mse: Vec::new(),
        learning_rate: Vec::new(),
        lr_events: Vec::new(),
        best_epoch: 0,
        best_val_mse: f64::INFINITY,
        best_train_mse: f64::INFINITY,
        epochs_run: 0,
        stopped_early: false,
    };
    let mut best = mlp.clone();
    let mut since_best = 0;
    let mut since_reduce = 0;
    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for idx in order.chunks(batch_size) {
            let xb = data.x_train.select(Axis(0), idx);
            let yb = data.y_train.select(Axis(0), idx);
            let (loss, mse, grads) = mlp.gradients(xb.view(), yb.view(), cfg.l2)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            adam.update(mlp, &grads, lr);
            sum += mse * idx.len() as f64;
        }
        let train_mse = sum / n as f64;
        let val_mse = chunked_mse(mlp, data.x_val.view(), data.y_val.view())?;
        if !val_mse.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        report.train_mse.push(train_mse);
        report.val_mse.push(val_mse);
        report.learning_rate.push(lr);
        report.epochs_run = epoch;
        on_epoch(&EpochLog { epoch, train_mse, val_mse, learning_rate: lr });

        if val_mse < report.best_val_mse - cfg.min_delta {
            report.best_val_mse = val_mse;
            report.best_train_mse = train_mse;
            report.best_epoch = epoch;
            best.clone_from(mlp);
            since_best = 0;
            since_reduce = 0;
        } else {
            since_best += 1;
            since_reduce += 1;
            if since_best >= cfg.stop_patience {
                report.stopped_early = true;
                break;
            }
            if since_reduce >= cfg.plateau_patience {
                lr *= 0.5;
                since_reduce = 0;
                report.lr_events.push((epoch, lr));
            }
        }
    }
    *mlp = best;
    Ok(report)
}

/// Initializes an architecture from `cfg.seed` and trains it on a dataset.
pub fn train_on_dataset(
    arch: &Architecture,
    ds: &Dataset,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<(Mlp, TrainReport)> {
    let data = TrainData::from_dataset(ds, cfg.train_fraction);
    let mut mlp = Mlp::init(arch, ds.harmonics(), ds.n_angles(), cfg.seed)?;
    let report = train(&mut mlp, &data, arch.epochs, arch.batch_size, cfg, on_epoch)?;
    Ok((mlp, report))
}

/// Plain MSE of `mlp` over a scaled split.
pub fn evaluate(mlp: &Mlp, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    chunked_mse(mlp, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};
    use rand::Rng;

    fn linear_problem(seed: u64) -> TrainData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((500, 3), || rng.random_range(0.0..1.0));
        let a = ndarray::array![[0.5, -0.3], [0.2, 0.8], [-0.6, 0.1]];
        let y = x.dot(&a) + &ndarray::array![0.1, -0.2];
        TrainData {
            x_train: x.slice(s![..450, ..]).to_owned(),
            y_train: y.slice(s![..450, ..]).to_owned(),
            x_val: x.slice(s![450.., ..]).to_owned(),
            y_val: y.slice(s![450.., ..]).to_owned(),
        }
    }

    #[test]
    fn learns_linear_map() {
        let data = linear_problem(1);
        let mut mlp = Mlp::with_hidden(3, &[LayerSpec::new(16, Activation::Tanh)], 2, 2);
        let cfg = TrainConfig { l2: 0.0, learning_rate: 1e-2, ..Default::default() };
        let report = train(&mut mlp, &data, 200, 32, &cfg, |_| {}).unwrap();
        assert!(report.best_val_mse < 1e-4, "{}", report.best_val_mse);
    }

    #[test]
    fn deterministic_and_restores_best() {
        let data = linear_problem(3);
        let cfg =
            TrainConfig { seed: 5, learning_rate: 5e-2, plateau_patience: 2, stop_patience: 4, ..Default::default() };
        let run = || {
            let mut mlp = Mlp::with_hidden(3, &[LayerSpec::new(8, Activation::Relu)], 2, 5);
            let report = train(&mut mlp, &data, 60, 16, &cfg, |_| {}).unwrap();
            (mlp, report)
        };
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(ra, rb);
        assert_eq!(a, b);
        let min = ra.val_mse.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(ra.best_val_mse, ra.val_mse[ra.best_epoch - 1]);
        assert!(ra.best_val_mse - min <= cfg.min_delta);
        let recomputed = chunked_mse(&a, data.x_val.view(), data.y_val.view()).unwrap();
        assert_eq!(recomputed, ra.best_val_mse);
        assert_eq!(ra.train_mse.len(), ra.epochs_run);
        assert_eq!(ra.learning_rate.len(), ra.epochs_run);
    }

    #[test]
    fn plateau_halves_then_stops() {
        let data = linear_problem(4);
        let cfg = TrainConfig { min_delta: 1e9, plateau_patience: 3, stop_patience: 5, ..Default::default() };
        let mut mlp = Mlp::with_hidden(3, &[LayerSpec::new(4, Activation::Sigmoid)], 2, 1);
        let report = train(&mut mlp, &data, 100, 64, &cfg, |_| {}).unwrap();
        // Epoch 1 improves on the infinite start; 2..=6 do not.
        assert!(report.stopped_early);
        assert_eq!(report.best_epoch, 1);
        assert_eq!(report.epochs_run, 6);
        assert_eq!(report.lr_events, vec![(4, 5e-4)]);
        assert_eq!(report.learning_rate, vec![1e-3, 1e-3, 1e-3, 1e-3, 5e-4, 5e-4]);
    }

    #[test]
    fn epoch_cap_applies() {
        let data = linear_problem(5);
        let cfg = TrainConfig { epoch_cap: Some(3), ..Default::default() };
        let mut mlp = Mlp::with_hidden(3, &[LayerSpec::new(4, Activation::Relu)], 2, 1);
        let mut seen = Vec::new();
        let report = train(&mut mlp, &data, 100, 64, &cfg, |e| seen.push(e.epoch)).unwrap();
        assert_eq!(report.epochs_run, 3);
        assert_eq!(seen, vec![1, 2, 3]);
    }

    #[test]
    fn divergence_is_reported() {
        let mut data = linear_problem(6);
        data.y_train[[0, 0]] = f64::INFINITY;
        let mut mlp = Mlp::with_hidden(3, &[LayerSpec::new(4, Activation::Relu)], 2, 1);
        let err = train(&mut mlp, &data, 10, 500, &TrainConfig::default(), |_| {}).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { epoch: 1 }));
    }
}
