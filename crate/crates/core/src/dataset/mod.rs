//! Training pairs `(W, P)`: random standing-wave amplitudes and the exact
//! radiation pattern they produce on the angle grid.

mod io;

pub use io::{export_csv, load_dataset, load_dataset_checked, save_dataset};

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{AngleGrid, Simulator};

/// Draw-count window used to detect a misconfigured acceptance filter.
pub const ABORT_WINDOW: u64 = 10_000;
/// Minimum acceptance rate tolerated inside one window.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub count: usize,
    /// Background spread applied to every amplitude (V).
    pub sigma1: f64,
    /// Spread of the excited subset (V).
    pub sigma2: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig { count: 100_000, sigma1: 0.008, sigma2: 0.8, seed: 0 }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::config("dataset count must be positive"));
        }
        if !(self.sigma1 >= 0.0 && self.sigma1.is_finite() && self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::config("dataset sigma1 and sigma2 must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Global affine maps to `[0, 1]` for amplitudes and `[-1, 1]` for powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub w_hi: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl ScalingSpec {
    pub fn new(w_hi: f64, p_min: f64, p_max: f64) -> Result<Self> {
        if !(w_hi > 0.0 && w_hi.is_finite()) {
            return Err(Error::DegenerateDataset(format!("largest amplitude must be positive, got {w_hi}")));
        }
        if !(p_min < p_max && p_min.is_finite() && p_max.is_finite()) {
            return Err(Error::DegenerateDataset(format!("power range [{p_min}, {p_max}] is empty")));
        }
        Ok(ScalingSpec { w_hi, p_min, p_max })
    }

    /// Extremes of the stored arrays.
    pub fn fit(w: &Array2<f64>, p: &Array2<f64>) -> Result<Self> {
        let w_hi = w.iter().copied().fold(0.0, f64::max);
        let p_min = p.iter().copied().fold(f64::INFINITY, f64::min);
        let p_max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ScalingSpec::new(w_hi, p_min, p_max)
    }

    pub fn scale_w(&self, w: f64) -> f64 {
        w / self.w_hi
    }

    pub fn unscale_w(&self, w: f64) -> f64 {
        w * self.w_hi
    }

    pub fn scale_p(&self, p: f64) -> f64 {
        2.0 * (p - self.p_min) / (self.p_max - self.p_min) - 1.0
    }

    pub fn unscale_p(&self, p: f64) -> f64 {
        (p + 1.0) * 0.5 * (self.p_max - self.p_min) + self.p_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    /// Fingerprint of the physics configuration that produced the patterns.
    pub fingerprint: String,
    pub grid: AngleGrid,
    pub sigma1: f64,
    pub sigma2: f64,
    pub seed: u64,
    /// Candidates discarded by the bias-window filter.
    pub rejected: u64,
}

/// Amplitude rows `w` (count x N) and dB pattern rows `p` (count x n_angles).
///
/// Entries are stored at single precision so that a reloaded dataset is
/// bit-identical to the generated one.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub w: Array2<f64>,
    pub p: Array2<f64>,
    pub scaling: ScalingSpec,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(w: Array2<f64>, p: Array2<f64>, meta: DatasetMeta) -> Result<Self> {
        if w.nrows() != p.nrows() || w.nrows() == 0 {
            return Err(Error::DegenerateDataset(format!(
                "{} amplitude rows vs {} pattern rows",
                w.nrows(),
                p.nrows()
            )));
        }
        if p.ncols() != meta.grid.count {
            return Err(Error::DegenerateDataset(format!(
                "pattern width {} does not match the {}-angle grid",
                p.ncols(),
                meta.grid.count
            )));
        }
        let w = w.mapv(round_f32);
        let p = p.mapv(round_f32);
        let scaling = ScalingSpec::fit(&w, &p)?;
        Ok(Dataset { w, p, scaling, meta })
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn harmonics(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_angles(&self) -> usize {
        self.p.ncols()
    }

    /// Scaled copies of the amplitude and pattern matrices.
    pub fn normalize(&self) -> (Array2<f64>, Array2<f64>) {
        let s = self.scaling;
        (self.w.mapv(|v| s.scale_w(v)), self.p.mapv(|v| s.scale_p(v)))
    }

    pub fn sample(&self, i: usize) -> (ArrayView1<'_, f64>, ArrayView1<'_, f64>) {
        (self.w.row(i), self.p.row(i))
    }

    /// Number of leading rows used for training; the remainder validates.
    pub fn split_index(&self, train_fraction: f64) -> usize {
        ((self.len() as f64 * train_fraction).floor() as usize).clamp(1, self.len().max(2) - 1)
    }

    pub fn amplitude_rows(&self) -> impl Iterator<Item = ArrayView1<'_, f64>> {
        self.w.axis_iter(Axis(0))
    }
}

/// Inverse of [`Dataset::normalize`] on arbitrary scaled matrices.
pub fn denormalize(scaling: &ScalingSpec, w: &Array2<f64>, p: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    (w.mapv(|v| scaling.unscale_w(v)), p.mapv(|v| scaling.unscale_p(v)))
}

fn round_f32(v: f64) -> f64 {
    v as f32 as f64
}

/// One candidate amplitude vector: a faint half-normal background with a
/// random subset of `k ~ U{1..N}` entries redrawn at the larger spread.
pub fn draw_candidate_w<R: Rng + ?Sized>(rng: &mut R, harmonics: usize, sigma1: f64, sigma2: f64) -> Vec<f64> {
    let background = half_normal(sigma1);
    let mut w: Vec<f64> = (0..harmonics).map(|_| background(rng)).collect();
    if harmonics == 0 {
        return w;
    }
    let k = rng.random_range(1..=harmonics);
    let excited = half_normal(sigma2);
    for n in index::sample(rng, harmonics, k) {
        w[n] = excited(rng);
    }
    w
}

fn half_normal<R: Rng + ?Sized>(sigma: f64) -> impl Fn(&mut R) -> f64 {
    let dist = Normal::new(0.0, sigma.max(0.0)).expect("finite spread");
    move |rng: &mut R| dist.sample(rng).abs()
}

/// Per-sample generator: stream `index` of the master seed.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Drawn {
    w: Vec<f64>,
    p: Vec<f64>,
    draws: u64,
}

fn generate_one(sim: &Simulator, cfg: &DatasetConfig, index: u64) -> Result<Drawn> {
    let mut rng = sample_rng(cfg.seed, index);
    let harmonics = sim.harmonics();
    for draw in 1..=ABORT_WINDOW {
        let w: Vec<f64> =
            draw_candidate_w(&mut rng, harmonics, cfg.sigma1, cfg.sigma2).into_iter().map(round_f32).collect();
        if let Some(profile) = sim.admissible_profile(&w)? {
            let gammas = sim.reflections_for_profile(&profile)?;
            let p = sim.pattern_from_reflections(&gammas).into_iter().map(round_f32).collect();
            return Ok(Drawn { w, p, draws: draw });
        }
    }
    Err(Error::GenerationAborted(format!(
        "sample {index}: no admissible candidate in {ABORT_WINDOW} draws; check bias window and spreads"
    )))
}

/// Accepted-draw positions must leave no full window under the minimum rate.
fn check_acceptance(draws: &[u64]) -> Result<()> {
    let need = (ABORT_WINDOW as f64 * MIN_ACCEPTANCE_RATE).ceil() as u64;
    let mut window = 0;
    let mut accepted_in_window = 0u64;
    let mut position = 0;
    for &d in draws {
        position += d;
        let w = (position - 1) / ABORT_WINDOW;
        while w > window {
            if accepted_in_window < need {
                return Err(Error::GenerationAborted(format!(
                    "only {accepted_in_window} of {ABORT_WINDOW} candidates passed the bias check"
                )));
            }
            window += 1;
            accepted_in_window = 0;
        }
        accepted_in_window += 1;
    }
    Ok(())
}

/// Samples are generated in blocks so a hopeless configuration aborts early.
const BLOCK: usize = 512;

/// Generates `cfg.count` admissible samples; deterministic for a given seed
/// regardless of thread count.
pub fn generate_dataset(sim: &Simulator, cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    let harmonics = sim.harmonics();
    let n_angles = sim.grid().count;
    let mut w = Vec::with_capacity(cfg.count * harmonics);
    let mut p = Vec::with_capacity(cfg.count * n_angles);
    let mut draw_counts = Vec::with_capacity(cfg.count);
    let mut start = 0;
    while start < cfg.count {
        let end = (start + BLOCK).min(cfg.count);
        let block: Vec<Drawn> =
            (start..end).into_par_iter().map(|i| generate_one(sim, cfg, i as u64)).collect::<Result<_>>()?;
        for d in block {
            w.extend(d.w);
            p.extend(d.p);
            draw_counts.push(d.draws);
        }
        check_acceptance(&draw_counts)?;
        start = end;
    }
    let rejected = draw_counts.iter().map(|d| d - 1).sum();
    let meta = DatasetMeta {
        fingerprint: sim.fingerprint().to_string(),
        grid: *sim.grid(),
        sigma1: cfg.sigma1,
        sigma2: cfg.sigma2,
        seed: cfg.seed,
        rejected,
    };
    Dataset::new(
        Array2::from_shape_vec((cfg.count, harmonics), w).expect("row-major shape"),
        Array2::from_shape_vec((cfg.count, n_angles), p).expect("row-major shape"),
        meta,
    )
}
