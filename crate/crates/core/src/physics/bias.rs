//! Standing-wave bias synthesis and peak rectification along the biasing line.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::geometry::RisGeometry;
use crate::error::{Error, Result};

/// Grid samples per period of the highest harmonic for the peak search.
const SAMPLES_PER_HARMONIC: usize = 64;
/// Golden-section stopping width, relative to one fundamental period.
const PEAK_REL_TOL: f64 = 1e-9;

/// DC offset plus the amplitudes of harmonics `1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BswConfig {
    pub w0: f64,
    pub amplitudes: Vec<f64>,
}

impl BswConfig {
    pub fn new(w0: f64, amplitudes: Vec<f64>) -> Self {
        BswConfig { w0, amplitudes }
    }

    pub fn zeros(w0: f64, harmonics: usize) -> Self {
        BswConfig { w0, amplitudes: vec![0.0; harmonics] }
    }

    pub fn check_against(&self, geom: &RisGeometry) -> Result<()> {
        if self.amplitudes.len() != geom.harmonics {
            return Err(Error::domain(format!(
                "expected {} standing-wave amplitudes, got {}",
                geom.harmonics,
                self.amplitudes.len()
            )));
        }
        if !self.w0.is_finite() || self.amplitudes.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("standing-wave amplitudes must be finite"));
        }
        Ok(())
    }
}

/// Instantaneous line voltage `w(x, t)` at position `x` in `[0, L]`.
pub fn bsw_voltage(geom: &RisGeometry, bsw: &BswConfig, x: f64, t: f64) -> Result<f64> {
    bsw.check_against(geom)?;
    let span = geom.aperture_length();
    if !(0.0..=span).contains(&x) {
        return Err(Error::domain(format!("position {x} m outside biased span [0, {span}]")));
    }
    let wt = geom.fundamental_angular_frequency() * t;
    let sum: f64 = bsw
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let n = i + 1;
            w * geom.mode_shape(n, x) * (n as f64 * wt).sin()
        })
        .sum();
    Ok(bsw.w0 + sum)
}

/// Rectified (peak-detected) bias at element `m`.
pub fn rectified_bias(geom: &RisGeometry, bsw: &BswConfig, m: usize) -> Result<f64> {
    if m >= geom.elements {
        return Err(Error::domain(format!("element index {m} out of range 0..{}", geom.elements)));
    }
    BiasSampler::new(geom).rectified_at(bsw, geom.element_position(m))
}

/// Rectified bias at every element, `m = 0..M`.
pub fn bias_profile(geom: &RisGeometry, bsw: &BswConfig) -> Result<Vec<f64>> {
    BiasSampler::new(geom).profile(bsw)
}

/// True iff every voltage of the profile lies in `[lo, hi]`.
pub fn check_bias_bounds(profile: &[f64], lo: f64, hi: f64) -> bool {
    profile.iter().all(|v| (lo..=hi).contains(v))
}

/// Peak detector for one line geometry.
///
/// Holds the element mode shapes and a half-period sine table so the peak
/// search over time reduces to a dense multiply-accumulate per element.
/// The temporal sum is odd about `t = 0`, so its maximum over a full period
/// is `max(max s, -min s)` over the first half period.
#[derive(Debug, Clone)]
pub struct BiasSampler {
    geom: RisGeometry,
    /// Element-major `[m * N + n]` mode shapes.
    modes: Vec<f64>,
    /// Harmonic-major `[n * K + k]` sines over the half-period grid.
    table: Vec<f64>,
    half_grid: usize,
    step: f64,
}

impl BiasSampler {
    pub fn new(geom: &RisGeometry) -> Self {
        let n_h = geom.harmonics;
        let grid = SAMPLES_PER_HARMONIC * n_h;
        let half_grid = grid / 2 + 1;
        let step = 2.0 * PI / grid as f64;
        let modes = (0..geom.elements)
            .flat_map(|m| (1..=n_h).map(move |n| geom.mode_shape(n, geom.element_position(m))))
            .collect();
        let table = (1..=n_h).flat_map(|n| (0..half_grid).map(move |k| (n as f64 * k as f64 * step).sin())).collect();
        BiasSampler { geom: geom.clone(), modes, table, half_grid, step }
    }

    pub fn geometry(&self) -> &RisGeometry {
        &self.geom
    }

    pub fn profile(&self, bsw: &BswConfig) -> Result<Vec<f64>> {
        bsw.check_against(&self.geom)?;
        let n_h = self.geom.harmonics;
        let mut coeffs = vec![0.0; n_h];
        let mut scratch = vec![0.0; self.half_grid];
        Ok((0..self.geom.elements)
            .map(|m| {
                let shapes = &self.modes[m * n_h..(m + 1) * n_h];
                for ((c, w), s) in coeffs.iter_mut().zip(&bsw.amplitudes).zip(shapes) {
                    *c = w * s;
                }
                bsw.w0 + self.peak(&coeffs, &mut scratch)
            })
            .collect())
    }

    /// Rectified voltage at an arbitrary position in `[0, L]`.
    pub fn rectified_at(&self, bsw: &BswConfig, x: f64) -> Result<f64> {
        bsw.check_against(&self.geom)?;
        let span = self.geom.aperture_length();
        if !(0.0..=span).contains(&x) {
            return Err(Error::domain(format!("position {x} m outside biased span [0, {span}]")));
        }
        let coeffs: Vec<f64> =
            bsw.amplitudes.iter().enumerate().map(|(i, w)| w * self.geom.mode_shape(i + 1, x)).collect();
        let mut scratch = vec![0.0; self.half_grid];
        Ok(bsw.w0 + self.peak(&coeffs, &mut scratch))
    }

    /// Bound check on a spatial grid ten times finer than the element pitch.
    pub fn check_bounds_fine(&self, bsw: &BswConfig, lo: f64, hi: f64) -> Result<bool> {
        let span = self.geom.aperture_length();
        let points = 10 * (self.geom.elements - 1);
        for j in 0..=points {
            let x = if points == 0 { 0.0 } else { span * j as f64 / points as f64 };
            let v = self.rectified_at(bsw, x.min(span))?;
            if !(lo..=hi).contains(&v) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `max_t sum_n c_n sin(n w_b t)` over one fundamental period.
    fn peak(&self, coeffs: &[f64], scratch: &mut [f64]) -> f64 {
        let k_len = self.half_grid;
        scratch.fill(0.0);
        for (n, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.table[n * k_len..(n + 1) * k_len];
            for (s, t) in scratch.iter_mut().zip(row) {
                *s += c * t;
            }
        }
        let (mut hi_k, mut hi) = (0, f64::NEG_INFINITY);
        let (mut lo_k, mut lo) = (0, f64::INFINITY);
        for (k, &s) in scratch.iter().enumerate() {
            if s > hi {
                hi = s;
                hi_k = k;
            }
            if s < lo {
                lo = s;
                lo_k = k;
            }
        }
        if hi == 0.0 && lo == 0.0 {
            return 0.0;
        }
        // The negative half of the waveform mirrors onto (pi, 2 pi).
        let (sign, k, grid_best) = if hi >= -lo { (1.0, hi_k, hi) } else { (-1.0, lo_k, -lo) };
        let centre = k as f64 * self.step;
        let refined = golden_max(
            |phi| sign * harmonic_sum(coeffs, phi),
            centre - self.step,
            centre + self.step,
            PEAK_REL_TOL * 2.0 * PI,
        );
        grid_best.max(refined)
    }
}

/// `sum_n c_n sin(n phi)` via the Chebyshev recurrence.
fn harmonic_sum(coeffs: &[f64], phi: f64) -> f64 {
    let (s1, c1) = phi.sin_cos();
    let two_c = 2.0 * c1;
    let (mut prev, mut cur) = (0.0, s1);
    let mut acc = 0.0;
    for &c in coeffs {
        acc += c * cur;
        let next = two_c * cur - prev;
        prev = cur;
        cur = next;
    }
    acc
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns the best value seen.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}
