//! Tabulated varactor capacitance and resistance versus reverse bias.
//!
//! The shipped default is a junction-capacitance law
//! `C(V) = C_j0 / (1 + V / phi)^gamma` sampled every 0.25 V over the usable
//! bias window. Its parameters place the unit cell's parallel resonance
//! (about 0.2 pF at 2.45 GHz) near 6 V, so the reflection phase sweeps
//! monotonically through roughly 300 degrees between 4 V and 15 V. The series
//! resistance falls linearly with capacitance from 0.55 ohm to 0.35 ohm,
//! staying below the 0.6 ohm vendor figure. Any table obeying the same
//! monotonicity rules can be loaded instead.

use std::path::Path;

use crate::error::{Error, Result};

/// Lower end of the varactor's usable reverse-bias range (V).
pub const BIAS_MIN: f64 = 4.0;
/// Upper end of the varactor's usable reverse-bias range (V).
pub const BIAS_MAX: f64 = 15.0;

/// Junction-law parameters of the default curve.
pub const DEFAULT_CJ0: f64 = 1.24e-12;
pub const DEFAULT_PHI: f64 = 0.7;
pub const DEFAULT_GAMMA: f64 = 0.78;
const DEFAULT_R_AT_MIN: f64 = 0.55;
const DEFAULT_R_AT_MAX: f64 = 0.35;
const DEFAULT_STEP: f64 = 0.25;

/// One tabulated operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaractorSample {
    /// Reverse bias (V).
    pub voltage: f64,
    /// Junction capacitance (F).
    pub capacitance: f64,
    /// Series resistance (ohm).
    pub resistance: f64,
}

/// Voltage-dependent capacitance and resistance with monotone cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct VaractorCurve {
    samples: Vec<VaractorSample>,
    capacitance: MonotoneCubic,
    resistance: MonotoneCubic,
}

impl VaractorCurve {
    pub fn new(samples: Vec<VaractorSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::config("varactor table needs at least two samples"));
        }
        let first = samples[0].voltage;
        let last = samples[samples.len() - 1].voltage;
        if first != BIAS_MIN || last != BIAS_MAX {
            return Err(Error::config(format!(
                "varactor table must span [{BIAS_MIN}, {BIAS_MAX}] V, got [{first}, {last}]"
            )));
        }
        for w in samples.windows(2) {
            if !(w[1].voltage > w[0].voltage) {
                return Err(Error::config("varactor voltages must be strictly increasing"));
            }
            if !(w[1].capacitance < w[0].capacitance) {
                return Err(Error::config(format!(
                    "varactor capacitance must strictly decrease with voltage (at {} V)",
                    w[1].voltage
                )));
            }
        }
        for s in &samples {
            if !(s.capacitance.is_finite() && s.capacitance > 0.0) {
                return Err(Error::config("varactor capacitance must be positive"));
            }
            if !(s.resistance.is_finite() && s.resistance > 0.0) {
                return Err(Error::config("varactor resistance must be positive"));
            }
        }
        let v: Vec<f64> = samples.iter().map(|s| s.voltage).collect();
        let c: Vec<f64> = samples.iter().map(|s| s.capacitance).collect();
        let r: Vec<f64> = samples.iter().map(|s| s.resistance).collect();
        Ok(VaractorCurve {
            capacitance: MonotoneCubic::new(v.clone(), c),
            resistance: MonotoneCubic::new(v, r),
            samples,
        })
    }

    /// Junction law sampled on a regular grid; resistance interpolates
    /// linearly in capacitance between the two end values.
    pub fn junction_law(cj0: f64, phi: f64, gamma: f64, r_at_min: f64, r_at_max: f64, step: f64) -> Result<Self> {
        let cap = |v: f64| cj0 / (1.0 + v / phi).powf(gamma);
        let (c_lo, c_hi) = (cap(BIAS_MAX), cap(BIAS_MIN));
        let count = ((BIAS_MAX - BIAS_MIN) / step).round() as usize;
        let samples = (0..=count)
            .map(|k| {
                let voltage = if k == count { BIAS_MAX } else { BIAS_MIN + k as f64 * step };
                let capacitance = cap(voltage);
                let frac = (capacitance - c_lo) / (c_hi - c_lo);
                VaractorSample { voltage, capacitance, resistance: r_at_max + frac * (r_at_min - r_at_max) }
            })
            .collect();
        VaractorCurve::new(samples)
    }

    /// Reads a whitespace- or comma-separated table of `V  C_pF  R_ohm`.
    /// Lines starting with `#` are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading varactor table {}", path.display()), e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(reason) => Error::format(path, reason),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 3 {
                return Err(Error::config(format!(
                    "line {}: expected 3 columns (V, C_pF, R_ohm), got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let num =
                |s: &str| s.parse::<f64>().map_err(|_| Error::config(format!("line {}: bad number {s:?}", lineno + 1)));
            samples.push(VaractorSample {
                voltage: num(cols[0])?,
                capacitance: num(cols[1])? * 1e-12,
                resistance: num(cols[2])?,
            });
        }
        VaractorCurve::new(samples)
    }

    /// Renders the table in the same format `parse` accepts.
    pub fn to_table(&self) -> String {
        let mut out = String::from("# V  C_pF  R_ohm\n");
        for s in &self.samples {
            out.push_str(&format!("{} {} {}\n", s.voltage, s.capacitance * 1e12, s.resistance));
        }
        out
    }

    pub fn samples(&self) -> &[VaractorSample] {
        &self.samples
    }

    fn check_voltage(&self, v: f64) -> Result<()> {
        if (BIAS_MIN..=BIAS_MAX).contains(&v) {
            Ok(())
        } else {
            Err(Error::domain(format!("varactor bias {v} V outside [{BIAS_MIN}, {BIAS_MAX}] V")))
        }
    }

    pub fn capacitance(&self, v: f64) -> Result<f64> {
        self.check_voltage(v)?;
        Ok(self.capacitance.eval(v))
    }

    pub fn resistance(&self, v: f64) -> Result<f64> {
        self.check_voltage(v)?;
        Ok(self.resistance.eval(v))
    }
}

impl Default for VaractorCurve {
    fn default() -> Self {
        VaractorCurve::junction_law(
            DEFAULT_CJ0,
            DEFAULT_PHI,
            DEFAULT_GAMMA,
            DEFAULT_R_AT_MIN,
            DEFAULT_R_AT_MAX,
            DEFAULT_STEP,
        )
        .expect("default varactor curve is valid")
    }
}

/// Piecewise-cubic Hermite interpolant with Fritsch-Carlson slopes; preserves
/// monotonicity of the data between samples.
#[derive(Debug, Clone, PartialEq)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 * d1 <= 0.0 {
                slopes[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        MonotoneCubic { xs, ys, slopes }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = self.xs.partition_point(|&xi| xi <= x).clamp(1, n - 1) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}
