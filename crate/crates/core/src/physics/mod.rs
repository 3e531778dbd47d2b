//! Exact simulator of the wave-controlled surface: bias synthesis, varactor
//! reflection, far-field pattern and SLNR.

pub mod bias;
pub mod channel;
pub mod circuit;
pub mod geometry;
pub mod varactor;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

pub use bias::{bias_profile, bsw_voltage, check_bias_bounds, rectified_bias, BiasSampler, BswConfig};
pub use channel::{db_to_linear, received_power_db, slnr_db, steering_vector, AngleGrid, ChannelSetup, POWER_FLOOR};
pub use circuit::{reflection_coefficient, ris_impedance, CellConstants, UnitCellCircuit};
pub use geometry::{RisGeometry, SPEED_OF_LIGHT};
pub use varactor::{VaractorCurve, VaractorSample, BIAS_MAX, BIAS_MIN};

use crate::error::{Error, Result};

/// Everything the exact simulator needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConfig {
    pub geometry: RisGeometry,
    pub circuit: UnitCellCircuit,
    pub channel: ChannelSetup,
    /// DC offset `W_0` added to the line voltage (V).
    pub w0: f64,
    pub bias_min: f64,
    pub bias_max: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            geometry: RisGeometry::default(),
            circuit: UnitCellCircuit::default(),
            channel: ChannelSetup::default(),
            w0: 4.0,
            bias_min: BIAS_MIN,
            bias_max: BIAS_MAX,
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.circuit.constants.validate()?;
        self.channel.validate()?;
        if !self.w0.is_finite() {
            return Err(Error::config("w0 must be finite"));
        }
        if !(self.bias_min < self.bias_max) {
            return Err(Error::config("bias_min must be below bias_max"));
        }
        if self.bias_min < BIAS_MIN || self.bias_max > BIAS_MAX {
            return Err(Error::config(format!(
                "bias bounds must lie within the varactor range [{BIAS_MIN}, {BIAS_MAX}] V"
            )));
        }
        Ok(())
    }

    /// Short content hash identifying this physical setup; datasets, models
    /// and lookup entries carry it so mismatched artifacts are caught.
    pub fn fingerprint(&self) -> String {
        let g = &self.geometry;
        let k = &self.circuit.constants;
        let ch = &self.channel;
        let mut text = format!(
            "geometry {} {} {} {} {} {} {}\ncircuit {} {} {} {} {} {}\nchannel {} {} {} {} {} {}\nbias {} {} {}\n",
            g.elements,
            g.spacing,
            g.path_length,
            g.left_length,
            g.right_length,
            g.eps_eff,
            g.harmonics,
            k.r_d,
            k.c_d,
            k.l_d,
            k.l_s,
            k.l_v,
            k.z0,
            ch.carrier_frequency,
            ch.symbol_power,
            ch.noise_variance,
            ch.grid.min_deg,
            ch.grid.max_deg,
            ch.grid.count,
            self.w0,
            self.bias_min,
            self.bias_max,
        );
        for s in self.circuit.curve.samples() {
            text.push_str(&format!("varactor {} {} {}\n", s.voltage, s.capacitance, s.resistance));
        }
        short_hash(text.as_bytes())
    }

    pub fn bsw(&self, amplitudes: Vec<f64>) -> BswConfig {
        BswConfig::new(self.w0, amplitudes)
    }
}

pub(crate) fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Cached exact simulator for one physical setup.
///
/// Immutable after construction, so it can be shared across threads.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: PhysicsConfig,
    sampler: BiasSampler,
    /// Grid-major `[k * M + m]` steering vectors for the configured angle grid.
    grid_steering: Vec<Complex64>,
    fingerprint: String,
}

impl Simulator {
    pub fn new(config: PhysicsConfig) -> Result<Self> {
        config.validate()?;
        let g = &config.geometry;
        let ch = &config.channel;
        let mut grid_steering = Vec::with_capacity(ch.grid.count * g.elements);
        for theta in ch.grid.angles() {
            grid_steering.extend(steering_vector(theta, g.elements, g.spacing, ch.carrier_frequency)?);
        }
        Ok(Simulator { sampler: BiasSampler::new(g), fingerprint: config.fingerprint(), grid_steering, config })
    }

    pub fn config(&self) -> &PhysicsConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn harmonics(&self) -> usize {
        self.config.geometry.harmonics
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.config.channel.grid
    }

    pub fn bias_profile(&self, amplitudes: &[f64]) -> Result<Vec<f64>> {
        self.sampler.profile(&self.config.bsw(amplitudes.to_vec()))
    }

    /// Bias profile, or `None` when any element leaves the varactor window.
    pub fn admissible_profile(&self, amplitudes: &[f64]) -> Result<Option<Vec<f64>>> {
        let profile = self.bias_profile(amplitudes)?;
        Ok(check_bias_bounds(&profile, self.config.bias_min, self.config.bias_max).then_some(profile))
    }

    /// Whether the bias profile stays inside the window. The peak detector
    /// output lies in `[w0, w0 + sum |W_n|]`, so small amplitude sets skip
    /// the profile computation.
    pub fn is_admissible(&self, amplitudes: &[f64]) -> Result<bool> {
        let c = &self.config;
        let reach: f64 = amplitudes.iter().map(|w| w.abs()).sum();
        if c.w0 >= c.bias_min && c.w0 + reach <= c.bias_max && reach.is_finite() {
            self.config.bsw(amplitudes.to_vec()).check_against(&c.geometry)?;
            return Ok(true);
        }
        Ok(self.admissible_profile(amplitudes)?.is_some())
    }

    /// Per-element reflection coefficients; out-of-window biasing is rejected.
    pub fn reflections(&self, amplitudes: &[f64]) -> Result<Vec<Complex64>> {
        let profile = self.admissible_profile(amplitudes)?.ok_or_else(|| {
            Error::RejectedConfiguration(format!(
                "bias profile leaves [{}, {}] V",
                self.config.bias_min, self.config.bias_max
            ))
        })?;
        self.reflections_for_profile(&profile)
    }

    pub fn reflections_for_profile(&self, profile: &[f64]) -> Result<Vec<Complex64>> {
        let omega = self.config.channel.angular_carrier();
        profile.iter().map(|&v| self.config.circuit.reflection(omega, v)).collect()
    }

    /// Received power (dB) at every grid direction for given reflections.
    pub fn pattern_from_reflections(&self, gammas: &[Complex64]) -> Vec<f64> {
        let m = self.config.geometry.elements;
        self.grid_steering
            .chunks_exact(m)
            .map(|h| channel::power_db_from_steering(gammas, h, &self.config.channel))
            .collect()
    }

    /// Sampled radiation pattern (dB) over the angle grid.
    pub fn radiation_pattern(&self, amplitudes: &[f64]) -> Result<Vec<f64>> {
        Ok(self.pattern_from_reflections(&self.reflections(amplitudes)?))
    }

    /// Received power (dB) toward arbitrary directions.
    pub fn powers_at(&self, amplitudes: &[f64], angles_deg: &[f64]) -> Result<Vec<f64>> {
        let gammas = self.reflections(amplitudes)?;
        let g = &self.config.geometry;
        angles_deg.iter().map(|&theta| received_power_db(&gammas, theta, g.spacing, &self.config.channel)).collect()
    }
}

/// One-shot radiation pattern over the channel's angle grid with the default
/// `[4, 15]` V bias window.
pub fn radiation_pattern(
    geom: &RisGeometry,
    cell: &UnitCellCircuit,
    bsw: &BswConfig,
    setup: &ChannelSetup,
) -> Result<Vec<f64>> {
    let sim = Simulator::new(PhysicsConfig {
        geometry: geom.clone(),
        circuit: cell.clone(),
        channel: setup.clone(),
        w0: bsw.w0,
        bias_min: BIAS_MIN,
        bias_max: BIAS_MAX,
    })?;
    sim.radiation_pattern(&bsw.amplitudes)
}
