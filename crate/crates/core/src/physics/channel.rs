//! Far-field line-of-sight channel, array response and the SLNR measure.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

/// Linear power floor applied before converting to dB (-120 dB).
pub const POWER_FLOOR: f64 = 1e-12;

/// Uniformly spaced azimuth grid, inclusive of both ends (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngleGrid {
    pub min_deg: f64,
    pub max_deg: f64,
    pub count: usize,
}

impl Default for AngleGrid {
    /// `[-60, 60]` degrees in 1.5 degree steps: 81 directions.
    fn default() -> Self {
        AngleGrid { min_deg: -60.0, max_deg: 60.0, count: 81 }
    }
}

impl AngleGrid {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::config("angle grid needs at least two directions"));
        }
        if !(self.min_deg < self.max_deg) || self.min_deg < -90.0 || self.max_deg > 90.0 {
            return Err(Error::config(format!(
                "angle grid [{}, {}] must be increasing and within [-90, 90]",
                self.min_deg, self.max_deg
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max_deg - self.min_deg) / (self.count - 1) as f64
    }

    pub fn angle(&self, k: usize) -> f64 {
        let last = (self.count - 1) as f64;
        (self.min_deg * (last - k as f64) + self.max_deg * k as f64) / last
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.angle(k)).collect()
    }

    pub fn contains(&self, theta_deg: f64) -> bool {
        (self.min_deg..=self.max_deg).contains(&theta_deg)
    }
}

/// Narrowband far-field link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSetup {
    /// Carrier frequency (Hz).
    pub carrier_frequency: f64,
    /// Average transmitted symbol power.
    pub symbol_power: f64,
    /// Receiver noise variance.
    pub noise_variance: f64,
    pub grid: AngleGrid,
}

impl Default for ChannelSetup {
    fn default() -> Self {
        ChannelSetup { carrier_frequency: 2.45e9, symbol_power: 1.0, noise_variance: 1.0, grid: AngleGrid::default() }
    }
}

impl ChannelSetup {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("carrier_frequency", self.carrier_frequency),
            ("symbol_power", self.symbol_power),
            ("noise_variance", self.noise_variance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("channel: {name} must be positive, got {v}")));
            }
        }
        self.grid.validate()
    }

    pub fn angular_carrier(&self) -> f64 {
        2.0 * PI * self.carrier_frequency
    }
}

/// Inter-element phase progression `kappa(theta)` (rad).
pub fn phase_step(theta_deg: f64, spacing: f64, carrier_frequency: f64) -> f64 {
    2.0 * PI * (spacing * carrier_frequency / SPEED_OF_LIGHT) * theta_deg.to_radians().sin()
}

/// RIS-to-receiver channel `h(theta)`, element `m` equal to `exp(-j m kappa)`.
pub fn steering_vector(
    theta_deg: f64,
    elements: usize,
    spacing: f64,
    carrier_frequency: f64,
) -> Result<Vec<Complex64>> {
    if !(-90.0..=90.0).contains(&theta_deg) {
        return Err(Error::domain(format!("azimuth {theta_deg} outside [-90, 90] degrees")));
    }
    let kappa = phase_step(theta_deg, spacing, carrier_frequency);
    Ok((0..elements).map(|m| Complex64::cis(-(m as f64) * kappa)).collect())
}

/// Received SNR in dB for reflection coefficients `gammas` toward `theta`,
/// with the transmitter at broadside (`g` all ones).
pub fn received_power_db(gammas: &[Complex64], theta_deg: f64, spacing: f64, setup: &ChannelSetup) -> Result<f64> {
    let h = steering_vector(theta_deg, gammas.len(), spacing, setup.carrier_frequency)?;
    Ok(power_db_from_steering(gammas, &h, setup))
}

pub(crate) fn power_db_from_steering(gammas: &[Complex64], steering: &[Complex64], setup: &ChannelSetup) -> f64 {
    let field: Complex64 = gammas.iter().zip(steering).map(|(g, h)| g * h).sum();
    let p = setup.symbol_power * field.norm_sqr() / setup.noise_variance;
    10.0 * p.max(POWER_FLOOR).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Signal-to-leakage-plus-noise ratio in dB: the weakest desired power over
/// the strongest leaked power plus noise. All powers are linear.
pub fn slnr_db(beam_powers: &[f64], null_powers: &[f64], noise_variance: f64) -> Result<f64> {
    if beam_powers.is_empty() {
        return Err(Error::domain("SLNR needs at least one beam direction"));
    }
    let signal = beam_powers.iter().copied().fold(f64::INFINITY, f64::min);
    let leakage = null_powers.iter().copied().fold(0.0, f64::max);
    let ratio = signal / (leakage + noise_variance);
    Ok(10.0 * ratio.max(POWER_FLOOR).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadside_steering_is_all_ones() {
        let h = steering_vector(0.0, 100, 0.02, 2.45e9).unwrap();
        assert!(h.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn steering_unit_magnitude_and_conjugate_symmetry() {
        for theta in [-73.0, -12.5, 3.0, 45.0, 90.0] {
            let h = steering_vector(theta, 100, 0.02, 2.45e9).unwrap();
            let hm = steering_vector(-theta, 100, 0.02, 2.45e9).unwrap();
            for (a, b) in h.iter().zip(&hm) {
                assert!((a.norm() - 1.0).abs() < 1e-14);
                assert!((a.conj() - b).norm() < 1e-12);
            }
        }
        assert!(steering_vector(91.0, 4, 0.02, 2.45e9).is_err());
    }

    #[test]
    fn coherent_broadside_power() {
        let setup = ChannelSetup::default();
        let ones = vec![Complex64::new(1.0, 0.0); 100];
        let p = received_power_db(&ones, 0.0, 0.02, &setup).unwrap();
        assert_eq!(p, 40.0);
    }

    #[test]
    fn zero_reflection_hits_floor() {
        let setup = ChannelSetup::default();
        let zeros = vec![Complex64::new(0.0, 0.0); 100];
        assert_eq!(received_power_db(&zeros, 10.0, 0.02, &setup).unwrap(), -120.0);
    }

    #[test]
    fn slnr_single_beam_no_nulls() {
        let s = slnr_db(&[10f64.powf(3.398)], &[], 1.0).unwrap();
        assert!((s - 33.98).abs() < 1e-9);
        let approx = 33.98 - 10.0 * (1.0 + 10f64.powf(-3.398)).log10();
        assert!((s - approx).abs() < 1e-2);
    }

    #[test]
    fn slnr_equal_powers_is_zero_db() {
        let s = slnr_db(&[1e6], &[1e6], 1e-300).unwrap();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn slnr_requires_a_beam() {
        assert!(matches!(slnr_db(&[], &[1.0], 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn grid_angles_are_exact() {
        let g = AngleGrid::default();
        let a = g.angles();
        assert_eq!(a.len(), 81);
        assert_eq!(a[0], -60.0);
        assert_eq!(a[40], 0.0);
        assert_eq!(a[57], 25.5);
        assert_eq!(a[80], 60.0);
        assert_eq!(g.step(), 1.5);
    }
}
