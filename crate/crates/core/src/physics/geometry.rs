use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical layout of one RIS row and the biasing transmission line behind it.
///
/// All lengths are in meters and measured along `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RisGeometry {
    /// Number of reflecting elements `M`.
    pub elements: usize,
    /// Element period `d_x`.
    pub spacing: f64,
    /// Line path length between adjacent rectifier taps.
    pub path_length: f64,
    /// Line length before the first rectifier.
    pub left_length: f64,
    /// Line length after the last rectifier, up to the short circuit.
    pub right_length: f64,
    /// Effective permittivity of the biasing line.
    pub eps_eff: f64,
    /// Number of standing-wave harmonics `N`.
    pub harmonics: usize,
}

impl Default for RisGeometry {
    /// Single 100-element row at 20 mm pitch, biased by 25 harmonics. The
    /// line is extended past the aperture by a 50 mm connector and a second,
    /// identical 100-cell line.
    fn default() -> Self {
        let spacing = 0.020;
        let path_length = 0.131_42;
        let connector = 0.050 * spacing / path_length;
        RisGeometry {
            elements: 100,
            spacing,
            path_length,
            left_length: 0.5 * spacing,
            right_length: 0.5 * spacing + connector + 100.0 * spacing,
            eps_eff: 8.66,
            harmonics: 25,
        }
    }
}

impl RisGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.elements < 1 {
            return Err(Error::config("geometry: element count must be at least 1"));
        }
        if self.harmonics < 1 {
            return Err(Error::config("geometry: harmonic count must be at least 1"));
        }
        for (name, v) in [
            ("spacing", self.spacing),
            ("path_length", self.path_length),
            ("left_length", self.left_length),
            ("right_length", self.right_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("geometry: {name} must be positive, got {v}")));
            }
        }
        if !(self.eps_eff.is_finite() && self.eps_eff >= 1.0) {
            return Err(Error::config(format!("geometry: eps_eff must be >= 1, got {}", self.eps_eff)));
        }
        Ok(())
    }

    pub fn effective_index(&self) -> f64 {
        self.eps_eff.sqrt()
    }

    /// Slowness factor: ratio of `c` to the phase velocity projected on `x`.
    pub fn slowness(&self) -> f64 {
        self.path_length / self.spacing * self.effective_index()
    }

    /// Biased span `L = (M - 1) d_x`.
    pub fn aperture_length(&self) -> f64 {
        (self.elements - 1) as f64 * self.spacing
    }

    pub fn total_length(&self) -> f64 {
        self.left_length + self.aperture_length() + self.right_length
    }

    pub fn phase_velocity(&self) -> f64 {
        SPEED_OF_LIGHT / self.slowness()
    }

    /// Fundamental standing-wave frequency `f_b` (Hz); the fundamental is
    /// resonant with the full line length.
    pub fn fundamental_frequency(&self) -> f64 {
        self.phase_velocity() / (2.0 * self.total_length())
    }

    pub fn fundamental_angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.fundamental_frequency()
    }

    /// Position of element `m` along the aperture.
    pub fn element_position(&self, m: usize) -> f64 {
        m as f64 * self.spacing
    }

    /// Spatial profile `sin(n pi (x + L_left) / L_tot)` of harmonic `n` (1-based).
    pub fn mode_shape(&self, n: usize, x: f64) -> f64 {
        (n as f64 * std::f64::consts::PI * (x + self.left_length) / self.total_length()).sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_derivations() {
        let g = RisGeometry::default();
        g.validate().unwrap();
        assert!((g.slowness() - 19.34).abs() <= 0.01, "n_slow = {}", g.slowness());
        let fb = g.fundamental_frequency();
        assert!((fb - 1.93e6).abs() <= 0.01e6, "f_b = {fb}");
        assert!((g.aperture_length() - 99.0 * g.spacing).abs() < 1e-15);
        assert!((g.right_length / g.spacing - 100.88).abs() < 0.005);
        assert!((g.total_length() / g.spacing - 200.38).abs() < 0.005);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(RisGeometry { eps_eff: 0.5, ..RisGeometry::default() }.validate().is_err());
        assert!(RisGeometry { harmonics: 0, ..RisGeometry::default() }.validate().is_err());
        assert!(RisGeometry { spacing: -1.0, ..RisGeometry::default() }.validate().is_err());
    }
}
