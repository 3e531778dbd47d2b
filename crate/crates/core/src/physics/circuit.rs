use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::varactor::VaractorCurve;
use crate::error::{Error, Result};

/// Free-space wave impedance (ohm).
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730;

/// Lumped constants of the unit cell, excluding the varactor's bias-dependent part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConstants {
    /// Patch resistance `R_d` (ohm).
    pub r_d: f64,
    /// Patch gap capacitance `C_d` (F).
    pub c_d: f64,
    /// Patch inductance `L_d` (H).
    pub l_d: f64,
    /// Grounded-substrate shunt inductance `L_s` (H).
    pub l_s: f64,
    /// Varactor package inductance `L_v` (H).
    pub l_v: f64,
    /// Reference impedance for the reflection coefficient (ohm).
    pub z0: f64,
}

impl Default for CellConstants {
    fn default() -> Self {
        CellConstants {
            r_d: 0.1671,
            c_d: 0.978_21e-12,
            l_d: 1.9177e-9,
            l_s: 1.5959e-9,
            l_v: 2.34e-9,
            z0: FREE_SPACE_IMPEDANCE,
        }
    }
}

impl CellConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_d", self.r_d),
            ("c_d", self.c_d),
            ("l_d", self.l_d),
            ("l_s", self.l_s),
            ("l_v", self.l_v),
            ("z0", self.z0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("circuit: {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Unit-cell equivalent circuit: patch branch in series with (varactor || gap),
/// all shunted by the substrate inductance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UnitCellCircuit {
    pub constants: CellConstants,
    pub curve: VaractorCurve,
}

fn parallel(a: Complex64, b: Complex64) -> Complex64 {
    a * b / (a + b)
}

impl UnitCellCircuit {
    pub fn new(constants: CellConstants, curve: VaractorCurve) -> Result<Self> {
        constants.validate()?;
        Ok(UnitCellCircuit { constants, curve })
    }

    /// `Z_RIS` for explicit varactor values; `varactor_r` and `patch_r`
    /// may be zero for lossless what-if analysis.
    pub fn impedance_with(&self, omega: f64, varactor_c: f64, varactor_r: f64, patch_r: f64) -> Complex64 {
        let k = &self.constants;
        let j = Complex64::i();
        let varactor = varactor_r + j * omega * k.l_v + 1.0 / (j * omega * varactor_c);
        let gap = 1.0 / (j * omega * k.c_d);
        let branch = patch_r + j * omega * k.l_d + parallel(varactor, gap);
        parallel(branch, j * omega * k.l_s)
    }

    /// Equivalent surface impedance at angular frequency `omega` and bias `v`.
    pub fn impedance(&self, omega: f64, v: f64) -> Result<Complex64> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::domain(format!("angular frequency must be positive, got {omega}")));
        }
        let c = self.curve.capacitance(v)?;
        let r = self.curve.resistance(v)?;
        Ok(self.impedance_with(omega, c, r, self.constants.r_d))
    }

    pub fn reflection(&self, omega: f64, v: f64) -> Result<Complex64> {
        Ok(reflection_from_impedance(self.impedance(omega, v)?, self.constants.z0))
    }
}

pub fn reflection_from_impedance(z: Complex64, z0: f64) -> Complex64 {
    (z - z0) / (z + z0)
}

/// Free-function form of [`UnitCellCircuit::impedance`].
pub fn ris_impedance(cell: &UnitCellCircuit, omega: f64, v: f64) -> Result<Complex64> {
    cell.impedance(omega, v)
}

/// Free-function form of [`UnitCellCircuit::reflection`].
pub fn reflection_coefficient(cell: &UnitCellCircuit, omega: f64, v: f64) -> Result<Complex64> {
    cell.reflection(omega, v)
}
