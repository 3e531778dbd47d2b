//! Beam synthesis: SLNR objectives, simulated annealing against the surrogate
//! or the exact simulator, and the lookup table that warm-starts new requests.

mod adaptive;
mod sa;
mod table;

pub use adaptive::{adaptive_optimize, dataset_seed, AdaptiveOutcome, DatasetSeed, StartPath};
pub use sa::{acceptance_probability, sa_optimize, AcceptanceDomain, SaOutcome, SaParams, SaStep, SignMode};
pub use table::{LookupEntry, LookupTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Surrogate;
use crate::physics::{db_to_linear, short_hash, slnr_db, AngleGrid, Simulator};

/// Linear interpolation of a sampled pattern (dB as stored) at `theta_deg`.
pub fn interpolated_power(powers: &[f64], theta_deg: f64, grid: &AngleGrid) -> Result<f64> {
    if powers.len() != grid.count {
        return Err(Error::domain(format!("{} powers for a {}-point grid", powers.len(), grid.count)));
    }
    if !grid.contains(theta_deg) {
        return Err(Error::domain(format!(
            "direction {theta_deg} outside the grid [{}, {}]",
            grid.min_deg, grid.max_deg
        )));
    }
    let last = grid.count - 1;
    let i = (theta_deg - grid.min_deg) * last as f64 / (grid.max_deg - grid.min_deg);
    let lo = (i.floor() as usize).min(last);
    let delta = i - lo as f64;
    if delta == 0.0 {
        return Ok(powers[lo]);
    }
    Ok((1.0 - delta) * powers[lo] + delta * powers[(lo + 1).min(last)])
}

/// Desired and undesired receiver directions (degrees) plus noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub beams: Vec<f64>,
    pub nulls: Vec<f64>,
    pub noise_variance: f64,
}

impl Objective {
    pub fn new(beams: Vec<f64>, nulls: Vec<f64>, noise_variance: f64) -> Self {
        Objective { beams, nulls, noise_variance }
    }

    pub fn validate(&self, grid: &AngleGrid) -> Result<()> {
        if self.beams.is_empty() {
            return Err(Error::domain("objective needs at least one beam direction"));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::domain("noise variance must be positive"));
        }
        for &d in self.beams.iter().chain(&self.nulls) {
            if !grid.contains(d) {
                return Err(Error::domain(format!("direction {d} outside [{}, {}]", grid.min_deg, grid.max_deg)));
            }
        }
        if let Some(d) = self.beams.iter().find(|b| self.nulls.contains(b)) {
            return Err(Error::domain(format!("direction {d} is both a beam and a null")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Engine<'a> {
    Surrogate { model: &'a Surrogate, window: Option<&'a Simulator>, bounded: bool },
    Exact { sim: &'a Simulator, interpolate: bool },
}

/// Pattern evaluator used by the optimizers.
#[derive(Debug, Clone)]
pub struct Backend<'a> {
    engine: Engine<'a>,
    fingerprint: String,
}

impl<'a> Backend<'a> {
    /// Network backend; only non-negative amplitudes are accepted.
    pub fn surrogate(model: &'a Surrogate) -> Self {
        let mut bytes = Vec::new();
        for layer in model.mlp.layers() {
            for v in layer.weights.iter().chain(layer.bias.iter()).chain([&layer.slope]) {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let fingerprint = format!("nn-{}-{}", model.fingerprint, short_hash(&bytes));
        Backend { engine: Engine::Surrogate { model, window: None, bounded: false }, fingerprint }
    }

    /// Network backend that also rejects amplitudes whose bias profile leaves
    /// the varactor window of `sim`, as the exact backend does.
    pub fn surrogate_in_window(model: &'a Surrogate, sim: &'a Simulator) -> Result<Self> {
        model.check_fingerprint(sim.fingerprint())?;
        let mut b = Self::surrogate(model);
        b.engine = Engine::Surrogate { model, window: Some(sim), bounded: false };
        Ok(b)
    }

    /// Also rejects amplitudes above the largest one seen in training, where
    /// the network would be extrapolating.
    pub fn bounded_to_training_range(mut self) -> Self {
        if let Engine::Surrogate { model, window, .. } = self.engine {
            self.engine = Engine::Surrogate { model, window, bounded: true };
        }
        self
    }

    /// Exact simulator sampled directly at each requested direction.
    pub fn exact(sim: &'a Simulator) -> Self {
        Backend { engine: Engine::Exact { sim, interpolate: false }, fingerprint: format!("sim-{}", sim.fingerprint()) }
    }

    /// Exact simulator read through the same grid interpolation as the network.
    pub fn exact_interpolated(sim: &'a Simulator) -> Self {
        Backend { engine: Engine::Exact { sim, interpolate: true }, fingerprint: format!("sim-{}", sim.fingerprint()) }
    }

    /// Identifies the backend in lookup entries.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn grid(&self) -> &AngleGrid {
        match self.engine {
            Engine::Surrogate { model, .. } => &model.grid,
            Engine::Exact { sim, .. } => sim.grid(),
        }
    }

    pub fn harmonics(&self) -> usize {
        match self.engine {
            Engine::Surrogate { model, .. } => model.harmonics(),
            Engine::Exact { sim, .. } => sim.harmonics(),
        }
    }

    pub fn is_surrogate(&self) -> bool {
        matches!(self.engine, Engine::Surrogate { .. })
    }

    /// Power (dB) toward each direction.
    pub fn powers(&self, w: &[f64], directions: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.harmonics() {
            return Err(Error::domain(format!("expected {} amplitudes, got {}", self.harmonics(), w.len())));
        }
        let pattern = match self.engine {
            Engine::Surrogate { model, window, bounded } => {
                if let Some(v) = w.iter().find(|v| !(**v >= 0.0)) {
                    return Err(Error::domain(format!("network backend needs non-negative amplitudes, got {v}")));
                }
                if bounded && w.iter().any(|&v| v > model.scaling.w_hi) {
                    return Err(Error::RejectedConfiguration("amplitude above the training range".into()));
                }
                if let Some(sim) = window {
                    if !sim.is_admissible(w)? {
                        return Err(Error::RejectedConfiguration("bias profile leaves the varactor window".into()));
                    }
                }
                model.predict_db(w)?
            }
            Engine::Exact { sim, interpolate: false } => return sim.powers_at(w, directions),
            Engine::Exact { sim, interpolate: true } => sim.radiation_pattern(w)?,
        };
        let grid = self.grid();
        directions.iter().map(|&d| interpolated_power(&pattern, d, grid)).collect()
    }
}

/// SLNR (dB) of amplitudes `w` for an objective.
pub fn evaluate_slnr(backend: &Backend, w: &[f64], objective: &Objective) -> Result<f64> {
    let k = objective.beams.len();
    let dirs: Vec<f64> = objective.beams.iter().chain(&objective.nulls).copied().collect();
    let linear: Vec<f64> = backend.powers(w, &dirs)?.into_iter().map(db_to_linear).collect();
    slnr_db(&linear[..k], &linear[k..], objective.noise_variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::PhysicsConfig;

    fn grid() -> AngleGrid {
        AngleGrid::default()
    }

    #[test]
    fn interpolation_identities() {
        let p: Vec<f64> = (0..81).map(|k| (k as f64 * 0.37).sin() * 20.0).collect();
        let g = grid();
        assert_eq!(interpolated_power(&p, -60.0, &g).unwrap(), p[0]);
        assert_eq!(interpolated_power(&p, 60.0, &g).unwrap(), p[80]);
        assert_eq!(interpolated_power(&p, 0.0, &g).unwrap(), p[40]);
        assert_eq!(interpolated_power(&p, 0.75, &g).unwrap(), 0.5 * p[40] + 0.5 * p[41]);
        assert!(interpolated_power(&p, 60.5, &g).is_err());
        assert!(interpolated_power(&p[..80], 0.0, &g).is_err());
    }

    #[test]
    fn grid_aligned_is_lookup() {
        let p: Vec<f64> = (0..81).map(|k| k as f64 * 1.25 - 3.0).collect();
        let g = grid();
        for k in 0..81 {
            assert_eq!(interpolated_power(&p, g.angle(k), &g).unwrap(), p[k]);
        }
    }

    #[test]
    fn objective_validation() {
        let g = grid();
        assert!(Objective::new(vec![], vec![], 1.0).validate(&g).is_err());
        assert!(Objective::new(vec![10.0], vec![10.0], 1.0).validate(&g).is_err());
        assert!(Objective::new(vec![70.0], vec![], 1.0).validate(&g).is_err());
        Objective::new(vec![10.0], vec![-10.0], 1.0).validate(&g).unwrap();
    }

    #[test]
    fn exact_backend_broadside_matches_pattern() {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let w = vec![0.0; sim.harmonics()];
        let pattern = sim.radiation_pattern(&w).unwrap();
        let obj = Objective::new(vec![0.0], vec![], 1.0);
        let expected = slnr_db(&[db_to_linear(pattern[40])], &[], 1.0).unwrap();
        for backend in [Backend::exact(&sim), Backend::exact_interpolated(&sim)] {
            let s = evaluate_slnr(&backend, &w, &obj).unwrap();
            assert!((s - expected).abs() < 1e-12, "{s} vs {expected}");
        }
    }

    #[test]
    fn nulls_never_raise_slnr() {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let b = Backend::exact(&sim);
        let mut w = vec![0.0; sim.harmonics()];
        w[2] = 0.4;
        w[5] = 0.3;
        let mut obj = Objective::new(vec![12.0], vec![], 1.0);
        let mut last = evaluate_slnr(&b, &w, &obj).unwrap();
        for null in [-30.0, 40.5, 7.3] {
            obj.nulls.push(null);
            let s = evaluate_slnr(&b, &w, &obj).unwrap();
            assert!(s <= last);
            last = s;
        }
    }

    #[test]
    fn exact_backend_rejects_out_of_window() {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let b = Backend::exact(&sim);
        let mut w = vec![0.0; sim.harmonics()];
        w[0] = 20.0;
        let obj = Objective::new(vec![0.0], vec![], 1.0);
        assert!(matches!(evaluate_slnr(&b, &w, &obj), Err(Error::RejectedConfiguration(_))));
    }
}
