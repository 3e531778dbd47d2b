use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{evaluate_slnr, Backend, Objective};
use crate::error::{Error, Result};
use crate::physics::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    /// Proposals are folded back with an absolute value.
    NonNegative,
    Signed,
}

/// Units in which SLNR differences enter the acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceptanceDomain {
    Db,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaParams {
    pub cooling: f64,
    pub max_iter: usize,
    /// Standard deviation of the Gaussian proposal step (V).
    pub step: f64,
    /// Iterations without a new best before jumping back to it.
    pub restart: usize,
    pub temperature_scale: f64,
    pub sign_mode: SignMode,
    pub acceptance: AcceptanceDomain,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            cooling: 0.002,
            max_iter: 2000,
            step: 0.015,
            restart: 200,
            temperature_scale: 100.0,
            sign_mode: SignMode::NonNegative,
            acceptance: AcceptanceDomain::Db,
        }
    }
}

impl SaParams {
    /// Overrides the iteration budget, shrinking the restart interval to a
    /// tenth of it when the old one no longer fits.
    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        if self.restart >= max_iter {
            self.restart = (max_iter / 10).max(1);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling.is_finite()) {
            return Err(Error::config("cooling factor must be positive"));
        }
        if !(self.temperature_scale > 0.0 && self.temperature_scale.is_finite()) {
            return Err(Error::config("temperature scale must be positive"));
        }
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return Err(Error::config("step must be finite and non-negative"));
        }
        if self.max_iter == 0 || self.restart == 0 || self.restart >= self.max_iter {
            return Err(Error::config(format!("need 0 < restart ({}) < max_iter ({})", self.restart, self.max_iter)));
        }
        Ok(())
    }
}

/// Probability of moving from `current` to `new` at temperature `t`.
pub fn acceptance_probability(current: f64, new: f64, t: f64, cooling: f64) -> f64 {
    if new > current {
        return 1.0;
    }
    if t <= 1e-12 {
        return 0.0;
    }
    (-(current - new) / (cooling * t)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaStep {
    pub iteration: usize,
    pub temperature: f64,
    /// `None` when the proposal left the admissible bias window.
    pub proposal: Option<f64>,
    pub accepted: bool,
    /// The chain jumped back to the best point before proposing.
    pub restarted: bool,
    pub current: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaOutcome {
    pub w: Vec<f64>,
    pub slnr: f64,
    pub initial_slnr: f64,
    pub trace: Vec<SaStep>,
}

fn to_domain(db: f64, domain: AcceptanceDomain) -> f64 {
    match domain {
        AcceptanceDomain::Db => db,
        AcceptanceDomain::Linear => db_to_linear(db),
    }
}

/// Simulated annealing with restarts. Starts from `w_init`, or zeros.
pub fn sa_optimize<R: Rng + ?Sized>(
    backend: &Backend,
    objective: &Objective,
    params: &SaParams,
    w_init: Option<&[f64]>,
    rng: &mut R,
) -> Result<SaOutcome> {
    params.validate()?;
    objective.validate(backend.grid())?;
    if backend.is_surrogate() && params.sign_mode == SignMode::Signed {
        return Err(Error::config("the network backend only accepts non-negative amplitudes"));
    }
    let n = backend.harmonics();
    let mut w = match w_init {
        Some(w) if w.len() != n => {
            return Err(Error::domain(format!("initial W has {} entries, expected {n}", w.len())));
        }
        Some(w) => w.to_vec(),
        None => vec![0.0; n],
    };
    let initial = evaluate_slnr(backend, &w, objective)?;
    let (mut current, mut best) = (initial, initial);
    let mut w_best = w.clone();
    let mut i_best = 0;
    let mut trace = Vec::with_capacity(params.max_iter);
    let mut proposal = vec![0.0; n];

    for i in 0..params.max_iter {
        let restarted = i - i_best >= params.restart;
        if restarted {
            w.clone_from(&w_best);
            current = best;
            i_best = i;
        }
        let t = params.temperature_scale * (1.0 - i as f64 / params.max_iter as f64);
        for (p, &x) in proposal.iter_mut().zip(&w) {
            let eps: f64 = rng.sample(StandardNormal);
            let v = x + params.step * eps;
            *p = match params.sign_mode {
                SignMode::NonNegative => v.abs(),
                SignMode::Signed => v,
            };
        }
        let new = match evaluate_slnr(backend, &proposal, objective) {
            Ok(s) => Some(s),
            Err(Error::RejectedConfiguration(_)) => None,
            Err(e) => return Err(e),
        };
        let mut accepted = false;
        if let Some(new) = new {
            if new > best {
                best = new;
                w_best.clone_from(&proposal);
                i_best = i;
                accepted = true;
            } else {
                let p = acceptance_probability(
                    to_domain(current, params.acceptance),
                    to_domain(new, params.acceptance),
                    t,
                    params.cooling,
                );
                accepted = p >= rng.random::<f64>();
            }
            if accepted {
                current = new;
                std::mem::swap(&mut w, &mut proposal);
            }
        }
        trace.push(SaStep { iteration: i, temperature: t, proposal: new, accepted, restarted, current, best });
    }
    Ok(SaOutcome { w: w_best, slnr: best, initial_slnr: initial, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{PhysicsConfig, Simulator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn short(max_iter: usize, restart: usize) -> SaParams {
        SaParams { max_iter, restart, ..Default::default() }
    }

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance_probability(10.0, 11.0, 50.0, 0.002), 1.0);
        assert_eq!(acceptance_probability(10.0, 10.0, 50.0, 0.002), 1.0);
        let p = acceptance_probability(10.0, 10.0 - 0.002 * 50.0, 50.0, 0.002);
        assert!((p - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(acceptance_probability(10.0, 9.0, 0.0, 0.002), 0.0);
        assert_eq!(acceptance_probability(10.0, 10.0, 1e-13, 0.002), 0.0);
        assert_eq!(acceptance_probability(10.0, 12.0, 0.0, 0.002), 1.0);
    }

    #[test]
    fn params_validation() {
        SaParams::default().validate().unwrap();
        assert!(short(100, 100).validate().is_err());
        assert!(SaParams { cooling: 0.0, ..Default::default() }.validate().is_err());
        assert!(SaParams { step: -1.0, ..Default::default() }.validate().is_err());
        assert_eq!(SaParams::default().with_max_iter(5000).restart, 200);
        assert_eq!(SaParams::default().with_max_iter(150).restart, 15);
        assert_eq!(SaParams::default().with_max_iter(5).restart, 1);
        assert!(SaParams::default().with_max_iter(1).validate().is_err());
    }

    #[test]
    fn frozen_chain_keeps_initial() {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let b = Backend::exact(&sim);
        let obj = Objective::new(vec![25.5], vec![], 1.0);
        let params = SaParams { step: 0.0, ..short(30, 10) };
        let out = sa_optimize(&b, &obj, &params, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.w, vec![0.0; sim.harmonics()]);
        assert_eq!(out.slnr, out.initial_slnr);
    }

    #[test]
    fn best_tracking_and_trace() {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let b = Backend::exact(&sim);
        let obj = Objective::new(vec![25.5], vec![-10.0], 1.0);
        let params = short(150, 20);
        let out = sa_optimize(&b, &obj, &params, None, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(out.trace.len(), 150);
        assert!(out.slnr >= out.initial_slnr);
        let max_accepted =
            out.trace.iter().filter(|s| s.accepted).filter_map(|s| s.proposal).fold(out.initial_slnr, f64::max);
        assert_eq!(out.slnr, max_accepted);
        assert!(out.w.iter().all(|&v| v >= 0.0));
        assert!((evaluate_slnr(&b, &out.w, &obj).unwrap() - out.slnr).abs() < 1e-12);
    }

    #[test]
    fn restarts_follow_patience() {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let b = Backend::exact(&sim);
        let obj = Objective::new(vec![-40.0], vec![], 1.0);
        let params = short(200, 15);
        let out = sa_optimize(&b, &obj, &params, None, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let mut i_best = 0;
        let mut best = out.initial_slnr;
        for s in &out.trace {
            let expect = s.iteration - i_best >= params.restart;
            assert_eq!(s.restarted, expect, "iteration {}", s.iteration);
            if expect {
                i_best = s.iteration;
            }
            if s.best > best {
                best = s.best;
                i_best = s.iteration;
            }
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let b = Backend::exact(&sim);
        let obj = Objective::new(vec![10.0], vec![], 1.0);
        let params = short(40, 10);
        let a = sa_optimize(&b, &obj, &params, None, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let c = sa_optimize(&b, &obj, &params, None, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, c);
    }
}
