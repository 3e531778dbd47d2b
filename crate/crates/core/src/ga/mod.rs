//! Evolutionary architecture search with validation loss as fitness.
//!
//! A population of `R` random genomes is trained; each generation draws
//! `R_g / 2` parent pairs with replacement, breeds two children per pair and
//! keeps the fittest half of parents plus children, until one individual
//! remains. That trains `3R - 2` networks over `log2(R) + 1` generations.

mod genome;

pub use genome::{crossover, mutate, sample_genome};

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{train, Architecture, Mlp, TrainConfig, TrainData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    /// Initial population `R`, a power of two of at least 2.
    pub population: usize,
    pub seed: u64,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    /// Forbid pairing an individual with itself.
    pub distinct_parents: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 8,
            seed: 0,
            crossover_probability: 1.0,
            mutation_probability: 1.0,
            distinct_parents: false,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || !self.population.is_power_of_two() {
            return Err(Error::config(format!("population {} must be a power of two >= 2", self.population)));
        }
        for (name, p) in [("crossover", self.crossover_probability), ("mutation", self.mutation_probability)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Networks trained by a complete run.
    pub fn budget(&self) -> usize {
        3 * self.population - 2
    }

    pub fn generations(&self) -> usize {
        self.population.trailing_zeros() as usize + 1
    }
}

/// Anything that turns a genome into a validation loss.
pub trait Trainer: Sync {
    fn fitness(&self, arch: &Architecture, seed: u64) -> Result<f64>;
}

impl<F> Trainer for F
where
    F: Fn(&Architecture, u64) -> Result<f64> + Sync,
{
    fn fitness(&self, arch: &Architecture, seed: u64) -> Result<f64> {
        self(arch, seed)
    }
}

/// Trains real networks on a fixed split of a dataset.
pub struct NnTrainer {
    data: TrainData,
    inputs: usize,
    outputs: usize,
    config: TrainConfig,
}

impl NnTrainer {
    pub fn new(dataset: &Dataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(NnTrainer {
            data: TrainData::from_dataset(dataset, config.train_fraction),
            inputs: dataset.harmonics(),
            outputs: dataset.n_angles(),
            config,
        })
    }
}

impl Trainer for NnTrainer {
    fn fitness(&self, arch: &Architecture, seed: u64) -> Result<f64> {
        let cfg = TrainConfig { seed, ..self.config.clone() };
        let mut mlp = Mlp::init(arch, self.inputs, self.outputs, seed)?;
        let report = train(&mut mlp, &self.data, arch.epochs, arch.batch_size, &cfg, |_| {})?;
        Ok(report.best_val_mse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    /// Creation order, also the tie-breaker between equal fitness values.
    pub id: u64,
    pub arch: Architecture,
    /// Validation MSE; `f64::MAX` when training failed.
    pub fitness: f64,
    pub parents: Option<(u64, u64)>,
    pub generation: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub population: usize,
    /// Networks trained to form this generation.
    pub trained: usize,
    pub best: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaReport {
    pub config: GaConfig,
    pub models_trained: usize,
    pub generations: Vec<GenerationSummary>,
    pub winner: Individual,
    /// Ids of the winner and all its ancestors, newest first.
    pub winner_lineage: Vec<u64>,
    pub individuals: Vec<Individual>,
    pub training_seconds: f64,
}

impl GaReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Decorrelated per-individual training seed.
pub fn individual_seed(run_seed: u64, id: u64) -> u64 {
    let mut z = run_seed ^ id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn summarize(generation: usize, trained: usize, pop: &[Individual]) -> GenerationSummary {
    let mut f: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
    f.sort_by(f64::total_cmp);
    GenerationSummary { generation, population: pop.len(), trained, best: f[0], median: median(&f) }
}

struct Pending {
    id: u64,
    arch: Architecture,
    parents: Option<(u64, u64)>,
}

fn train_all<T: Trainer>(trainer: &T, seed: u64, generation: usize, pending: Vec<Pending>) -> Vec<Individual> {
    pending
        .into_par_iter()
        .map(|p| {
            let result = trainer.fitness(&p.arch, individual_seed(seed, p.id));
            let (fitness, failure) = match result {
                Ok(f) if f.is_finite() => (f, None),
                Ok(f) => (f64::MAX, Some(format!("non-finite fitness {f}"))),
                Err(e) => (f64::MAX, Some(e.to_string())),
            };
            Individual { id: p.id, arch: p.arch, fitness, parents: p.parents, generation, failure }
        })
        .collect()
}

fn by_fitness(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    a.fitness.total_cmp(&b.fitness).then(a.id.cmp(&b.id))
}

/// Runs the full search. `on_generation` sees each generation once formed.
pub fn evolve<T: Trainer>(
    cfg: &GaConfig,
    trainer: &T,
    mut on_generation: impl FnMut(&GenerationSummary),
) -> Result<GaReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut next_id = 0u64;
    let mut fresh = |arch, parents| {
        next_id += 1;
        Pending { id: next_id - 1, arch, parents }
    };

    let initial: Vec<Pending> = (0..cfg.population).map(|_| fresh(sample_genome(&mut rng), None)).collect();
    let mut population = train_all(trainer, cfg.seed, 1, initial);
    population.sort_by(by_fitness);
    let mut all = population.clone();
    let mut generations = vec![summarize(1, cfg.population, &population)];
    on_generation(&generations[0]);

    while population.len() > 1 {
        let generation = generations.len() + 1;
        let size = population.len();
        let mut children = Vec::with_capacity(size);
        for _ in 0..size / 2 {
            let i = rng.random_range(0..size);
            let j = loop {
                let j = rng.random_range(0..size);
                if !cfg.distinct_parents || j != i {
                    break j;
                }
            };
            let (a, b) = (&population[i], &population[j]);
            for _ in 0..2 {
                let mut child = if rng.random_bool(cfg.crossover_probability) {
                    crossover(&a.arch, &b.arch, &mut rng)
                } else if rng.random_bool(0.5) {
                    a.arch.clone()
                } else {
                    b.arch.clone()
                };
                if rng.random_bool(cfg.mutation_probability) {
                    child = mutate(&child, (&a.arch, &b.arch), &mut rng);
                }
                children.push(fresh(child, Some((a.id, b.id))));
            }
        }
        let trained = train_all(trainer, cfg.seed, generation, children);
        all.extend(trained.iter().cloned());
        population.extend(trained);
        population.sort_by(by_fitness);
        population.truncate(size / 2);
        let summary = summarize(generation, size, &population);
        on_generation(&summary);
        generations.push(summary);
    }

    let winner = population.remove(0);
    let mut lineage = Vec::new();
    let mut frontier = vec![winner.id];
    while let Some(id) = frontier.pop() {
        if lineage.contains(&id) {
            continue;
        }
        lineage.push(id);
        if let Some((a, b)) = all[id as usize].parents {
            frontier.push(b);
            frontier.push(a);
        }
    }
    all.sort_by_key(|i| i.id);
    Ok(GaReport {
        config: cfg.clone(),
        models_trained: all.len(),
        generations,
        winner,
        winner_lineage: lineage,
        individuals: all,
        training_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Deterministic stand-in for a training run.
    fn stub(arch: &Architecture, _seed: u64) -> Result<f64> {
        let width: usize = arch.layers.iter().map(|l| l.nodes).sum();
        Ok(((arch.epochs * 7 + arch.batch_size * 3 + width) % 1009) as f64 / 1009.0)
    }

    #[test]
    fn budget_formula() {
        for r in [2usize, 4, 8, 16, 32, 64] {
            let cfg = GaConfig { population: r, seed: r as u64, ..Default::default() };
            let report = evolve(&cfg, &stub, |_| {}).unwrap();
            assert_eq!(report.models_trained, 3 * r - 2);
            assert_eq!(report.generations.len(), cfg.generations());
            assert_eq!(report.generations.iter().map(|g| g.trained).sum::<usize>(), cfg.budget());
        }
    }

    #[test]
    fn best_fitness_never_worsens() {
        let cfg = GaConfig { population: 32, seed: 9, ..Default::default() };
        let report = evolve(&cfg, &stub, |_| {}).unwrap();
        assert!(report.generations.windows(2).all(|w| w[1].best <= w[0].best));
        assert_eq!(report.winner.fitness, report.generations.last().unwrap().best);
        let global = report.individuals.iter().map(|i| i.fitness).fold(f64::INFINITY, f64::min);
        assert_eq!(report.winner.fitness, global);
    }

    #[test]
    fn replay_is_identical() {
        let cfg = GaConfig { population: 16, seed: 3, ..Default::default() };
        let mut a = evolve(&cfg, &stub, |_| {}).unwrap();
        let mut b = evolve(&cfg, &stub, |_| {}).unwrap();
        a.training_seconds = 0.0;
        b.training_seconds = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn failures_get_worst_fitness() {
        let failing = |arch: &Architecture, _: u64| -> Result<f64> {
            if arch.depth() > 3 {
                Err(Error::NonFiniteLoss { epoch: 1 })
            } else {
                stub(arch, 0)
            }
        };
        let cfg = GaConfig { population: 8, seed: 1, ..Default::default() };
        let report = evolve(&cfg, &failing, |_| {}).unwrap();
        for i in &report.individuals {
            assert_eq!(i.failure.is_some(), i.arch.depth() > 3);
            if i.failure.is_some() {
                assert_eq!(i.fitness, f64::MAX);
            }
        }
        assert!(report.winner.failure.is_none());
    }

    #[test]
    fn children_are_valid_and_linked() {
        let cfg = GaConfig { population: 16, seed: 5, distinct_parents: true, ..Default::default() };
        let report = evolve(&cfg, &stub, |_| {}).unwrap();
        for i in &report.individuals {
            i.arch.validate().unwrap();
            if let Some((a, b)) = i.parents {
                assert!(a < i.id && b < i.id && a != b);
            }
        }
        assert_eq!(report.winner_lineage[0], report.winner.id);
    }

    #[test]
    fn report_round_trips() {
        let cfg = GaConfig { population: 4, seed: 2, ..Default::default() };
        let report = evolve(&cfg, &stub, |_| {}).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ga.json");
        report.save(&path).unwrap();
        assert_eq!(GaReport::load(&path).unwrap(), report);
    }

    #[test]
    fn rejects_bad_population() {
        assert!(GaConfig { population: 6, ..Default::default() }.validate().is_err());
        assert!(GaConfig { population: 1, ..Default::default() }.validate().is_err());
    }
}
