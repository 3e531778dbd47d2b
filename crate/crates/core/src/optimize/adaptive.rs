use rand::Rng;
use serde::{Deserialize, Serialize};

use super::table::normalize;
use super::{interpolated_power, sa_optimize, Backend, LookupEntry, LookupTable, Objective, SaParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Dataset sample with the strongest interpolated power toward any requested beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSeed {
    pub row: usize,
    pub beam: f64,
    pub power_db: f64,
}

pub fn dataset_seed(dataset: &Dataset, beams: &[f64]) -> Result<DatasetSeed> {
    if beams.is_empty() {
        return Err(Error::domain("no beam directions to seed"));
    }
    let grid = &dataset.meta.grid;
    let mut best: Option<DatasetSeed> = None;
    for (row, p) in dataset.p.rows().into_iter().enumerate() {
        let p = p.to_vec();
        for &beam in beams {
            let power_db = interpolated_power(&p, beam, grid)?;
            if best.is_none_or(|b| power_db > b.power_db) {
                best = Some(DatasetSeed { row, beam, power_db });
            }
        }
    }
    best.ok_or_else(|| Error::DegenerateDataset("empty dataset".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPath {
    CacheHit,
    Warm,
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOutcome {
    pub w: Vec<f64>,
    pub slnr: f64,
    pub path: StartPath,
    pub sa_runs: usize,
    /// Entries added to or replaced in the table.
    pub inserted: usize,
    /// Dataset row used on a cold start.
    pub seed_row: Option<usize>,
}

struct Runner<'t, 'b, 'r, R: Rng + ?Sized> {
    table: &'t mut LookupTable,
    backend: &'b Backend<'b>,
    params: &'b SaParams,
    rng: &'r mut R,
    w: Vec<f64>,
    slnr: f64,
    sa_runs: usize,
    inserted: usize,
}

impl<R: Rng + ?Sized> Runner<'_, '_, '_, R> {
    fn step(&mut self, objective: &Objective) -> Result<()> {
        let out = sa_optimize(self.backend, objective, self.params, Some(&self.w), self.rng)?;
        self.sa_runs += 1;
        let entry =
            LookupEntry::new(&objective.beams, &objective.nulls, out.slnr, out.w.clone(), self.backend.fingerprint());
        self.inserted += self.table.insert(entry) as usize;
        self.w = out.w;
        self.slnr = out.slnr;
        Ok(())
    }
}

fn dedup_in_order(dirs: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(dirs.len());
    for &d in dirs {
        let d = d + 0.0;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    out
}

/// Answers an objective from the table, extending the closest stored solution
/// or building one up from the best dataset sample. Every annealing result is
/// recorded in the table.
pub fn adaptive_optimize<R: Rng + ?Sized>(
    table: &mut LookupTable,
    backend: &Backend,
    objective: &Objective,
    params: &SaParams,
    dataset: Option<&Dataset>,
    rng: &mut R,
) -> Result<AdaptiveOutcome> {
    objective.validate(backend.grid())?;
    let fp = backend.fingerprint().to_string();
    let beams = dedup_in_order(&objective.beams);
    let nulls = dedup_in_order(&objective.nulls);

    if let Some(e) = table.exact(&beams, &nulls, &fp) {
        return Ok(AdaptiveOutcome {
            w: e.w.clone(),
            slnr: e.slnr_db,
            path: StartPath::CacheHit,
            sa_runs: 0,
            inserted: 0,
            seed_row: None,
        });
    }

    let noise = objective.noise_variance;
    let (mut current, missing, w, path, seed_row) = match table.query(&beams, &fp) {
        Some(e) => {
            let inherited_nulls = e.nulls.iter().copied().filter(|n| !beams.contains(n)).collect();
            let current = Objective::new(e.beams.clone(), inherited_nulls, noise);
            let missing: Vec<f64> = beams.iter().copied().filter(|b| !e.beams.contains(b)).collect();
            (current, missing, e.w.clone(), StartPath::Warm, None)
        }
        None => {
            let ds = dataset.ok_or_else(|| Error::config("cold start needs the training dataset"))?;
            if ds.meta.grid != *backend.grid() || ds.harmonics() != backend.harmonics() {
                return Err(Error::config("dataset does not match the backend's grid or harmonic count"));
            }
            let seed = dataset_seed(ds, &beams)?;
            let mut order = vec![seed.beam];
            order.extend(beams.iter().copied().filter(|&b| b != seed.beam));
            let w = ds.w.row(seed.row).to_vec();
            (Objective::new(Vec::new(), Vec::new(), noise), order, w, StartPath::Cold, Some(seed.row))
        }
    };

    let mut runner = Runner { table, backend, params, rng, w, slnr: f64::NAN, sa_runs: 0, inserted: 0 };
    for b in missing {
        current.beams.push(b);
        runner.step(&current)?;
    }
    if runner.sa_runs == 0 || normalize(&current.nulls) != normalize(&nulls) {
        current.nulls = nulls;
        runner.step(&current)?;
    }
    Ok(AdaptiveOutcome {
        w: runner.w,
        slnr: runner.slnr,
        path,
        sa_runs: runner.sa_runs,
        inserted: runner.inserted,
        seed_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetConfig};
    use crate::optimize::evaluate_slnr;
    use crate::physics::{PhysicsConfig, Simulator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quick() -> SaParams {
        SaParams { max_iter: 30, restart: 10, ..Default::default() }
    }

    fn setup() -> (Simulator, Dataset) {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        let ds = generate_dataset(&sim, &DatasetConfig { count: 40, seed: 3, ..Default::default() }).unwrap();
        (sim, ds)
    }

    #[test]
    fn seed_matches_exhaustive_scan() {
        let (_, ds) = setup();
        let beams = [25.5, -12.3];
        let s = dataset_seed(&ds, &beams).unwrap();
        // Independent scan: linear interpolation written out by hand.
        let mut best = (f64::NEG_INFINITY, 0);
        for r in 0..ds.len() {
            for &b in &beams {
                let x = (b + 60.0) / 1.5;
                let lo = x.floor() as usize;
                let f = x - lo as f64;
                let v = ds.p[[r, lo]] * (1.0 - f) + ds.p[[r, (lo + 1).min(80)]] * f;
                if v > best.0 + 1e-12 {
                    best = (v, r);
                }
            }
        }
        assert_eq!(s.row, best.1);
        assert!((s.power_db - best.0).abs() < 1e-9);
    }

    #[test]
    fn cold_path_growth_and_seed() {
        let (sim, ds) = setup();
        let b = Backend::exact(&sim);
        let mut t = LookupTable::new();
        let obj = Objective::new(vec![-20.0, 50.0], vec![10.0, -40.0], 1.0);
        let out = adaptive_optimize(&mut t, &b, &obj, &quick(), Some(&ds), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.path, StartPath::Cold);
        assert_eq!(out.sa_runs, 3);
        assert_eq!(out.inserted, 3);
        assert_eq!(t.len(), 3);
        assert_eq!(out.seed_row, Some(dataset_seed(&ds, &obj.beams).unwrap().row));
        let e = t.exact(&obj.beams, &obj.nulls, b.fingerprint()).unwrap();
        assert_eq!(e.w, out.w);
        assert!((evaluate_slnr(&b, &e.w, &obj).unwrap() - e.slnr_db).abs() < 1e-9);

        let again = adaptive_optimize(&mut t, &b, &obj, &quick(), None, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(again.path, StartPath::CacheHit);
        assert_eq!(again.sa_runs, 0);
        assert_eq!(again.w, out.w);
    }

    #[test]
    fn cold_without_nulls_inserts_k() {
        let (sim, ds) = setup();
        let b = Backend::exact(&sim);
        let mut t = LookupTable::new();
        let obj = Objective::new(vec![5.0, -30.0, 41.0], vec![], 1.0);
        let out = adaptive_optimize(&mut t, &b, &obj, &quick(), Some(&ds), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.inserted, 3);
        assert_eq!(out.sa_runs, 3);
    }

    #[test]
    fn single_beam_cold_starts_from_dataset_argmax() {
        let (sim, ds) = setup();
        let b = Backend::exact(&sim);
        let mut t = LookupTable::new();
        let obj = Objective::new(vec![25.5], vec![], 1.0);
        let frozen = SaParams { step: 0.0, ..quick() };
        let out = adaptive_optimize(&mut t, &b, &obj, &frozen, Some(&ds), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let row = dataset_seed(&ds, &[25.5]).unwrap().row;
        assert_eq!(out.w, ds.w.row(row).to_vec());
    }

    #[test]
    fn warm_path_extends_stored_entry() {
        let (sim, ds) = setup();
        let b = Backend::exact(&sim);
        let mut t = LookupTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        adaptive_optimize(&mut t, &b, &Objective::new(vec![-20.0], vec![], 1.0), &quick(), Some(&ds), &mut rng)
            .unwrap();
        let obj = Objective::new(vec![-20.0, 50.0], vec![10.0, -40.0], 1.0);
        let out = adaptive_optimize(&mut t, &b, &obj, &quick(), None, &mut rng).unwrap();
        assert_eq!(out.path, StartPath::Warm);
        assert_eq!(out.sa_runs, 2);
        assert_eq!(t.len(), 3);
        assert!(t.exact(&[-20.0, 50.0], &[], b.fingerprint()).is_some());
        assert_eq!(t.exact(&[50.0, -20.0], &[-40.0, 10.0], b.fingerprint()).unwrap().w, out.w);
    }

    #[test]
    fn warm_path_only_nulls_differ() {
        let (sim, ds) = setup();
        let b = Backend::exact(&sim);
        let mut t = LookupTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        adaptive_optimize(&mut t, &b, &Objective::new(vec![15.0], vec![], 1.0), &quick(), Some(&ds), &mut rng).unwrap();
        let out =
            adaptive_optimize(&mut t, &b, &Objective::new(vec![15.0], vec![-15.0], 1.0), &quick(), None, &mut rng)
                .unwrap();
        assert_eq!(out.path, StartPath::Warm);
        assert_eq!(out.sa_runs, 1);
    }

    #[test]
    fn cold_needs_dataset() {
        let (sim, _) = setup();
        let b = Backend::exact(&sim);
        let mut t = LookupTable::new();
        let obj = Objective::new(vec![25.5], vec![], 1.0);
        let r = adaptive_optimize(&mut t, &b, &obj, &quick(), None, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
