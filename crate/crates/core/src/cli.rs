//! The `ris` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::dataset::{export_csv, generate_dataset, load_dataset_checked, save_dataset, Dataset};
use crate::error::{Error, Result};
use crate::ga::{evolve, NnTrainer};
use crate::nn::{load_model_checked, save_model, train_on_dataset, Architecture, Surrogate};
use crate::optimize::{adaptive_optimize, evaluate_slnr, sa_optimize, Backend, LookupTable, Objective, SignMode};
use crate::physics::Simulator;
use crate::plot::{pattern_csv, pattern_svg, write_text};

#[derive(Debug, Parser)]
#[command(name = "ris", version, about = "Wave-controlled RIS simulation, surrogate training and beam synthesis")]
pub struct Cli {
    /// TOML run configuration, or `default`. Falls back to $RIS_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Emit progress as JSON lines on stderr.
    #[arg(long, global = true)]
    pub json_log: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample random amplitude sets and their radiation patterns.
    GenDataset(GenArgs),
    /// Train one network architecture on a dataset.
    Train(TrainArgs),
    /// Evolve the network architecture.
    GaSearch(GaArgs),
    /// Synthesize amplitudes for beam and null directions.
    Optimize(OptimizeArgs),
    /// Render the exact radiation pattern of an amplitude file.
    Eval(EvalArgs),
    /// Print the exact sampled pattern of an amplitude file as CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the samples as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Architecture TOML, as written by `ga-search --arch-out`.
    #[arg(long, conflicts_with = "layers")]
    pub arch: Option<PathBuf>,
    /// Hidden layers as `nodes:activation,...`.
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epoch_cap: Option<usize>,
    /// Per-epoch losses as CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GaArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epoch_cap: Option<usize>,
    #[arg(long)]
    pub distinct_parents: bool,
    /// JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Winning architecture as TOML.
    #[arg(long)]
    pub arch_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Nn,
    Sim,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_enum, default_value = "sim")]
    pub backend: BackendKind,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset used to seed cold starts.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub beams: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub nulls: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Lookup table file, read if present and updated afterwards.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Amplitude file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Plain annealing from zero amplitudes, bypassing the lookup table.
    #[arg(long)]
    pub zero_init: bool,
    /// Allow negative amplitudes (exact backend only).
    #[arg(long)]
    pub signed: bool,
    /// Read the exact backend through grid interpolation.
    #[arg(long)]
    pub interpolate: bool,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Beam markers; defaults to the directions stored in the amplitude file.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beams: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub nulls: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "w", alias = "weights")]
    pub weights: PathBuf,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Progress reporting on stderr.
struct Log {
    quiet: bool,
    json: bool,
}

impl Log {
    fn event(&self, name: &str, fields: Value) {
        if self.quiet {
            return;
        }
        if self.json {
            let mut obj = json!({ "event": name });
            if let (Some(o), Value::Object(f)) = (obj.as_object_mut(), fields) {
                o.extend(f);
            }
            eprintln!("{obj}");
        } else {
            let mut line = name.to_string();
            if let Value::Object(f) = fields {
                for (k, v) in f {
                    write!(line, " {k}={v}").unwrap();
                }
            }
            eprintln!("{line}");
        }
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("error kind=usage msg={}", json!(first.trim_start_matches("error: ")));
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error kind={} msg={}", e.kind(), json!(e.to_string()));
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::from_arg(cli.config.as_deref())?;
    let log = Log { quiet: cli.quiet, json: cli.json_log };
    match cli.command {
        Command::GenDataset(a) => gen_dataset(&cfg, a, &log),
        Command::Train(a) => train(&cfg, a, &log),
        Command::GaSearch(a) => ga_search(&cfg, a, &log),
        Command::Optimize(a) => optimize(&cfg, a, &log),
        Command::Eval(a) => eval(&cfg, a, &log),
        Command::Simulate(a) => simulate(&cfg, a),
    }
}

fn pick_path(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| Error::config(format!("no {what} path given (flag or [paths] section)")))
}

fn load_data(cfg: &RunConfig, sim: &Simulator, flag: Option<PathBuf>) -> Result<Dataset> {
    load_dataset_checked(&pick_path(flag, &cfg.paths.dataset, "dataset")?, sim.fingerprint())
}

fn gen_dataset(cfg: &RunConfig, a: GenArgs, log: &Log) -> Result<()> {
    let sim = Simulator::new(cfg.physics()?)?;
    let mut dc = cfg.dataset.clone();
    dc.count = a.count.unwrap_or(dc.count);
    dc.seed = a.seed.unwrap_or(dc.seed);
    dc.sigma1 = a.sigma1.unwrap_or(dc.sigma1);
    dc.sigma2 = a.sigma2.unwrap_or(dc.sigma2);
    let out = a.out.or_else(|| cfg.paths.dataset.clone()).unwrap_or_else(|| PathBuf::from("dataset.bin"));
    log.event("generate", json!({ "count": dc.count, "seed": dc.seed }));
    let ds = generate_dataset(&sim, &dc)?;
    save_dataset(&ds, &out)?;
    if let Some(csv) = a.csv {
        export_csv(&ds, &csv)?;
    }
    log.event(
        "dataset",
        json!({ "path": out, "samples": ds.len(), "rejected": ds.meta.rejected, "fingerprint": ds.meta.fingerprint }),
    );
    Ok(())
}

fn train(cfg: &RunConfig, a: TrainArgs, log: &Log) -> Result<()> {
    let sim = Simulator::new(cfg.physics()?)?;
    let ds = load_data(cfg, &sim, a.dataset)?;
    let mut arch = match (&a.arch, &a.layers, &cfg.architecture) {
        (Some(path), _, _) => Architecture::load(path)?,
        (None, Some(layers), _) => {
            Architecture { epochs: 100, batch_size: 64, layers: Architecture::parse_layers(layers)? }
        }
        (None, None, Some(arch)) => arch.clone(),
        (None, None, None) => {
            return Err(Error::config("no architecture: pass --arch, --layers or an [architecture] section"))
        }
    };
    arch.epochs = a.epochs.unwrap_or(arch.epochs);
    arch.batch_size = a.batch.unwrap_or(arch.batch_size);
    arch.validate()?;
    let mut tc = cfg.training.clone();
    tc.seed = a.seed.unwrap_or(tc.seed);
    tc.epoch_cap = a.epoch_cap.or(tc.epoch_cap);
    log.event("train", json!({ "architecture": arch.to_string(), "samples": ds.len() }));
    let mut csv = String::from("epoch,train_mse,val_mse,learning_rate\n");
    let (mlp, report) = train_on_dataset(&arch, &ds, &tc, |e| {
        writeln!(csv, "{},{},{},{}", e.epoch, e.train_mse, e.val_mse, e.learning_rate).unwrap();
        log.event("epoch", json!({ "epoch": e.epoch, "train_mse": e.train_mse, "val_mse": e.val_mse }));
    })?;
    let out = a.out.or_else(|| cfg.paths.model.clone()).unwrap_or_else(|| PathBuf::from("model.bin"));
    save_model(&Surrogate::new(mlp, Some(arch), &ds)?, &out)?;
    if let Some(path) = a.log {
        write_text(&path, &csv)?;
    }
    log.event(
        "model",
        json!({ "path": out, "best_epoch": report.best_epoch, "val_mse": report.best_val_mse, "epochs_run": report.epochs_run }),
    );
    Ok(())
}

fn ga_search(cfg: &RunConfig, a: GaArgs, log: &Log) -> Result<()> {
    let sim = Simulator::new(cfg.physics()?)?;
    let ds = load_data(cfg, &sim, a.dataset)?;
    let mut gc = cfg.ga.clone();
    gc.population = a.population.unwrap_or(gc.population);
    gc.seed = a.seed.unwrap_or(gc.seed);
    gc.distinct_parents |= a.distinct_parents;
    let mut tc = cfg.training.clone();
    tc.epoch_cap = a.epoch_cap.or(tc.epoch_cap);
    let trainer = NnTrainer::new(&ds, tc)?;
    log.event("ga", json!({ "population": gc.population, "budget": gc.budget() }));
    let report = evolve(&gc, &trainer, |g| {
        log.event("generation", json!({ "generation": g.generation, "best": g.best, "median": g.median }));
    })?;
    report.save(&a.out)?;
    if let Some(path) = a.arch_out {
        report.winner.arch.save(&path)?;
    }
    log.event(
        "winner",
        json!({ "architecture": report.winner.arch.to_string(), "val_mse": report.winner.fitness, "trained": report.models_trained }),
    );
    Ok(())
}

fn optimize(cfg: &RunConfig, a: OptimizeArgs, log: &Log) -> Result<()> {
    let sim = Simulator::new(cfg.physics()?)?;
    let objective = Objective::new(a.beams.clone(), a.nulls.clone(), sim.config().channel.noise_variance);
    let mut params = match a.max_iter {
        Some(n) => cfg.sa.clone().with_max_iter(n),
        None => cfg.sa.clone(),
    };
    if a.signed {
        params.sign_mode = SignMode::Signed;
    }
    let model;
    let backend = match a.backend {
        BackendKind::Sim if a.interpolate => Backend::exact_interpolated(&sim),
        BackendKind::Sim => Backend::exact(&sim),
        BackendKind::Nn => {
            model = load_model_checked(&pick_path(a.model, &cfg.paths.model, "model")?, sim.fingerprint())?;
            Backend::surrogate_in_window(&model, &sim)?.bounded_to_training_range()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (w, slnr) = if a.zero_init {
        let out = sa_optimize(&backend, &objective, &params, None, &mut rng)?;
        log.event("anneal", json!({ "initial_slnr": out.initial_slnr, "slnr": out.slnr }));
        (out.w, out.slnr)
    } else {
        let table_path = a.table.or_else(|| cfg.paths.table.clone());
        let mut table = match &table_path {
            Some(p) if p.exists() => {
                let (t, warnings) = LookupTable::load(p, Some(backend.fingerprint()))?;
                for w in warnings {
                    log.event("warning", json!({ "message": w }));
                }
                t
            }
            _ => LookupTable::new(),
        };
        let dataset = if table.query(&objective.beams, backend.fingerprint()).is_none() {
            Some(load_data(cfg, &sim, a.dataset)?)
        } else {
            None
        };
        let out = adaptive_optimize(&mut table, &backend, &objective, &params, dataset.as_ref(), &mut rng)?;
        if let Some(p) = &table_path {
            table.save(p)?;
        }
        log.event(
            "adaptive",
            json!({ "path": out.path, "sa_runs": out.sa_runs, "inserted": out.inserted, "slnr": out.slnr }),
        );
        (out.w, out.slnr)
    };
    let exact =
        if backend.is_surrogate() { evaluate_slnr(&Backend::exact(&sim), &w, &objective).ok() } else { Some(slnr) };
    let doc = json!({
        "amplitudes": w,
        "slnr_db": slnr,
        "exact_slnr_db": exact,
        "beams": a.beams,
        "nulls": a.nulls,
        "backend": backend.fingerprint(),
    });
    write_text(&a.out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
    log.event("result", json!({ "slnr": slnr, "exact_slnr": exact, "out": a.out }));
    Ok(())
}

/// Amplitude file: a JSON array, or an object with an `amplitudes` array and
/// optional `beams` / `nulls`.
pub struct WeightsFile {
    pub amplitudes: Vec<f64>,
    pub beams: Vec<f64>,
    pub nulls: Vec<f64>,
}

pub fn read_weights(path: &Path) -> Result<WeightsFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let bad = |reason: &str| Error::format(path, reason);
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let numbers = |v: Option<&Value>| -> Result<Vec<f64>> {
        match v {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(items)) => {
                items.iter().map(|x| x.as_f64().ok_or_else(|| bad("expected numbers"))).collect()
            }
            Some(_) => Err(bad("expected an array of numbers")),
        }
    };
    match &v {
        Value::Array(_) => Ok(WeightsFile { amplitudes: numbers(Some(&v))?, beams: Vec::new(), nulls: Vec::new() }),
        Value::Object(o) => Ok(WeightsFile {
            amplitudes: numbers(Some(o.get("amplitudes").ok_or_else(|| bad("missing `amplitudes`"))?))?,
            beams: numbers(o.get("beams"))?,
            nulls: numbers(o.get("nulls"))?,
        }),
        _ => Err(bad("expected an array or an object")),
    }
}

fn eval(cfg: &RunConfig, a: EvalArgs, log: &Log) -> Result<()> {
    let sim = Simulator::new(cfg.physics()?)?;
    let wf = read_weights(&a.weights)?;
    let pattern = sim.radiation_pattern(&wf.amplitudes)?;
    let angles = sim.grid().angles();
    let beams = if a.beams.is_empty() { wf.beams } else { a.beams };
    let nulls = if a.nulls.is_empty() { wf.nulls } else { a.nulls };
    if let Some(path) = &a.csv {
        write_text(path, &pattern_csv(&angles, &pattern))?;
    }
    if let Some(path) = &a.svg {
        let title = format!("radiation pattern of {}", a.weights.display());
        write_text(path, &pattern_svg(&angles, &pattern, &beams, &nulls, &title)?)?;
    }
    let peak = (0..pattern.len()).fold(0, |b, k| if pattern[k] > pattern[b] { k } else { b });
    let slnr = if beams.is_empty() {
        None
    } else {
        let obj = Objective::new(beams, nulls, sim.config().channel.noise_variance);
        Some(evaluate_slnr(&Backend::exact(&sim), &wf.amplitudes, &obj)?)
    };
    log.event("eval", json!({ "peak_deg": angles[peak], "peak_db": pattern[peak], "slnr": slnr }));
    Ok(())
}

fn simulate(cfg: &RunConfig, a: SimulateArgs) -> Result<()> {
    let sim = Simulator::new(cfg.physics()?)?;
    let wf = read_weights(&a.weights)?;
    let csv = pattern_csv(&sim.grid().angles(), &sim.radiation_pattern(&wf.amplitudes)?);
    match a.csv {
        Some(path) => write_text(&path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
