//! C interface to the simulator, the network surrogate, the lookup table and
//! the annealing optimizer.
//!
//! Every function returns a [`RisStatus`]. On failure a description is kept per
//! thread and can be read with [`ris_last_error`]. Handles are opaque and must be
//! released with their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_core::config::RunConfig;
use ris_core::dataset::load_dataset_checked;
use ris_core::nn::{load_model_checked, Surrogate};
use ris_core::optimize::{adaptive_optimize, evaluate_slnr, sa_optimize, Backend, LookupTable, Objective, SaParams};
use ris_core::physics::{PhysicsConfig, Simulator};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    NotFound = 4,
    Domain = 5,
    RejectedConfiguration = 6,
    DegenerateDataset = 7,
    Config = 8,
    Format = 9,
    Fingerprint = 10,
    GenerationAborted = 11,
    NonFiniteLoss = 12,
    Io = 13,
    Panic = 14,
}

/// Exact simulator built from a physics configuration.
pub struct RisSimulator {
    sim: Simulator,
}

/// Trained network loaded from a model file.
pub struct RisSurrogate {
    model: Surrogate,
}

/// In-memory lookup table of optimized amplitude vectors.
pub struct RisLookupTable {
    table: LookupTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RisStatus, String);

impl From<ris_core::Error> for Failure {
    fn from(e: ris_core::Error) -> Self {
        use ris_core::Error as E;
        let status = match &e {
            E::Domain(_) => RisStatus::Domain,
            E::RejectedConfiguration(_) => RisStatus::RejectedConfiguration,
            E::DegenerateDataset(_) => RisStatus::DegenerateDataset,
            E::Config(_) => RisStatus::Config,
            E::Format { .. } => RisStatus::Format,
            E::Fingerprint { .. } => RisStatus::Fingerprint,
            E::GenerationAborted(_) => RisStatus::GenerationAborted,
            E::NonFiniteLoss { .. } => RisStatus::NonFiniteLoss,
            E::Io { .. } => RisStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Outcome) -> RisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RisStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RisStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(RisStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

/// A null pointer is accepted for an empty slice.
unsafe fn input<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, needed: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    if len < needed {
        return Err(Failure(RisStatus::BufferTooSmall, format!("`{name}` holds {len} values, {needed} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn path(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RisStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn backend<'a>(sim: &'a Simulator, model: Option<&'a Surrogate>) -> Result<Backend<'a>, Failure> {
    Ok(match model {
        Some(m) => Backend::surrogate_in_window(m, sim)?.bounded_to_training_range(),
        None => Backend::exact(sim),
    })
}

/// Description of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ris_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ris_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Simulator with the built-in physics defaults.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_new_default(out: *mut *mut RisSimulator) -> RisStatus {
    guard(|| store(out, RisSimulator { sim: Simulator::new(PhysicsConfig::default())? }))
}

/// Simulator from the `[physics]` section of a TOML run configuration.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` as in
/// [`ris_simulator_new_default`].
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_from_config(
    config_path: *const c_char,
    out: *mut *mut RisSimulator,
) -> RisStatus {
    guard(|| {
        let cfg = RunConfig::load(&path(config_path, "config_path")?)?;
        store(out, RisSimulator { sim: Simulator::new(cfg.physics()?)? })
    })
}

/// # Safety
/// `sim` must come from a `ris_simulator_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_free(sim: *mut RisSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of BSW harmonics, the length of every amplitude vector.
///
/// # Safety
/// `sim` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_harmonics(sim: *const RisSimulator) -> usize {
    sim.as_ref().map_or(0, |s| s.sim.harmonics())
}

/// Number of angles in the sampling grid, the length of every pattern.
///
/// # Safety
/// `sim` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_grid_len(sim: *const RisSimulator) -> usize {
    sim.as_ref().map_or(0, |s| s.sim.grid().count)
}

/// Writes the grid angles in degrees.
///
/// # Safety
/// `angles` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_grid_angles(
    sim: *const RisSimulator,
    angles: *mut f64,
    len: usize,
) -> RisStatus {
    guard(|| {
        let sim = &handle(sim, "sim")?.sim;
        output(angles, len, sim.grid().count, "angles")?.copy_from_slice(&sim.grid().angles());
        Ok(())
    })
}

/// Radiation pattern (dB) of amplitude vector `w` over the grid.
///
/// # Safety
/// `w` must point to `w_len` doubles and `powers_db` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_pattern(
    sim: *const RisSimulator,
    w: *const f64,
    w_len: usize,
    powers_db: *mut f64,
    len: usize,
) -> RisStatus {
    guard(|| {
        let sim = &handle(sim, "sim")?.sim;
        let pattern = sim.radiation_pattern(input(w, w_len, "w")?)?;
        output(powers_db, len, pattern.len(), "powers_db")?.copy_from_slice(&pattern);
        Ok(())
    })
}

/// Exact SLNR (dB) of `w` for the given beam and null directions.
///
/// # Safety
/// Arrays must hold the stated number of doubles; `slnr_db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_simulator_slnr(
    sim: *const RisSimulator,
    w: *const f64,
    w_len: usize,
    beams: *const f64,
    beam_count: usize,
    nulls: *const f64,
    null_count: usize,
    slnr_db: *mut f64,
) -> RisStatus {
    guard(|| {
        let sim = &handle(sim, "sim")?.sim;
        let objective = Objective::new(
            input(beams, beam_count, "beams")?.to_vec(),
            input(nulls, null_count, "nulls")?.to_vec(),
            sim.config().channel.noise_variance,
        );
        let value = evaluate_slnr(&Backend::exact(sim), input(w, w_len, "w")?, &objective)?;
        *handle_mut(slnr_db, "slnr_db")? = value;
        Ok(())
    })
}

/// Loads a model file; its fingerprint must match the simulator's physics.
///
/// # Safety
/// `model_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_surrogate_load(
    sim: *const RisSimulator,
    model_path: *const c_char,
    out: *mut *mut RisSurrogate,
) -> RisStatus {
    guard(|| {
        let sim = &handle(sim, "sim")?.sim;
        let model = load_model_checked(&path(model_path, "model_path")?, sim.fingerprint())?;
        store(out, RisSurrogate { model })
    })
}

/// # Safety
/// `model` must come from [`ris_surrogate_load`], or be null.
#[no_mangle]
pub unsafe extern "C" fn ris_surrogate_free(model: *mut RisSurrogate) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicted pattern (dB) of `w`.
///
/// # Safety
/// `w` must point to `w_len` doubles and `powers_db` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ris_surrogate_predict(
    model: *const RisSurrogate,
    w: *const f64,
    w_len: usize,
    powers_db: *mut f64,
    len: usize,
) -> RisStatus {
    guard(|| {
        let model = &handle(model, "model")?.model;
        let pattern = model.predict_db(input(w, w_len, "w")?)?;
        output(powers_db, len, pattern.len(), "powers_db")?.copy_from_slice(&pattern);
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_table_new(out: *mut *mut RisLookupTable) -> RisStatus {
    guard(|| store(out, RisLookupTable { table: LookupTable::new() }))
}

/// Loads a table file. Malformed lines are skipped.
///
/// # Safety
/// `table_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_table_load(table_path: *const c_char, out: *mut *mut RisLookupTable) -> RisStatus {
    guard(|| {
        let (table, _) = LookupTable::load(&path(table_path, "table_path")?, None)?;
        store(out, RisLookupTable { table })
    })
}

/// # Safety
/// `table_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ris_table_save(table: *const RisLookupTable, table_path: *const c_char) -> RisStatus {
    guard(|| Ok(handle(table, "table")?.table.save(&path(table_path, "table_path")?)?))
}

/// # Safety
/// `table` must come from a `ris_table_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn ris_table_free(table: *mut RisLookupTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ris_table_len(table: *const RisLookupTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.len())
}

/// Exact lookup for the backend selected by `model` (null for the exact
/// simulator). Returns `RIS_STATUS_NOT_FOUND` when there is no entry.
///
/// # Safety
/// Arrays must hold the stated number of doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_table_lookup(
    table: *const RisLookupTable,
    sim: *const RisSimulator,
    model: *const RisSurrogate,
    beams: *const f64,
    beam_count: usize,
    nulls: *const f64,
    null_count: usize,
    w_out: *mut f64,
    w_len: usize,
    slnr_db: *mut f64,
) -> RisStatus {
    guard(|| {
        let table = &handle(table, "table")?.table;
        let sim = &handle(sim, "sim")?.sim;
        let backend = backend(sim, model.as_ref().map(|m| &m.model))?;
        let entry = table
            .exact(input(beams, beam_count, "beams")?, input(nulls, null_count, "nulls")?, backend.fingerprint())
            .ok_or_else(|| Failure(RisStatus::NotFound, "no table entry for these directions".into()))?;
        output(w_out, w_len, entry.w.len(), "w_out")?.copy_from_slice(&entry.w);
        *handle_mut(slnr_db, "slnr_db")? = entry.slnr_db;
        Ok(())
    })
}

/// Optimizes amplitudes for the given directions.
///
/// `model` selects the network backend; null uses the exact simulator. With a
/// null `table` this is one annealing run from zero amplitudes. Otherwise the
/// table is consulted and extended in place, and cold starts read the dataset
/// at `dataset_path` (may be null when the table already holds a usable entry).
/// `max_iter` of 0 keeps the default iteration budget. `slnr_db` receives the
/// backend's own SLNR.
///
/// # Safety
/// Arrays must hold the stated number of doubles; strings must be
/// NUL-terminated; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ris_optimize(
    sim: *const RisSimulator,
    model: *const RisSurrogate,
    table: *mut RisLookupTable,
    dataset_path: *const c_char,
    beams: *const f64,
    beam_count: usize,
    nulls: *const f64,
    null_count: usize,
    seed: u64,
    max_iter: usize,
    w_out: *mut f64,
    w_len: usize,
    slnr_db: *mut f64,
) -> RisStatus {
    guard(|| {
        let sim = &handle(sim, "sim")?.sim;
        let backend = backend(sim, model.as_ref().map(|m| &m.model))?;
        let objective = Objective::new(
            input(beams, beam_count, "beams")?.to_vec(),
            input(nulls, null_count, "nulls")?.to_vec(),
            sim.config().channel.noise_variance,
        );
        let params = match max_iter {
            0 => SaParams::default(),
            n => SaParams::default().with_max_iter(n),
        };
        let w_out = output(w_out, w_len, sim.harmonics(), "w_out")?;
        let slnr_db = handle_mut(slnr_db, "slnr_db")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, slnr) = match table.as_mut() {
            None => {
                let out = sa_optimize(&backend, &objective, &params, None, &mut rng)?;
                (out.w, out.slnr)
            }
            Some(t) => {
                let dataset = match dataset_path.is_null() {
                    true => None,
                    false => Some(load_dataset_checked(&path(dataset_path, "dataset_path")?, sim.fingerprint())?),
                };
                let out = adaptive_optimize(&mut t.table, &backend, &objective, &params, dataset.as_ref(), &mut rng)?;
                (out.w, out.slnr)
            }
        };
        w_out.copy_from_slice(&w);
        *slnr_db = slnr;
        Ok(())
    })
}
