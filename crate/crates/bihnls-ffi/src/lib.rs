//! C ABI for the bihnls simulator.
//!
//! Every fallible call returns a [`BihnlsStatus`]; on failure the message is
//! kept per thread and read with [`bihnls_last_error`]. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use bihnls::geometry::Grid;
use bihnls::groundstate::{solve_ground_state, GroundStateOptions};
use bihnls::harness::{self, SimConfig};
use bihnls::solver::{continue_evolution, Checkpoint, Physics, Silent, SimState, Status};
use bihnls::Error;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BihnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    UnknownPreset = 4,
    Grid = 5,
    GroundState = 6,
    Checkpoint = 7,
    Io = 8,
    Numerical = 9,
    Panic = 10,
}

/// State of a simulation handle.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BihnlsRunState {
    Running = 0,
    BlowupDetected = 1,
    Completed = 2,
    Failed = 3,
}

impl From<Status> for BihnlsRunState {
    fn from(s: Status) -> Self {
        match s {
            Status::Running => BihnlsRunState::Running,
            Status::BlowupDetected => BihnlsRunState::BlowupDetected,
            Status::Completed => BihnlsRunState::Completed,
            Status::Failed => BihnlsRunState::Failed,
        }
    }
}

/// Conserved and monitored functionals at one time.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BihnlsFunctionals {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub lap_sq: f64,
    pub pot: f64,
}

/// Summary of a scenario run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BihnlsRunSummary {
    pub state: BihnlsRunState,
    pub blowup_detected: bool,
    pub steps: u64,
    pub final_time: f64,
    pub growth_ratio: f64,
    pub max_mass_drift: f64,
    pub max_energy_drift: f64,
    /// Interior violations of the virial rate inequality, summed over radii.
    pub virial_violations: u64,
}

/// Summary of a ground-state solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BihnlsGroundState {
    pub iterations: u64,
    pub residual: f64,
    pub mass_q: f64,
    pub lap_q_sq: f64,
    pub energy_q: f64,
    pub pohozaev_rel_err: f64,
}

/// Opaque run configuration.
pub struct BihnlsConfig {
    inner: SimConfig,
}

/// Opaque simulation: a field on its grid with the stepping state.
pub struct BihnlsSim {
    config: SimConfig,
    grid: Arc<Grid>,
    state: SimState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn code_of(e: &Error) -> BihnlsStatus {
    match e {
        Error::Config { .. } | Error::Json(_) => BihnlsStatus::Config,
        Error::UnknownPreset { .. } => BihnlsStatus::UnknownPreset,
        Error::InvalidGrid(_) | Error::GridMismatch(_) | Error::Cutoff(_) => BihnlsStatus::Grid,
        Error::GroundStateNoConvergence { .. } | Error::TrivialAttractor | Error::ThresholdRange(_) => {
            BihnlsStatus::GroundState
        }
        Error::CheckpointMagic { .. }
        | Error::CheckpointVersion { .. }
        | Error::CheckpointTruncated { .. }
        | Error::CheckpointChecksum { .. } => BihnlsStatus::Checkpoint,
        Error::Io { .. } => BihnlsStatus::Io,
        _ => BihnlsStatus::Numerical,
    }
}

/// Run `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (BihnlsStatus, String)>) -> BihnlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BihnlsStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            BihnlsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (BihnlsStatus, String) {
    (code_of(&e), e.to_string())
}

fn null(what: &str) -> (BihnlsStatus, String) {
    (BihnlsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BihnlsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BihnlsStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bihnls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one, or 0 when
/// there is no message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bihnls_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bihnls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build the named preset.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_config_from_preset(name: *const c_char, out: *mut *mut BihnlsConfig) -> BihnlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = harness::preset(str_arg(name, "name")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(BihnlsConfig { inner: cfg }));
        Ok(())
    })
}

/// Parse and validate a JSON config.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_config_from_json(json: *const c_char, out: *mut *mut BihnlsConfig) -> BihnlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = SimConfig::from_json(str_arg(json, "json")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(BihnlsConfig { inner: cfg }));
        Ok(())
    })
}

/// The config as pretty JSON; free with [`bihnls_string_free`].
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_config_to_json(cfg: *const BihnlsConfig, out: *mut *mut c_char) -> BihnlsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(cfg.inner.to_json()).map_err(|e| (BihnlsStatus::Config, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Override the seed of randomized diagnostics.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn bihnls_config_set_seed(cfg: *mut BihnlsConfig, seed: u64) -> BihnlsStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        cfg.inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bihnls_config_free(cfg: *mut BihnlsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Create a simulation at t = 0 from the config's initial datum.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_new(cfg: *const BihnlsConfig, out: *mut *mut BihnlsSim) -> BihnlsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = cfg.inner.clone();
        config.validate().map_err(lib)?;
        let grid = config.grid().map_err(lib)?;
        let u0 = config.initial_field(&grid).map_err(lib)?;
        let state = SimState::new(u0, &config.physics(), config.dt0);
        *out = Box::into_raw(Box::new(BihnlsSim { config, grid, state }));
        Ok(())
    })
}

/// Restore a simulation from a checkpoint written by this library; the
/// config supplies the stepping parameters and must match its physics.
///
/// # Safety
/// `cfg` must be a live config handle, `path` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_from_checkpoint(
    cfg: *const BihnlsConfig,
    path: *const c_char,
    out: *mut *mut BihnlsSim,
) -> BihnlsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ck = Checkpoint::load(Path::new(path)).map_err(lib)?;
        if ck.physics() != cfg.inner.physics() {
            return Err((BihnlsStatus::Config, "checkpoint physics differs from the config".into()));
        }
        let grid = ck.grid().map_err(lib)?;
        let state = ck.into_state(&grid).map_err(lib)?;
        *out = Box::into_raw(Box::new(BihnlsSim {
            config: cfg.inner.clone(),
            grid,
            state,
        }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_free(sim: *mut BihnlsSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance with adaptive steps until `t_target`, blowup detection or failure.
///
/// # Safety
/// `sim` must be a live simulation handle; `state` may be null.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_advance(
    sim: *mut BihnlsSim,
    t_target: f64,
    state: *mut BihnlsRunState,
) -> BihnlsStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("sim"))?;
        match sim.state.status {
            Status::Running | Status::Completed => {}
            s => {
                return Err((
                    BihnlsStatus::InvalidArgument,
                    format!("simulation has stopped ({s:?}) and cannot advance"),
                ))
            }
        }
        if !(t_target.is_finite() && t_target > sim.state.t) {
            return Err((
                BihnlsStatus::InvalidArgument,
                format!("t_target = {t_target} must exceed the current time {}", sim.state.t),
            ));
        }
        let mut step = sim.config.step_config();
        step.t_end = t_target;
        step.field_every = 0;
        let mut current = sim.state.clone();
        current.status = Status::Running;
        let evo = continue_evolution(&step, current, None, &mut Silent).map_err(lib)?;
        sim.state = evo.state;
        if !state.is_null() {
            *state = sim.state.status.into();
        }
        Ok(())
    })
}

/// Functionals of the current field.
///
/// # Safety
/// `sim` must be a live simulation handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_functionals(sim: *const BihnlsSim, out: *mut BihnlsFunctionals) -> BihnlsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let physics: Physics = sim.config.physics();
        let f = physics.functionals(&sim.state.field, sim.state.t);
        *out = BihnlsFunctionals {
            time: f.time,
            mass: f.mass,
            energy: f.energy,
            grad_sq: f.grad_sq,
            lap_sq: f.lap_sq,
            pot: f.pot,
        };
        Ok(())
    })
}

/// Grid sizes; the field has n_r * n_z complex values, r outer and z inner.
///
/// # Safety
/// `sim` must be a live simulation handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_dims(sim: *const BihnlsSim, n_r: *mut usize, n_z: *mut usize) -> BihnlsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if let Some(p) = n_r.as_mut() {
            *p = sim.grid.n_r;
        }
        if let Some(p) = n_z.as_mut() {
            *p = sim.grid.n_z;
        }
        Ok(())
    })
}

/// Copy the field as interleaved (re, im) pairs into `buf` of `len` doubles.
///
/// # Safety
/// `sim` must be a live simulation handle and `buf` must point to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_field(sim: *const BihnlsSim, buf: *mut f64, len: usize) -> BihnlsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = &sim.state.field.values;
        if len < 2 * values.len() {
            return Err((
                BihnlsStatus::InvalidArgument,
                format!("buffer holds {len} doubles, need {}", 2 * values.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * values.len());
        for (pair, v) in out.chunks_exact_mut(2).zip(values) {
            pair[0] = v.re;
            pair[1] = v.im;
        }
        Ok(())
    })
}

/// Current time, accepted steps and state.
///
/// # Safety
/// `sim` must be a live simulation handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_progress(
    sim: *const BihnlsSim,
    t: *mut f64,
    steps: *mut u64,
    state: *mut BihnlsRunState,
) -> BihnlsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if let Some(p) = t.as_mut() {
            *p = sim.state.t;
        }
        if let Some(p) = steps.as_mut() {
            *p = sim.state.step;
        }
        if let Some(p) = state.as_mut() {
            *p = sim.state.status.into();
        }
        Ok(())
    })
}

/// Write a checkpoint of the current state.
///
/// # Safety
/// `sim` must be a live simulation handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bihnls_sim_save_checkpoint(sim: *const BihnlsSim, path: *const c_char) -> BihnlsStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let path = str_arg(path, "path")?;
        Checkpoint::from_state(&sim.state, &sim.config.physics())
            .save(Path::new(path))
            .map_err(lib)
    })
}

/// Run a full scenario, writing artifacts under `out_dir`.
///
/// # Safety
/// `cfg` must be a live config handle, `out_dir` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_run_scenario(
    cfg: *const BihnlsConfig,
    out_dir: *const c_char,
    out: *mut BihnlsRunSummary,
) -> BihnlsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let dir = str_arg(out_dir, "out_dir")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if cfg.inner.mode != harness::Mode::Evolve {
            return Err((BihnlsStatus::Config, "config mode is not evolve".into()));
        }
        let o = harness::run_scenario(&cfg.inner, Path::new(dir), &mut Silent).map_err(lib)?;
        *out = BihnlsRunSummary {
            state: o.status.into(),
            blowup_detected: o.verdict.detected,
            steps: o.state.step,
            final_time: o.state.t,
            growth_ratio: o.verdict.growth_ratio,
            max_mass_drift: o.max_mass_drift,
            max_energy_drift: o.max_energy_drift,
            virial_violations: o.virial.iter().map(|v| v.violations as u64).sum(),
        };
        Ok(())
    })
}

/// Solve for the radial ground state in R^d; `n_r` = 0 and `r_max` ≤ 0
/// select the defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bihnls_ground_state(
    d: u32,
    sigma: f64,
    n_r: usize,
    r_max: f64,
    out: *mut BihnlsGroundState,
) -> BihnlsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mut opts = GroundStateOptions::default();
        if n_r > 0 {
            opts.n_r = n_r;
        }
        if r_max > 0.0 {
            opts.r_max = r_max;
        }
        let q = solve_ground_state(d, sigma, None, &opts).map_err(lib)?;
        *out = BihnlsGroundState {
            iterations: q.iterations as u64,
            residual: q.residual,
            mass_q: q.mass_q,
            lap_q_sq: q.lap_q_sq,
            energy_q: q.energy_q,
            pohozaev_rel_err: q.pohozaev_rel_err,
        };
        Ok(())
    })
}
