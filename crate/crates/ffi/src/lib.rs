//! C ABI over the `hybrid_ib` engine.
//!
//! Every fallible call returns a [`HibStatus`]; on failure the message is
//! available from [`hib_last_error`] on the same thread until the next call.
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Grid fields cross the boundary as `3 · nx · ny · nz` doubles, component
//! major (all `x`, then all `y`, then all `z`), each component in
//! `(i · ny + j) · nz + k` order. Marker positions are `3 · n` doubles, `xyz`
//! per marker.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hybrid_ib::config::parse_config;
use hybrid_ib::drag;
use hybrid_ib::error::Error;
use hybrid_ib::experiments::run_experiment;
use hybrid_ib::fiber::Fiber;
use hybrid_ib::grid::{Grid, VectorField};
use hybrid_ib::interaction::Vec3;
use hybrid_ib::output::{summary_json, write_report};
use hybrid_ib::spectral::StokesSolver;
use hybrid_ib::stepper::{Coupling, Scheme, SchemeConfig, Simulation};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HibStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    /// The library panicked; the handle involved should not be reused.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HibScheme {
    Explicit = 0,
    ImplicitBending = 1,
    ImplicitBendingTension = 2,
}

impl From<HibScheme> for Scheme {
    fn from(s: HibScheme) -> Self {
        match s {
            HibScheme::Explicit => Scheme::Explicit,
            HibScheme::ImplicitBending => Scheme::ImplicitBending,
            HibScheme::ImplicitBendingTension => Scheme::ImplicitBendingTension,
        }
    }
}

/// Periodic Stokes solver on a fixed grid.
pub struct HibStokesSolver {
    solver: StokesSolver,
}

/// Fibers on a grid. Fibers may be added until the first step.
pub struct HibSimulation {
    grid: Grid,
    config: SchemeConfig,
    coupling: Coupling,
    pending: Vec<Fiber>,
    sim: Option<Simulation>,
}

impl HibSimulation {
    fn fibers(&self) -> &[Fiber] {
        match &self.sim {
            Some(s) => &s.state.fibers,
            None => &self.pending,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> HibStatus {
    match e {
        Error::Io(_) | Error::Csv(_) => HibStatus::Io,
        e if e.is_numerical() => HibStatus::Numerical,
        _ => HibStatus::InvalidArgument,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (HibStatus, String)>) -> HibStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HibStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HibStatus::Internal
        }
    }
}

fn engine(e: Error) -> (HibStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HibStatus, String) {
    (HibStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (HibStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (HibStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (HibStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], (HibStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(actual: usize, expected: usize, what: &str) -> Result<(), (HibStatus, String)> {
    if actual != expected {
        return Err((
            HibStatus::InvalidArgument,
            format!("{what} has {actual} entries, expected {expected}"),
        ));
    }
    Ok(())
}

/// Message describing the most recent failure on this thread, or an empty
/// string. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn hib_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hib_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Correction radius `R_c` for hydrodynamic radius `rh` and physical radius `r`.
///
/// # Safety
/// `out` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn hib_correction_radius(rh: f64, r: f64, out: *mut f64) -> HibStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = drag::correction_radius(rh, r).map_err(engine)?;
        Ok(())
    })
}

/// Drag coefficient `ξ = 1/(6πμR_c)`.
#[no_mangle]
pub extern "C" fn hib_drag_coefficient(rc: f64, mu: f64) -> f64 {
    drag::xi(rc, mu)
}

/// # Safety
/// `out` must be null or point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn hib_stokes_solver_new(
    nx: usize,
    ny: usize,
    nz: usize,
    h: f64,
    mu: f64,
    out: *mut *mut HibStokesSolver,
) -> HibStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let grid = Grid::new(nx, ny, nz, h, mu).map_err(engine)?;
        *out = Box::into_raw(Box::new(HibStokesSolver {
            solver: StokesSolver::new(&grid),
        }));
        Ok(())
    })
}

/// # Safety
/// `solver` must be null or a handle from [`hib_stokes_solver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hib_stokes_solver_free(solver: *mut HibStokesSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Velocity for the force density `force`; both arrays have `len = 3 · nx · ny · nz` entries.
///
/// # Safety
/// `solver` must be a live handle; `force` and `velocity` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hib_stokes_solve(
    solver: *const HibStokesSolver,
    force: *const f64,
    velocity: *mut f64,
    len: usize,
) -> HibStatus {
    guard(|| {
        let solver = solver.as_ref().ok_or_else(|| null("solver"))?;
        let grid = *solver.solver.grid();
        let n = grid.len();
        check_len(len, 3 * n, "force")?;
        let f = slice(force, len, "force")?;
        let out = slice_mut(velocity, len, "velocity")?;
        let field = VectorField::from_components(
            &grid,
            [f[..n].to_vec(), f[n..2 * n].to_vec(), f[2 * n..].to_vec()],
        )
        .map_err(engine)?;
        let u = solver.solver.solve(&field).map_err(engine)?;
        for idx in 0..n {
            let v = u.at(idx);
            out[idx] = v[0];
            out[n + idx] = v[1];
            out[2 * n + idx] = v[2];
        }
        Ok(())
    })
}

/// New simulation on an `nx × ny × nz` grid centred on the origin. With
/// `coupled = 0` markers ignore the grid and move by drag and shear only.
///
/// # Safety
/// `out` must be null or point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_new(
    nx: usize,
    ny: usize,
    nz: usize,
    h: f64,
    mu: f64,
    scheme: HibScheme,
    dt: f64,
    shear_rate: f64,
    coupled: i32,
    out: *mut *mut HibSimulation,
) -> HibStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let grid = Grid::new(nx, ny, nz, h, mu).map_err(engine)?;
        let config = SchemeConfig::new(scheme.into(), dt).with_shear(shear_rate);
        config.validate().map_err(engine)?;
        *out = Box::into_raw(Box::new(HibSimulation {
            grid,
            config,
            coupling: if coupled != 0 { Coupling::Grid } else { Coupling::None },
            pending: Vec::new(),
            sim: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from [`hib_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_free(sim: *mut HibSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Add a fiber of `markers` markers (`positions` holds `3 · markers` doubles)
/// with uniform drag coefficient `xi`. Only allowed before the first step.
///
/// # Safety
/// `sim` must be a live handle and `positions` must hold `3 · markers` doubles.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_add_fiber(
    sim: *mut HibSimulation,
    positions: *const f64,
    markers: usize,
    ds: f64,
    ks: f64,
    kb: f64,
    xi: f64,
) -> HibStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("sim"))?;
        if sim.sim.is_some() {
            return Err((HibStatus::InvalidArgument, "fibers cannot be added after stepping".into()));
        }
        let x = slice(positions, 3 * markers, "positions")?;
        let pts = x.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let fiber = Fiber::with_uniform_xi(pts, ds, ks, kb, xi).map_err(engine)?;
        sim.pending.push(fiber);
        Ok(())
    })
}

/// Advance `steps` timesteps. On a numerical failure the state stays at the
/// last completed step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_step(sim: *mut HibSimulation, steps: u64) -> HibStatus {
    guard(|| {
        let h = sim.as_mut().ok_or_else(|| null("sim"))?;
        if h.sim.is_none() {
            let fibers = std::mem::take(&mut h.pending);
            h.sim = Some(Simulation::new(h.grid, fibers, h.config, h.coupling).map_err(engine)?);
        }
        let s = h.sim.as_mut().expect("initialized above");
        for _ in 0..steps {
            s.step().map_err(engine)?;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle; `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_time(sim: *const HibSimulation, out: *mut f64) -> HibStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sim.sim.as_ref().map_or(0.0, |s| s.state.time);
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle; `out` must point to a writable size.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_fiber_count(sim: *const HibSimulation, out: *mut usize) -> HibStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sim.fibers().len();
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle; `out` must point to a writable size.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_marker_count(
    sim: *const HibSimulation,
    fiber: usize,
    out: *mut usize,
) -> HibStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let f = sim
            .fibers()
            .get(fiber)
            .ok_or_else(|| (HibStatus::InvalidArgument, format!("no fiber {fiber}")))?;
        *out = f.len();
        Ok(())
    })
}

/// Copy the marker positions of `fiber` into `out` (`len = 3 · markers`).
///
/// # Safety
/// `sim` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hib_simulation_positions(
    sim: *const HibSimulation,
    fiber: usize,
    out: *mut f64,
    len: usize,
) -> HibStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let f = sim
            .fibers()
            .get(fiber)
            .ok_or_else(|| (HibStatus::InvalidArgument, format!("no fiber {fiber}")))?;
        check_len(len, 3 * f.len(), "out")?;
        let out = slice_mut(out, len, "out")?;
        for (dst, p) in out.chunks_exact_mut(3).zip(&f.positions) {
            dst.copy_from_slice(&[p.x, p.y, p.z]);
        }
        Ok(())
    })
}

/// Run the experiment described by a JSON configuration document. When
/// `summary` is non-null it receives the summary JSON, to be released with
/// [`hib_string_free`]. When `output_dir` is non-null the CSV and JSON
/// artifacts are written there as well.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `output_dir` null or one;
/// `summary` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hib_run_experiment(
    config_json: *const c_char,
    output_dir: *const c_char,
    summary: *mut *mut c_char,
) -> HibStatus {
    guard(|| {
        if !summary.is_null() {
            *summary = ptr::null_mut();
        }
        let text = read_str(config_json, "config_json")?;
        let config = parse_config(text).map_err(engine)?;
        let report = run_experiment(&config).map_err(engine)?;
        if !output_dir.is_null() {
            let dir = read_str(output_dir, "output_dir")?;
            write_report(Path::new(dir), &report, Some(&config.to_canonical_json())).map_err(engine)?;
        }
        if !summary.is_null() {
            let s = CString::new(summary_json(&report)).map_err(|e| (HibStatus::Internal, e.to_string()))?;
            *summary = s.into_raw();
        }
        if report.flags.get("stable") == Some(&false) {
            let why = report.labels.get("failure").cloned().unwrap_or_else(|| "unstable run".into());
            return Err((HibStatus::Numerical, why));
        }
        Ok(())
    })
}

/// Release a string returned by the library.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hib_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
