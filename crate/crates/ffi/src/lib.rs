//! C interface to the `deturck` library.
//!
//! A simulation is created from the same `key=value` text the command line
//! tool reads and is driven step by step through an opaque handle. Every
//! function returns a [`DtStatus`] code; after a failure the message is
//! available from [`dt_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use deturck::io::runner::build_simulation;
use deturck::io::vtk::{write_mesh, PointData};
use deturck::io::RunConfig;
use deturck::problems::{RunOutcome, Simulation};
use deturck::Error;

/// Status codes returned by every function.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    /// The mesh degenerated; the handle stays valid but further steps fail.
    Degenerated = 4,
    Numerical = 5,
    Io = 6,
    BufferTooSmall = 7,
    InvalidMesh = 8,
    Panic = 9,
}

/// Opaque simulation handle.
pub struct DtSimulation {
    sim: Simulation,
    degenerated: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

fn status_of(err: &Error) -> DtStatus {
    match err {
        Error::Config(_) | Error::Parse { .. } => DtStatus::Config,
        Error::Io { .. } => DtStatus::Io,
        Error::Degenerated { .. } | Error::DegenerateTriangle { .. } | Error::SingularParametrization { .. } => {
            DtStatus::Degenerated
        }
        Error::NotConverged { .. } | Error::NonPositiveDiagonal { .. } | Error::VertexAtSink { .. } => {
            DtStatus::Numerical
        }
        _ => DtStatus::InvalidMesh,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (DtStatus, String)>) -> DtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DtStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DtStatus::Panic
        }
    }
}

fn fail(err: Error) -> (DtStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (DtStatus, String) {
    (DtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DtStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DtStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(p: *const DtSimulation) -> Result<&'a DtSimulation, (DtStatus, String)> {
    p.as_ref().ok_or_else(|| null("simulation"))
}

unsafe fn handle_mut<'a>(p: *mut DtSimulation) -> Result<&'a mut DtSimulation, (DtStatus, String)> {
    p.as_mut().ok_or_else(|| null("simulation"))
}

/// Creates a simulation from configuration text. On success `*out` owns
/// the handle, to be released with [`dt_simulation_free`].
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_new(config: *const c_char, out: *mut *mut DtSimulation) -> DtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = text(config, "config")?;
        let config = RunConfig::parse(text, Path::new("<config>")).map_err(fail)?;
        let sim = build_simulation(&config).map_err(fail)?;
        *out = Box::into_raw(Box::new(DtSimulation {
            sim,
            degenerated: false,
        }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from [`dt_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_free(sim: *mut DtSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances one time step, adapting the mesh when an adaptation is due.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_step(sim: *mut DtSimulation) -> DtStatus {
    guard(|| {
        let h = handle_mut(sim)?;
        if h.degenerated {
            return Err((DtStatus::Degenerated, "simulation has degenerated".into()));
        }
        match h.sim.step() {
            Ok(_) => Ok(()),
            Err(e) => {
                let status = status_of(&e);
                h.degenerated = status == DtStatus::Degenerated;
                Err((status, e.to_string()))
            }
        }
    })
}

/// Steps until `t_end`. Returns [`DtStatus::Degenerated`] when the mesh
/// degenerates first; the time reached is then available from
/// [`dt_simulation_time`].
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_run(sim: *mut DtSimulation, t_end: f64) -> DtStatus {
    guard(|| {
        let h = handle_mut(sim)?;
        if h.degenerated {
            return Err((DtStatus::Degenerated, "simulation has degenerated".into()));
        }
        match h.sim.run(t_end, |_, _| Ok(())).map_err(fail)? {
            RunOutcome::Completed => Ok(()),
            RunOutcome::Degenerated { time, reason } => {
                h.degenerated = true;
                Err((
                    DtStatus::Degenerated,
                    format!("mesh degenerated at t = {time:e}: {reason}"),
                ))
            }
        }
    })
}

/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_time(sim: *const DtSimulation, out: *mut f64) -> DtStatus {
    guard(|| {
        let h = handle(sim)?;
        *out.as_mut().ok_or_else(|| null("out"))? = h.sim.state.time;
        Ok(())
    })
}

/// Largest triangle quality `h/ρ` of the current mesh.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_sigma_max(sim: *const DtSimulation, out: *mut f64) -> DtStatus {
    guard(|| {
        let h = handle(sim)?;
        let s = h.sim.state.mesh.sigma_max().map_err(fail)?;
        *out.as_mut().ok_or_else(|| null("out"))? = s;
        Ok(())
    })
}

/// Number of vertices and triangles of the current mesh.
///
/// # Safety
/// `sim` must be a live handle; either output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_counts(
    sim: *const DtSimulation,
    vertices: *mut usize,
    triangles: *mut usize,
) -> DtStatus {
    guard(|| {
        let h = handle(sim)?;
        if let Some(v) = vertices.as_mut() {
            *v = h.sim.state.mesh.vertex_count();
        }
        if let Some(t) = triangles.as_mut() {
            *t = h.sim.state.mesh.triangle_count();
        }
        Ok(())
    })
}

/// Copies vertex coordinates as `x0 y0 z0 x1 …` into `buf`, which must
/// hold at least three values per vertex.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_copy_vertices(sim: *const DtSimulation, buf: *mut f64, len: usize) -> DtStatus {
    guard(|| {
        let h = handle(sim)?;
        let mesh = &h.sim.state.mesh;
        let need = 3 * mesh.vertex_count();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < need {
            return Err((DtStatus::BufferTooSmall, format!("need {need} values, got {len}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for (chunk, p) in out.chunks_exact_mut(3).zip(mesh.vertices()) {
            chunk.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// Copies counter-clockwise vertex indices, three per triangle.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_copy_triangles(sim: *const DtSimulation, buf: *mut u64, len: usize) -> DtStatus {
    guard(|| {
        let h = handle(sim)?;
        let mesh = &h.sim.state.mesh;
        let need = 3 * mesh.triangle_count();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < need {
            return Err((DtStatus::BufferTooSmall, format!("need {need} values, got {len}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for (chunk, t) in out.chunks_exact_mut(3).zip(mesh.triangles()) {
            for (o, &v) in chunk.iter_mut().zip(t) {
                *o = v as u64;
            }
        }
        Ok(())
    })
}

/// Writes the current mesh as a legacy VTK file.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dt_simulation_write_vtk(sim: *const DtSimulation, path: *const c_char) -> DtStatus {
    guard(|| {
        let h = handle(sim)?;
        let path = text(path, "path")?;
        let st = &h.sim.state;
        let fields = [PointData::Vector("reference", st.ymap.points())];
        write_mesh(Path::new(path), &st.mesh, &format!("time {:e}", st.time), &fields).map_err(fail)
    })
}

/// Copies the last error message of this thread into `buf` with a
/// terminating NUL, truncating if needed. Returns the full message length
/// in bytes, without the NUL.
///
/// # Safety
/// `buf` must be valid for `len` writes, or null with `len` zero.
#[no_mangle]
pub unsafe extern "C" fn dt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

#[cfg(test)]
mod tests {
    use std::ffi::CString;

    use super::*;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { dt_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
        assert_eq!(s.len(), n.min(255));
        s
    }

    fn create(config: &str) -> Result<*mut DtSimulation, DtStatus> {
        let c = CString::new(config).unwrap();
        let mut sim = ptr::null_mut();
        match unsafe { dt_simulation_new(c.as_ptr(), &mut sim) } {
            DtStatus::Ok => Ok(sim),
            s => {
                assert!(sim.is_null());
                Err(s)
            }
        }
    }

    #[test]
    fn lifecycle() {
        let sim = create("example=ex21 level=2").unwrap();
        let (mut nv, mut nt) = (0usize, 0usize);
        unsafe {
            assert_eq!(dt_simulation_counts(sim, &mut nv, &mut nt), DtStatus::Ok);
            assert_eq!(dt_simulation_step(sim), DtStatus::Ok);
            assert_eq!(dt_simulation_run(sim, 0.01), DtStatus::Ok);
            let mut t = 0.0;
            assert_eq!(dt_simulation_time(sim, &mut t), DtStatus::Ok);
            assert!(t >= 0.01);
            let mut s = 0.0;
            assert_eq!(dt_simulation_sigma_max(sim, &mut s), DtStatus::Ok);
            assert!(s.is_finite() && s >= 2.0 / 3f64.sqrt());
            assert_eq!(dt_simulation_counts(sim, &mut nv, &mut nt), DtStatus::Ok);
            let mut xyz = vec![0.0; 3 * nv];
            assert_eq!(
                dt_simulation_copy_vertices(sim, xyz.as_mut_ptr(), xyz.len()),
                DtStatus::Ok
            );
            assert!(xyz.iter().all(|x| x.is_finite()));
            let mut tri = vec![0u64; 3 * nt];
            assert_eq!(
                dt_simulation_copy_triangles(sim, tri.as_mut_ptr(), tri.len()),
                DtStatus::Ok
            );
            assert!(tri.iter().all(|&v| (v as usize) < nv));
            assert_eq!(
                dt_simulation_copy_vertices(sim, xyz.as_mut_ptr(), 2),
                DtStatus::BufferTooSmall
            );
            assert!(last_error().contains("need"));
            dt_simulation_free(sim);
        }
    }

    #[test]
    fn config_errors_are_reported() {
        assert_eq!(create("example=ex1 alpha=0").unwrap_err(), DtStatus::Config);
        assert!(last_error().contains("alpha"));
        assert_eq!(create("level=3").unwrap_err(), DtStatus::Config);
        assert!(last_error().contains("ex5-ale"));
        let bad = [0xffu8 as c_char, 0];
        let mut sim = ptr::null_mut();
        assert_eq!(
            unsafe { dt_simulation_new(bad.as_ptr(), &mut sim) },
            DtStatus::InvalidUtf8
        );
    }

    #[test]
    fn null_pointers_are_rejected() {
        let mut t = 0.0;
        unsafe {
            assert_eq!(dt_simulation_step(ptr::null_mut()), DtStatus::NullPointer);
            assert_eq!(dt_simulation_time(ptr::null(), &mut t), DtStatus::NullPointer);
            assert_eq!(dt_simulation_new(ptr::null(), ptr::null_mut()), DtStatus::NullPointer);
            dt_simulation_free(ptr::null_mut());
            assert!(dt_last_error_message(ptr::null_mut(), 0) > 0);
        }
    }

    #[test]
    fn writes_vtk() {
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.vtk").to_str().unwrap()).unwrap();
        let sim = create("example=ex1 level=1").unwrap();
        unsafe {
            assert_eq!(dt_simulation_write_vtk(sim, path.as_ptr()), DtStatus::Ok);
            dt_simulation_free(sim);
        }
        let text = std::fs::read_to_string(dir.path().join("m.vtk")).unwrap();
        assert!(text.contains("VECTORS reference double"));
    }

    #[test]
    fn header_declares_the_interface() {
        let header = include_str!("../include/deturck.h");
        for name in [
            "dt_simulation_new",
            "dt_simulation_free",
            "dt_simulation_step",
            "dt_simulation_run",
            "dt_last_error_message",
            "typedef struct DtSimulation DtSimulation",
        ] {
            assert!(header.contains(name), "{name}");
        }
    }
}
