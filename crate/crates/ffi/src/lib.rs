//! C interface to `quasispec`.
//!
//! Every fallible function returns a [`QsStatus`]; on failure the message
//! and the stable error name are available from [`qs_last_error_message`]
//! and [`qs_last_error_name`] on the calling thread. Objects cross the
//! boundary as opaque handles owned by the caller and released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use quasispec::cli::{execute, Args};
use quasispec::contfrac::{golden_convergents, RationalApproximant};
use quasispec::interface::{interface_study, InterfaceSettings};
use quasispec::numerics::{SpectrumSample, Window};
use quasispec::potentials::{Laminate, QuasiperiodicProblem};
use quasispec::supercell::{band_diagram, BandDiagram, BandSettings};
use quasispec::superspace::{superspace_spectrum_fd_in, LiftedProblem};
use quasispec::transfermap::trace_sequence;
use quasispec::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Config = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Quasiperiodic problem: kind plus coefficient field.
pub struct QsProblem(QuasiperiodicProblem);

/// Sorted list of eigenvalues.
pub struct QsSpectrum(Vec<f64>);

/// Band diagram of one periodic approximant.
pub struct QsBandDiagram(BandDiagram);

/// Interface modes with fitted and estimated decay rates.
pub struct QsInterfaceModes(Vec<(f64, f64, f64)>);

thread_local! {
    static LAST_ERROR: RefCell<Option<(CString, CString)>> = const { RefCell::new(None) };
}

fn set_error(name: &str, message: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some((clean(name), clean(message))));
}

fn status_of(e: &Error) -> QsStatus {
    match e {
        Error::Config(_) => QsStatus::Config,
        Error::Io(_) => QsStatus::Io,
        Error::InvalidParameter(_)
        | Error::InvalidWindow { .. }
        | Error::GridTooCoarse { .. }
        | Error::MeshTooCoarse { .. }
        | Error::TruncationTooSmall { .. }
        | Error::DimensionZero
        | Error::DimensionMismatch { .. }
        | Error::NonPositiveWeight { .. }
        | Error::NonHermitianCoefficients { .. }
        | Error::UnknownLetter { .. }
        | Error::EmptyImage { .. }
        | Error::EmptyWord
        | Error::NotEnoughElements { .. } => QsStatus::InvalidArgument,
        _ => QsStatus::Numeric,
    }
}

fn guard(f: impl FnOnce() -> Result<(), QsStatus>) -> QsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("Panic", "internal panic");
            QsStatus::Panic
        }
    }
}

fn fail(e: Error) -> QsStatus {
    set_error(e.name(), &e.to_string());
    status_of(&e)
}

fn null() -> QsStatus {
    set_error("NullPointer", "required pointer argument is null");
    QsStatus::NullPointer
}

fn invalid(msg: &str) -> QsStatus {
    set_error("InvalidParameter", msg);
    QsStatus::InvalidArgument
}

fn window(lo: f64, hi: f64) -> Result<Window, QsStatus> {
    Window::new(lo, hi).map_err(fail)
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, QsStatus> {
    p.as_ref().ok_or_else(null)
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), QsStatus> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), QsStatus> {
    if !len.is_null() {
        *len = values.len();
    }
    if values.len() > cap {
        set_error("BufferTooSmall", &format!("need {} slots, have {cap}", values.len()));
        return Err(QsStatus::BufferTooSmall);
    }
    if values.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null());
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn qs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(_, m)| m.as_ptr()))
}

/// Stable error name of the last failure on this thread (for example
/// `"InvalidWindow"`), or null.
#[no_mangle]
pub extern "C" fn qs_last_error_name() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(n, _)| n.as_ptr()))
}

/// First `count` convergents of the golden mean into `p_out` and `q_out`.
///
/// # Safety
/// `p_out` and `q_out` must each hold `count` elements.
#[no_mangle]
pub unsafe extern "C" fn qs_golden_convergents(count: usize, p_out: *mut i64, q_out: *mut i64) -> QsStatus {
    guard(|| {
        if p_out.is_null() || q_out.is_null() {
            return Err(null());
        }
        let c = golden_convergents(count).map_err(fail)?;
        for (k, a) in c.iter().enumerate() {
            *p_out.add(k) = a.p;
            *q_out.add(k) = a.q;
        }
        Ok(())
    })
}

/// `-u'' + (sin 2 pi x + sin 2 pi theta x) u = lambda u`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn qs_problem_sin2d_schrodinger(theta: f64, out: *mut *mut QsProblem) -> QsStatus {
    guard(|| {
        if !theta.is_finite() {
            return Err(invalid("theta must be finite"));
        }
        emit(out, QsProblem(QuasiperiodicProblem::sin2d_schrodinger(theta)))
    })
}

/// `-u'' = lambda (sin 2 pi x + sin 2 pi theta x + 3) u`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn qs_problem_sin2d_generalized(theta: f64, out: *mut *mut QsProblem) -> QsStatus {
    guard(|| {
        if !theta.is_finite() {
            return Err(invalid("theta must be finite"));
        }
        emit(out, QsProblem(QuasiperiodicProblem::sin2d_generalized(theta)))
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_problem_free(problem: *mut QsProblem) {
    free_handle(problem)
}

/// Band diagram of the period-`q` approximant with slope `p/q`.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qs_band_diagram_new(
    problem: *const QsProblem,
    p: i64,
    q: i64,
    alpha_count: usize,
    points_per_unit: usize,
    lo: f64,
    hi: f64,
    out: *mut *mut QsBandDiagram,
) -> QsStatus {
    guard(|| {
        let problem = deref(problem)?;
        let approx = RationalApproximant::rational(p, q).map_err(fail)?;
        let settings = BandSettings {
            alpha_count,
            n_bands: None,
            points_per_unit,
            window: window(lo, hi)?,
        };
        let bd = band_diagram(&problem.0, &approx, &settings).map_err(fail)?;
        emit(out, QsBandDiagram(bd))
    })
}

/// Number of quasimomentum samples and of bands.
///
/// # Safety
/// `bd` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qs_band_diagram_shape(
    bd: *const QsBandDiagram,
    n_alphas: *mut usize,
    n_bands: *mut usize,
) -> QsStatus {
    guard(|| {
        let bd = deref(bd)?;
        if n_alphas.is_null() || n_bands.is_null() {
            return Err(null());
        }
        *n_alphas = bd.0.alphas.len();
        *n_bands = bd.0.n_bands();
        Ok(())
    })
}

/// Eigenvalue of band `band` at quasimomentum sample `alpha_index`.
///
/// # Safety
/// `bd` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qs_band_diagram_value(
    bd: *const QsBandDiagram,
    alpha_index: usize,
    band: usize,
    out: *mut f64,
) -> QsStatus {
    guard(|| {
        let bd = deref(bd)?;
        if out.is_null() {
            return Err(null());
        }
        match bd.0.bands.get(alpha_index).and_then(|row| row.get(band)) {
            Some(&v) => {
                *out = v;
                Ok(())
            }
            None => Err(invalid("index out of range")),
        }
    })
}

/// Band ranges `[lo_out[i], hi_out[i]]`. `len` receives the number of
/// bands even when `cap` is too small.
///
/// # Safety
/// `lo_out` and `hi_out` must each hold `cap` elements; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn qs_band_diagram_ranges(
    bd: *const QsBandDiagram,
    lo_out: *mut f64,
    hi_out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> QsStatus {
    guard(|| {
        let ranges = deref(bd)?.0.band_ranges();
        let (lo, hi): (Vec<f64>, Vec<f64>) = ranges.into_iter().unzip();
        copy_out(&lo, lo_out, cap, len)?;
        copy_out(&hi, hi_out, cap, len)
    })
}

/// # Safety
/// `bd` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_band_diagram_free(bd: *mut QsBandDiagram) {
    free_handle(bd)
}

/// Eigenvalues in `[lo, hi]` of the lifted two-dimensional finite-difference
/// operator with mesh spacing `h` and phases `(alpha, beta)`.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qs_superspace_spectrum(
    problem: *const QsProblem,
    h: f64,
    alpha: f64,
    beta: f64,
    lo: f64,
    hi: f64,
    out: *mut *mut QsSpectrum,
) -> QsStatus {
    guard(|| {
        let problem = deref(problem)?;
        let lifted = LiftedProblem::new(problem.0.clone(), h, alpha, beta).map_err(fail)?;
        let SpectrumSample { eigenvalues, .. } = superspace_spectrum_fd_in(&lifted, window(lo, hi)?).map_err(fail)?;
        emit(out, QsSpectrum(eigenvalues))
    })
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_spectrum_len(s: *const QsSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the eigenvalues into `buf`.
///
/// # Safety
/// `buf` must hold `cap` elements; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn qs_spectrum_copy(
    s: *const QsSpectrum,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> QsStatus {
    guard(|| copy_out(&deref(s)?.0, buf, cap, len))
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_spectrum_free(s: *mut QsSpectrum) {
    free_handle(s)
}

/// Traces `x_1..x_{n_max}` of the default Fibonacci laminate at frequency
/// `omega`.
///
/// # Safety
/// `buf` must hold `n_max` elements.
#[no_mangle]
pub unsafe extern "C" fn qs_fibonacci_traces(omega: f64, n_max: usize, buf: *mut f64) -> QsStatus {
    guard(|| {
        let ts = trace_sequence(&Laminate::default_tiles(), omega, n_max).map_err(fail)?;
        copy_out(&ts.values, buf, n_max, ptr::null_mut())
    })
}

/// Localised modes of the reflected interface problem with eigenvalues in
/// `[lo, hi]`, using default discretisation settings.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qs_interface_modes(
    problem: *const QsProblem,
    lo: f64,
    hi: f64,
    out: *mut *mut QsInterfaceModes,
) -> QsStatus {
    guard(|| {
        let problem = deref(problem)?;
        let settings = InterfaceSettings {
            window: Some(window(lo, hi)?),
            ..InterfaceSettings::default()
        };
        let study = interface_study(&problem.0, &settings).map_err(fail)?;
        let modes = study
            .findings
            .iter()
            .map(|f| {
                (
                    f.mode.eigenvalue,
                    f.mode.rate,
                    f.estimate.as_ref().map_or(f64::NAN, |e| e.rate),
                )
            })
            .collect();
        emit(out, QsInterfaceModes(modes))
    })
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qs_interface_modes_len(m: *const QsInterfaceModes) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// Eigenvalue, fitted decay rate and approximant-estimated rate (NaN when
/// unavailable) of mode `index`.
///
/// # Safety
/// `m` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qs_interface_mode(
    m: *const QsInterfaceModes,
    index: usize,
    eigenvalue: *mut f64,
    rate: *mut f64,
    estimated_rate: *mut f64,
) -> QsStatus {
    guard(|| {
        let m = deref(m)?;
        if eigenvalue.is_null() || rate.is_null() || estimated_rate.is_null() {
            return Err(null());
        }
        let &(e, r, est) = m.0.get(index).ok_or_else(|| invalid("index out of range"))?;
        *eigenvalue = e;
        *rate = r;
        *estimated_rate = est;
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qs_interface_modes_free(m: *mut QsInterfaceModes) {
    free_handle(m)
}

/// Runs a JSON configuration file as the command-line tool would, writing
/// into `out_dir` (null: the directory named in the config).
///
/// # Safety
/// `config_path` must be a nul-terminated string; `out_dir` null or one.
#[no_mangle]
pub unsafe extern "C" fn qs_run_config(config_path: *const c_char, out_dir: *const c_char) -> QsStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(null());
        }
        let path = |p: *const c_char| -> Result<PathBuf, QsStatus> {
            CStr::from_ptr(p)
                .to_str()
                .map(PathBuf::from)
                .map_err(|_| invalid("path is not valid UTF-8"))
        };
        let args = Args {
            config: path(config_path)?,
            out: if out_dir.is_null() { None } else { Some(path(out_dir)?) },
            threads: None,
            overrides: Vec::new(),
        };
        execute(&args).map(|_| ()).map_err(|f| fail(f.error))
    })
}
