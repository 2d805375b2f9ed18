//! C interface to the `ipjdsvd` solver.
//!
//! Matrices and results are opaque handles owned by the caller and released
//! with the matching `_free` function. Every call returns an [`IpjStatus`];
//! on failure a message is kept per thread and can be copied out with
//! [`ipj_last_error`]. Panics never cross the boundary.
//!
//! Pointer arguments must be null or valid for the access the call makes;
//! arrays must hold at least the stated number of elements.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ipjdsvd::{load_matrix_market, solve, Error, Mode, RunReport, SolverConfig, SparseMatrix, Termination};

/// Status code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    NonFinite = 6,
    NumericalFailure = 7,
    IndexOutOfRange = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Which correction equation the solver uses.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpjMode {
    Jdsvd = 0,
    Ipjdsvd = 1,
}

/// How a solve ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpjTermination {
    Converged = 0,
    MaxOuter = 1,
    Stalled = 2,
}

/// Solver parameters. Fill with [`ipj_config_default`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IpjConfig {
    pub tau: f64,
    /// Number of triplets wanted.
    pub num: usize,
    pub tol: f64,
    pub kmax: usize,
    pub kmin: usize,
    pub eps_inner: f64,
    pub pretol1: f64,
    pub pretol2: f64,
    /// An [`IpjMode`] value.
    pub mode: u32,
    pub seed: u64,
    /// Cap on correction-equation solves; 0 selects the default.
    pub maxit_outer: usize,
}

/// Opaque sparse matrix.
pub struct IpjMatrix {
    inner: SparseMatrix,
}

/// Opaque result of a solve.
pub struct IpjResult {
    inner: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> IpjStatus {
    match e {
        Error::Io { .. } => IpjStatus::Io,
        Error::UnsupportedField(_) | Error::Parse { .. } => IpjStatus::Parse,
        Error::DimensionMismatch { .. } => IpjStatus::DimensionMismatch,
        Error::NonFinite(_) => IpjStatus::NonFinite,
        Error::NotOrthonormal { .. } | Error::RankDeficient | Error::MinresBreakdown { .. } => {
            IpjStatus::NumericalFailure
        }
        _ => IpjStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (IpjStatus, String)>) -> IpjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IpjStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IpjStatus::Panic
        }
    }
}

fn lib(e: Error) -> (IpjStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IpjStatus, String) {
    (IpjStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (IpjStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (IpjStatus, String)> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), (IpjStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Copies the last error of this thread, NUL-terminated, into `buf`.
/// Returns the length including the terminator; if that exceeds `len`
/// nothing is written. Passing a null `buf` queries the length.
#[no_mangle]
pub unsafe extern "C" fn ipj_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let need = msg.len() + 1;
        if !buf.is_null() && need <= len {
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, msg.len());
            *buf.add(msg.len()) = 0;
        }
        need
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ipj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default parameters for `num` triplets nearest `tau`.
#[no_mangle]
pub unsafe extern "C" fn ipj_config_default(tau: f64, num: usize, out: *mut IpjConfig) -> IpjStatus {
    guard(|| {
        let c = SolverConfig::new(tau, num);
        write(
            out,
            IpjConfig {
                tau: c.tau,
                num: c.ell,
                tol: c.tol,
                kmax: c.k_max,
                kmin: c.k_min,
                eps_inner: c.eps_inner,
                pretol1: c.pretol1,
                pretol2: c.pretol2,
                mode: IpjMode::Ipjdsvd as u32,
                seed: c.seed,
                maxit_outer: 0,
            },
            "out",
        )
    })
}

/// Builds a matrix from `nnz` zero-based coordinate entries. Duplicates are
/// summed.
#[no_mangle]
pub unsafe extern "C" fn ipj_matrix_from_triplets(
    nrows: usize,
    ncols: usize,
    nnz: usize,
    rows: *const usize,
    cols: *const usize,
    values: *const f64,
    out: *mut *mut IpjMatrix,
) -> IpjStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = slice(rows, nnz, "rows")?;
        let c = slice(cols, nnz, "cols")?;
        let v = slice(values, nnz, "values")?;
        let entries = r.iter().zip(c).zip(v).map(|((&i, &j), &x)| (i, j, x));
        let inner = SparseMatrix::from_triplets(nrows, ncols, entries).map_err(lib)?;
        *out = Box::into_raw(Box::new(IpjMatrix { inner }));
        Ok(())
    })
}

/// Reads a Matrix Market file.
#[no_mangle]
pub unsafe extern "C" fn ipj_matrix_load(path: *const c_char, out: *mut *mut IpjMatrix) -> IpjStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| (IpjStatus::InvalidArgument, format!("path is not UTF-8: {e}")))?;
        let inner = load_matrix_market(path).map_err(lib)?;
        *out = Box::into_raw(Box::new(IpjMatrix { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ipj_matrix_shape(
    matrix: *const IpjMatrix,
    nrows: *mut usize,
    ncols: *mut usize,
) -> IpjStatus {
    guard(|| {
        let (m, n) = deref(matrix, "matrix")?.inner.shape();
        write(nrows, m, "nrows")?;
        write(ncols, n, "ncols")
    })
}

/// Releases a matrix. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ipj_matrix_free(matrix: *mut IpjMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Computes the `config->num` singular triplets nearest `config->tau`.
/// A run that stops before all triplets converge still returns `Ok` with a
/// result; check [`ipj_result_termination`].
#[no_mangle]
pub unsafe extern "C" fn ipj_solve(
    matrix: *const IpjMatrix,
    config: *const IpjConfig,
    out: *mut *mut IpjResult,
) -> IpjStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = &deref(matrix, "matrix")?.inner;
        let c = deref(config, "config")?;
        let mode = match c.mode {
            m if m == IpjMode::Jdsvd as u32 => Mode::Jdsvd,
            m if m == IpjMode::Ipjdsvd as u32 => Mode::Ipjdsvd,
            other => return Err((IpjStatus::InvalidArgument, format!("unknown mode {other}"))),
        };
        let mut cfg = SolverConfig::new(c.tau, c.num).with_tol(c.tol).with_mode(mode);
        cfg.k_max = c.kmax;
        cfg.k_min = c.kmin;
        cfg.eps_inner = c.eps_inner;
        cfg.pretol1 = c.pretol1;
        cfg.pretol2 = c.pretol2;
        cfg.seed = c.seed;
        cfg.maxit_outer = (c.maxit_outer > 0).then_some(c.maxit_outer);
        let inner = solve(a, &cfg).map_err(lib)?;
        *out = Box::into_raw(Box::new(IpjResult { inner }));
        Ok(())
    })
}

/// Releases a result. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ipj_result_free(result: *mut IpjResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of converged triplets.
#[no_mangle]
pub unsafe extern "C" fn ipj_result_count(result: *const IpjResult, count: *mut usize) -> IpjStatus {
    guard(|| write(count, deref(result, "result")?.inner.triplets.len(), "count"))
}

#[no_mangle]
pub unsafe extern "C" fn ipj_result_termination(
    result: *const IpjResult,
    termination: *mut IpjTermination,
) -> IpjStatus {
    guard(|| {
        let t = match deref(result, "result")?.inner.termination {
            Termination::Converged => IpjTermination::Converged,
            Termination::MaxOuter => IpjTermination::MaxOuter,
            Termination::Stalled => IpjTermination::Stalled,
        };
        write(termination, t, "termination")
    })
}

/// Total products with `A` and `Aᵀ`, and outer iterations.
#[no_mangle]
pub unsafe extern "C" fn ipj_result_stats(
    result: *const IpjResult,
    mvs: *mut u64,
    outer_iterations: *mut usize,
) -> IpjStatus {
    guard(|| {
        let r = &deref(result, "result")?.inner;
        write(mvs, r.mvs, "mvs")?;
        write(outer_iterations, r.outer_iterations, "outer_iterations")
    })
}

/// Value and residual norm of triplet `index` (in order of convergence).
#[no_mangle]
pub unsafe extern "C" fn ipj_result_triplet(
    result: *const IpjResult,
    index: usize,
    value: *mut f64,
    residual: *mut f64,
) -> IpjStatus {
    guard(|| {
        let t = triplet(result, index)?;
        write(value, t.value, "value")?;
        write(residual, t.residual, "residual")
    })
}

/// Copies the left (length `nrows`) and right (length `ncols`) singular
/// vectors of triplet `index`. Either buffer may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn ipj_result_vectors(
    result: *const IpjResult,
    index: usize,
    left: *mut f64,
    left_len: usize,
    right: *mut f64,
    right_len: usize,
) -> IpjStatus {
    guard(|| {
        let t = triplet(result, index)?;
        copy_out(t.left.as_slice(), left, left_len)?;
        copy_out(t.right.as_slice(), right, right_len)
    })
}

unsafe fn triplet<'a>(result: *const IpjResult, index: usize) -> Result<&'a ipjdsvd::ConvergedTriplet, (IpjStatus, String)> {
    let r = &deref(result, "result")?.inner;
    r.triplets.get(index).ok_or_else(|| {
        (
            IpjStatus::IndexOutOfRange,
            format!("triplet {index} requested, {} available", r.triplets.len()),
        )
    })
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), (IpjStatus, String)> {
    if dst.is_null() {
        return Ok(());
    }
    if len < src.len() {
        return Err((
            IpjStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}
