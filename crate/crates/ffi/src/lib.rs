//! C interface to the `nslr` solver.
//!
//! Datasets and solver reports are opaque handles created and released by
//! this library. Every fallible call returns an `NslrStatus`; on failure a
//! message describing the last error on the calling thread is available from
//! `nslr_last_error_message`. Panics never cross the boundary.
//!
//! Indices are 0-based, dense matrices are row-major, labels are `0` or `1`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use nslr::bench::ser;
use nslr::model;
use nslr::solver::{self as core_solver, iht_solve, Optimality, SolverConfig, SolverReport};
use nslr::stationarity::Stationarity;
use nslr::{CsrMatrix, Dataset, DesignMatrix, Error};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NslrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A mathematical precondition failed (singular block, degenerate data).
    Condition = 3,
    /// The solver aborted on a numeric failure.
    Numeric = 4,
    Parse = 5,
    Io = 6,
    /// The output buffer is too small.
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NslrSolver {
    Newton = 0,
    Iht = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NslrStationarity {
    Strong = 0,
    Plain = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NslrOptimality {
    GlobalMinimizer = 0,
    LocalMinimizer = 1,
    Unknown = 2,
}

/// Solver parameters. Start from `nslr_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NslrOptions {
    pub s: usize,
    pub tau0: f64,
    pub tau_decay: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub ridge_mu: f64,
}

/// Opaque training set.
pub struct NslrDataset(Dataset);

/// Opaque solver result.
pub struct NslrReport(SolverReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> NslrStatus {
    match err {
        Error::Argument(_) => NslrStatus::InvalidArgument,
        Error::Condition(_) => NslrStatus::Condition,
        Error::Numeric { .. } => NslrStatus::Numeric,
        Error::Parse { .. } => NslrStatus::Parse,
        Error::Io(_) => NslrStatus::Io,
    }
}

fn fail(status: NslrStatus, msg: impl Into<String>) -> NslrStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics onto status codes.
fn guard(f: impl FnOnce() -> Result<(), (NslrStatus, String)>) -> NslrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NslrStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(NslrStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (NslrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NslrStatus, String) {
    (NslrStatus::NullPointer, format!("{what} is NULL"))
}

/// # Safety
/// `ptr` must be NULL or point to `len` readable values.
unsafe fn view<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], (NslrStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

/// Message for the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nslr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nslr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default parameters for sparsity level `s`.
#[no_mangle]
pub extern "C" fn nslr_options_default(s: usize) -> NslrOptions {
    let d = SolverConfig::with_sparsity(s);
    NslrOptions {
        s,
        tau0: d.tau0,
        tau_decay: d.tau_decay,
        epsilon: d.epsilon,
        max_iter: d.max_iter,
        ridge_mu: d.ridge_mu,
    }
}

fn store<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for NULL before building the value
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Builds a dataset from a row-major `n x p` matrix and `n` labels.
///
/// # Safety
/// `x` must point to `n * p` doubles, `y` to `n` doubles, and `out` must be
/// writable. The inputs are copied.
#[no_mangle]
pub unsafe extern "C" fn nslr_dataset_from_dense(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    out: *mut *mut NslrDataset,
) -> NslrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(p)
            .ok_or_else(|| (NslrStatus::InvalidArgument, "n * p overflows".to_string()))?;
        let x = view(x, len, "x")?;
        let y = view(y, n, "y")?;
        let m = DesignMatrix::from_row_major(n, p, x).map_err(lib_err)?;
        let ds = Dataset::new(m, y.to_vec()).map_err(lib_err)?;
        store(out, NslrDataset(ds));
        Ok(())
    })
}

/// Builds a sparse dataset from CSR buffers: `indptr` has `n + 1` entries,
/// `indices` and `values` have `indptr[n]` entries with strictly increasing
/// column indices within each row.
///
/// # Safety
/// All pointers must reference buffers of the stated lengths; `out` must be
/// writable. The inputs are copied.
#[no_mangle]
pub unsafe extern "C" fn nslr_dataset_from_csr(
    indptr: *const usize,
    indices: *const usize,
    values: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    out: *mut *mut NslrDataset,
) -> NslrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let indptr = view(indptr, n + 1, "indptr")?;
        let nnz = indptr[n];
        let indices = view(indices, nnz, "indices")?;
        let values = view(values, nnz, "values")?;
        let y = view(y, n, "y")?;
        let m = CsrMatrix::new(n, p, indptr.to_vec(), indices.to_vec(), values.to_vec())
            .map_err(lib_err)?;
        let ds = Dataset::new(DesignMatrix::Sparse(m), y.to_vec()).map_err(lib_err)?;
        store(out, NslrDataset(ds));
        Ok(())
    })
}

/// Reads a LIBSVM file. `p` overrides the feature count when nonzero.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nslr_dataset_from_libsvm(
    path: *const c_char,
    p: usize,
    out: *mut *mut NslrDataset,
) -> NslrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (NslrStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let ds = nslr::data::read_libsvm_file(Path::new(path), (p > 0).then_some(p))
            .map_err(lib_err)?;
        store(out, NslrDataset(ds));
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nslr_dataset_n(ds: *const NslrDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n())
}

/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nslr_dataset_p(ds: *const NslrDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.p())
}

/// Releases a dataset. NULL is ignored.
///
/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nslr_dataset_free(ds: *mut NslrDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Fits `ds`. A report is written to `out` also when the solver aborted on a
/// numeric failure; the status is then `Numeric`.
///
/// # Safety
/// `ds` must be a live handle, `options` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nslr_solve(
    ds: *const NslrDataset,
    options: *const NslrOptions,
    solver: NslrSolver,
    out: *mut *mut NslrReport,
) -> NslrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        let cfg = SolverConfig {
            s: o.s,
            tau0: o.tau0,
            tau_decay: o.tau_decay,
            epsilon: o.epsilon,
            max_iter: o.max_iter,
            ridge_mu: o.ridge_mu,
            z0: None,
        };
        let report = match solver {
            NslrSolver::Newton => core_solver::nslr_solve(&ds.0, &cfg),
            NslrSolver::Iht => iht_solve(&ds.0, &cfg),
        }
        .map_err(lib_err)?;
        let aborted = report.error.clone();
        store(out, NslrReport(report));
        match aborted {
            Some(msg) => Err((NslrStatus::Numeric, msg)),
            None => Ok(()),
        }
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nslr_report_free(report: *mut NslrReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Copies the solution into `out`, which must hold `len >= p` doubles.
///
/// # Safety
/// `report` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nslr_report_z(report: *const NslrReport, out: *mut f64, len: usize) -> NslrStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let z = &r.0.z_final;
        if len < z.len() {
            return Err((NslrStatus::BufferTooSmall, format!("need {} doubles, got {len}", z.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(z.as_ptr(), out, z.len());
        Ok(())
    })
}

/// Scalar indicators of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NslrSummary {
    pub p: usize,
    pub converged: bool,
    pub iterations: usize,
    pub nnz: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub final_residual: f64,
    pub tau_final: f64,
    pub time_seconds: f64,
    pub stationarity: NslrStationarity,
    pub optimality: NslrOptimality,
    pub tie_flag: bool,
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nslr_report_summary(report: *const NslrReport, out: *mut NslrSummary) -> NslrStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = NslrSummary {
            p: r.z_final.len(),
            converged: r.converged,
            iterations: r.iterations,
            nnz: r.nnz(),
            loss: r.loss,
            grad_norm: r.grad_norm,
            final_residual: r.final_residual,
            tau_final: r.tau_final,
            time_seconds: r.time_seconds,
            stationarity: match r.stationarity_class {
                Stationarity::Strong => NslrStationarity::Strong,
                Stationarity::Plain => NslrStationarity::Plain,
                Stationarity::None => NslrStationarity::None,
            },
            optimality: match r.optimality {
                Optimality::GlobalMinimizer => NslrOptimality::GlobalMinimizer,
                Optimality::LocalMinimizer => NslrOptimality::LocalMinimizer,
                Optimality::Unknown => NslrOptimality::Unknown,
            },
            tie_flag: r.tie_flag,
        };
        Ok(())
    })
}

/// Loss at `z` (length `p`).
///
/// # Safety
/// `ds` must be a live handle, `z` readable for `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nslr_loss(ds: *const NslrDataset, z: *const f64, len: usize, out: *mut f64) -> NslrStatus {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("ds"))?.0;
        let z = view(z, len, "z")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = model::loss(ds, z).map_err(lib_err)?;
        Ok(())
    })
}

/// Gradient at `z`, written to `grad`; both have length `len = p`.
///
/// # Safety
/// `ds` must be a live handle, `z` readable and `grad` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nslr_gradient(
    ds: *const NslrDataset,
    z: *const f64,
    len: usize,
    grad: *mut f64,
) -> NslrStatus {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("ds"))?.0;
        let z = view(z, len, "z")?;
        if grad.is_null() {
            return Err(null("grad"));
        }
        let g = model::gradient(ds, z).map_err(lib_err)?;
        ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len());
        Ok(())
    })
}

/// Sign error rate of `z` on `ds`.
///
/// # Safety
/// `ds` must be a live handle, `z` readable for `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nslr_ser(ds: *const NslrDataset, z: *const f64, len: usize, out: *mut f64) -> NslrStatus {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("ds"))?.0;
        let z = view(z, len, "z")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ser(ds, z).map_err(lib_err)?;
        Ok(())
    })
}
