//! C interface to `bdupdate`.
//!
//! Objects are passed as opaque handles that must be released with the
//! matching `*_free` function. Every fallible call returns a status code;
//! on failure `bd_last_error` describes the problem until the next call on
//! the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use bdupdate::bgu::bgu_update;
use bdupdate::bhu::bhu_update;
use bdupdate::dense::bidiagonalize_dense;
use bdupdate::tracking::{ReorthPolicy, TrackedFactorization, UpdateEvent};
use bdupdate::{BidiagonalMatrix, DenseMatrix, Error};

pub const BD_OK: c_int = 0;
pub const BD_ERR_NULL: c_int = 1;
pub const BD_ERR_DIMENSION: c_int = 2;
pub const BD_ERR_INVALID: c_int = 3;
pub const BD_ERR_NUMERICAL: c_int = 4;
pub const BD_ERR_PANIC: c_int = 5;

/// Reorthogonalization policies for `bd_tracker_set_policy`.
pub const BD_REORTH_NEVER: c_int = 0;
pub const BD_REORTH_EVERY: c_int = 1;
pub const BD_REORTH_ADAPTIVE: c_int = 2;

/// Upper bidiagonal matrix.
pub struct BdBand(BidiagonalMatrix);

/// Rank-r streaming tracker.
pub struct BdTracker(TrackedFactorization);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code_for(e: &Error) -> c_int {
    match e {
        Error::Dimension(_) | Error::IndexOutOfRange { .. } => BD_ERR_DIMENSION,
        e if e.is_numerical() => BD_ERR_NUMERICAL,
        _ => BD_ERR_INVALID,
    }
}

enum Failure {
    Null,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BD_OK
        }
        Ok(Err(Failure::Null)) => {
            set_error("null pointer argument");
            BD_ERR_NULL
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            code_for(&e)
        }
        Err(_) => {
            set_error("internal panic");
            BD_ERR_PANIC
        }
    }
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn input<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null);
    }
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for `len` writes.
unsafe fn output<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null);
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null);
    }
    // SAFETY: checked non-null; the caller provides a writable slot.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// # Safety
/// `h` must be null or a live handle from this library.
unsafe fn borrow<'a, T>(h: *const T) -> Result<&'a T, Failure> {
    h.as_ref().ok_or(Failure::Null)
}

/// # Safety
/// `h` must be null or a live handle from this library.
unsafe fn borrow_mut<'a, T>(h: *mut T) -> Result<&'a mut T, Failure> {
    h.as_mut().ok_or(Failure::Null)
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates an m×n band from `min(m, n)` diagonal and `min(m, n) − 1`
/// superdiagonal values.
///
/// # Safety
/// `alphas` and `betas` must point to that many readable values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_band_new(
    m: usize,
    n: usize,
    alphas: *const f64,
    betas: *const f64,
    out: *mut *mut BdBand,
) -> c_int {
    guard(|| {
        let t = m.min(n);
        let a = input(alphas, t)?.to_vec();
        let b = input(betas, t.saturating_sub(1))?.to_vec();
        store(out, BdBand(BidiagonalMatrix::new(m, n, a, b)?))
    })
}

/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bd_band_free(h: *mut BdBand) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `m` and `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_band_shape(h: *const BdBand, m: *mut usize, n: *mut usize) -> c_int {
    guard(|| {
        let b = &borrow(h)?.0;
        *m.as_mut().ok_or(Failure::Null)? = b.m;
        *n.as_mut().ok_or(Failure::Null)? = b.n;
        Ok(())
    })
}

/// Copies the band into `alphas` (`min(m, n)` values) and `betas`
/// (`min(m, n) − 1` values).
///
/// # Safety
/// `h` must be a live handle and the buffers large enough.
#[no_mangle]
pub unsafe extern "C" fn bd_band_values(
    h: *const BdBand,
    alphas: *mut f64,
    betas: *mut f64,
) -> c_int {
    guard(|| {
        let b = &borrow(h)?.0;
        output(alphas, b.alphas.len())?.copy_from_slice(&b.alphas);
        output(betas, b.betas.len())?.copy_from_slice(&b.betas);
        Ok(())
    })
}

/// Reduces the row-major m×n matrix `a` to `Qᵀ A P = B`. `q` (m×m) and
/// `p` (n×n), row-major, may be null when not wanted.
///
/// # Safety
/// `a` must hold `m·n` values, `q` and `p` (when non-null) `m·m` and `n·n`.
#[no_mangle]
pub unsafe extern "C" fn bd_bidiagonalize(
    m: usize,
    n: usize,
    a: *const f64,
    out: *mut *mut BdBand,
    q: *mut f64,
    p: *mut f64,
) -> c_int {
    guard(|| {
        let mat = DenseMatrix::new(m, n, input(a, m * n)?.to_vec())?;
        if !mat.is_finite() {
            return Err(Error::NonFinite { step: 0 }.into());
        }
        let d = bidiagonalize_dense(&mat);
        if !q.is_null() {
            output(q, m * m)?.copy_from_slice(d.q.matrix().data());
        }
        if !p.is_null() {
            output(p, n * n)?.copy_from_slice(d.p.matrix().data());
        }
        store(out, BdBand(d.b))
    })
}

/// Givens update of `B + bhat chatᵀ`. `rotations` (may be null) receives
/// the number of plane rotations used.
///
/// # Safety
/// `band` must be a live handle, `bhat` and `chat` must hold `m` and `n`
/// values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_bgu_update(
    band: *const BdBand,
    bhat: *const f64,
    chat: *const f64,
    out: *mut *mut BdBand,
    rotations: *mut usize,
) -> c_int {
    guard(|| {
        let b = &borrow(band)?.0;
        let r = bgu_update(b, input(bhat, b.m)?, input(chat, b.n)?)?;
        if let Some(slot) = rotations.as_mut() {
            *slot = r.audit.rotations;
        }
        store(out, BdBand(r.b))
    })
}

/// Compact-Householder update of `B + bhat chatᵀ`. `mults` (may be null)
/// receives the multiplication count.
///
/// # Safety
/// As for [`bd_bgu_update`].
#[no_mangle]
pub unsafe extern "C" fn bd_bhu_update(
    band: *const BdBand,
    bhat: *const f64,
    chat: *const f64,
    out: *mut *mut BdBand,
    mults: *mut u64,
) -> c_int {
    guard(|| {
        let b = &borrow(band)?.0;
        let r = bhu_update(b, input(bhat, b.m)?, input(chat, b.n)?)?;
        if let Some(slot) = mults.as_mut() {
            *slot = r.mults;
        }
        store(out, BdBand(r.b))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_new(
    m: usize,
    n: usize,
    r: usize,
    out: *mut *mut BdTracker,
) -> c_int {
    guard(|| store(out, BdTracker(TrackedFactorization::new(m, n, r)?)))
}

/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_free(h: *mut BdTracker) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// `kind` is one of the `BD_REORTH_*` constants; `param` is the interval
/// for `BD_REORTH_EVERY` and the threshold for `BD_REORTH_ADAPTIVE`.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_set_policy(
    h: *mut BdTracker,
    kind: c_int,
    param: f64,
) -> c_int {
    guard(|| {
        let t = borrow_mut(h)?;
        let policy = match kind {
            BD_REORTH_NEVER => ReorthPolicy::Never,
            BD_REORTH_EVERY if param >= 1.0 && param.fract() == 0.0 => {
                ReorthPolicy::EveryK(param as u64)
            }
            BD_REORTH_ADAPTIVE if param > 0.0 && param.is_finite() => ReorthPolicy::Adaptive(param),
            _ => {
                return Err(Error::InvalidArgument("bad reorthogonalization policy".into()).into())
            }
        };
        t.0.set_policy(policy);
        Ok(())
    })
}

/// Adds `theta` at the 0-based position `(i, j)`.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_update_sparse(
    h: *mut BdTracker,
    i: usize,
    j: usize,
    theta: f64,
) -> c_int {
    guard(|| {
        let t = borrow_mut(h)?;
        t.0.update(&UpdateEvent::Sparse { i, j, theta })?;
        Ok(())
    })
}

/// Adds `b cᵀ`.
///
/// # Safety
/// `h` must be a live handle; `b` and `c` must hold `m` and `n` values.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_update(
    h: *mut BdTracker,
    b: *const f64,
    c: *const f64,
) -> c_int {
    guard(|| {
        let t = borrow_mut(h)?;
        let (m, n) = t.0.shape();
        let ev = UpdateEvent::Dense {
            b: input(b, m)?.to_vec(),
            c: input(c, n)?.to_vec(),
        };
        t.0.update(&ev)?;
        Ok(())
    })
}

/// Copy of the tracker's current r×r band.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_band(h: *const BdTracker, out: *mut *mut BdBand) -> c_int {
    guard(|| store(out, BdBand(borrow(h)?.0.b().clone())))
}

/// `|frob_a − ‖B‖_F|`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_residual(
    h: *const BdTracker,
    frob_a: f64,
    out: *mut f64,
) -> c_int {
    guard(|| {
        let t = borrow(h)?;
        *out.as_mut().ok_or(Failure::Null)? = t.0.residual(frob_a);
        Ok(())
    })
}

/// Estimates `‖QᵀQ − I‖_F` and `‖PᵀP − I‖_F`.
///
/// # Safety
/// `h` must be a live handle; `drift_q` and `drift_p` writable.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_drift(
    h: *mut BdTracker,
    drift_q: *mut f64,
    drift_p: *mut f64,
) -> c_int {
    guard(|| {
        let t = borrow_mut(h)?;
        let (dq, dp) = t.0.drift_check();
        *drift_q.as_mut().ok_or(Failure::Null)? = dq;
        *drift_p.as_mut().ok_or(Failure::Null)? = dp;
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_reorthogonalize(h: *mut BdTracker) -> c_int {
    guard(|| {
        borrow_mut(h)?.0.reorthogonalize()?;
        Ok(())
    })
}

/// Writes the represented m×n matrix `Q B Pᵀ`, row-major, into `out`.
///
/// # Safety
/// `h` must be a live handle and `out` must hold `m·n` values.
#[no_mangle]
pub unsafe extern "C" fn bd_tracker_represented(h: *const BdTracker, out: *mut f64) -> c_int {
    guard(|| {
        let t = borrow(h)?;
        let a = t.0.represented();
        output(out, a.data().len())?.copy_from_slice(a.data());
        Ok(())
    })
}
