//! C interface to ceflux.
//!
//! Fallible calls return a `CefluxStatus`. After a failure the message is
//! available from `ceflux_last_error` on the same thread until the next
//! failing call. Handles are owned by the caller and released with the
//! matching `_free` function; passing NULL to a `_free` function is a no-op.

use ceflux::fixtures::{build, FixtureOptions};
use ceflux::io::PairFile;
use ceflux::measure::AtomicVectorMeasure;
use ceflux::minimal_flux::minimal_pair;
use ceflux::wasserstein::w1;
use ceflux::weak_form::{ce_residual, ce_residual_exact};
use ceflux::{Error, NormSpec};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CefluxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    MassMismatch = 4,
    Infeasible = 5,
    Unbounded = 6,
    PivotLimit = 7,
    UnknownExample = 8,
    Parse = 9,
    Io = 10,
    Numerical = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CefluxNorm {
    L1 = 0,
    L2 = 1,
    Linf = 2,
}

/// Which part of a pair to discretise.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CefluxPart {
    Mu = 0,
    Nu = 1,
    Mu0 = 2,
}

/// Weighted atoms (tᵢ, xᵢ, wᵢ) in [0, ∞) × R^dim with weights in R^m.
pub struct CefluxMeasure(AtomicVectorMeasure);

/// A candidate solution (μ, ν) with initial datum and horizon.
pub struct CefluxPair(PairFile);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CefluxResidual {
    pub max_abs: f64,
    pub max_normalized: f64,
    pub normalization: f64,
    pub n_basis: usize,
    /// Some atom fell outside the basis box.
    pub cover_warning: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CefluxMinimalFlux {
    /// Total variation of the retained singular part.
    pub objective: f64,
    pub tv_singular: f64,
    pub max_violation: f64,
    pub is_submeasure: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CefluxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Dimension { .. } => CefluxStatus::Dimension,
            Error::Invalid(_) | Error::OutOfBounds(_) | Error::DegenerateSegment => CefluxStatus::InvalidArgument,
            Error::MassMismatch(..) => CefluxStatus::MassMismatch,
            Error::Infeasible => CefluxStatus::Infeasible,
            Error::Unbounded => CefluxStatus::Unbounded,
            Error::PivotLimit(_) => CefluxStatus::PivotLimit,
            Error::UnknownFixture(_) => CefluxStatus::UnknownExample,
            Error::Json(_) => CefluxStatus::Parse,
            Error::Io(_) => CefluxStatus::Io,
            Error::GridMismatch | Error::NonPositive { .. } | Error::NotNormalized { .. } => CefluxStatus::Numerical,
        };
        Failure(code, e.to_string())
    }
}

fn fail(code: CefluxStatus, msg: &str) -> Failure {
    Failure(code, msg.to_string())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CefluxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CefluxStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CefluxStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(CefluxStatus::NullPointer, "null handle"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(CefluxStatus::NullPointer, "null output pointer"))
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(CefluxStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CefluxStatus::InvalidArgument, "string is not valid UTF-8"))
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(fail(CefluxStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ceflux_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ceflux_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_measure_new(dim: usize, m: usize, norm: CefluxNorm, out: *mut *mut CefluxMeasure) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        if dim == 0 || m == 0 {
            return Err(fail(CefluxStatus::InvalidArgument, "dim and m must be positive"));
        }
        let norm = match norm {
            CefluxNorm::L1 => NormSpec::L1,
            CefluxNorm::L2 => NormSpec::L2,
            CefluxNorm::Linf => NormSpec::Linf,
        };
        *out = boxed(CefluxMeasure(AtomicVectorMeasure::new(dim, m, norm)));
        Ok(())
    })
}

/// Appends one atom. `x` holds `dim` values and `w` holds `m`.
///
/// # Safety
/// `h` must be a live measure handle; `x` and `w` must point to arrays of
/// the measure's sizes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_measure_push(h: *mut CefluxMeasure, t: f64, x: *const f64, w: *const f64) -> CefluxStatus {
    guard(|| {
        let h = out_ref(h)?;
        let (d, m) = (h.0.dim(), h.0.weight_dim());
        h.0.push(t, slice(x, d)?, slice(w, m)?)?;
        Ok(())
    })
}

/// # Safety
/// `h` must be a live measure handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_measure_len(h: *const CefluxMeasure, out: *mut usize) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = deref(h)?.0.len();
        Ok(())
    })
}

/// Σ‖wᵢ‖ in the measure's norm.
///
/// # Safety
/// `h` must be a live measure handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_measure_total_variation(h: *const CefluxMeasure, out: *mut f64) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = deref(h)?.0.total_variation(None);
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ceflux_measure_free(h: *mut CefluxMeasure) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// W₁ between two scalar measures of equal mass, in the norm of `a`.
///
/// # Safety
/// `a`, `b` must be live measure handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_w1(a: *const CefluxMeasure, b: *const CefluxMeasure, out: *mut f64) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = w1(&deref(a)?.0, &deref(b)?.0)?;
        Ok(())
    })
}

/// Loads a built-in example such as "7.1" or "7.4(5)".
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_pair_from_example(id: *const c_char, out: *mut *mut CefluxPair) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let fx = build(c_str(id)?, &FixtureOptions::default())?;
        *out = boxed(CefluxPair(PairFile::from_fixture(&fx)));
        Ok(())
    })
}

/// Parses a pair from JSON with keys mu, nu, mu0 and horizon.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_pair_from_json(json: *const c_char, out: *mut *mut CefluxPair) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let p: PairFile = serde_json::from_str(c_str(json)?).map_err(Error::from)?;
        p.validate()?;
        *out = boxed(CefluxPair(p));
        Ok(())
    })
}

/// Serialises a pair to JSON. Release the string with `ceflux_string_free`.
///
/// # Safety
/// `p` must be a live pair handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_pair_to_json(p: *const CefluxPair, out: *mut *mut c_char) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let s = serde_json::to_string(&deref(p)?.0).map_err(Error::from)?;
        *out = CString::new(s).map_err(|_| fail(CefluxStatus::Parse, "interior NUL"))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ceflux_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `p` must be a live pair handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_pair_horizon(p: *const CefluxPair, out: *mut f64) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = deref(p)?.0.horizon;
        Ok(())
    })
}

/// Discretises one part of the pair on `res` cells per unit direction.
///
/// # Safety
/// `p` must be a live pair handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_pair_discretize(
    p: *const CefluxPair,
    part: CefluxPart,
    res: usize,
    out: *mut *mut CefluxMeasure,
) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let p = &deref(p)?.0;
        let m = match part {
            CefluxPart::Mu => &p.mu,
            CefluxPart::Nu => &p.nu,
            CefluxPart::Mu0 => &p.mu0,
        };
        *out = boxed(CefluxMeasure(m.discretize(res)?));
        Ok(())
    })
}

/// Weak-form residual of the continuity equation over a `knots`-spline
/// basis. `res = 0` pairs the symbolic measures exactly; otherwise they are
/// discretised at that resolution first.
///
/// # Safety
/// `p` must be a live pair handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_ce_residual(p: *const CefluxPair, knots: usize, res: usize, out: *mut CefluxResidual) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let p = &deref(p)?.0;
        let basis = p.basis(knots)?;
        let r = if res == 0 {
            ce_residual_exact(&p.mu, &p.nu, &p.mu0, &basis, f64::INFINITY)?
        } else {
            ce_residual(&p.mu.discretize(res)?, &p.nu.discretize(res)?, &p.mu0.discretize(res)?, &basis, f64::INFINITY)?
        };
        *out = CefluxResidual {
            max_abs: r.max_abs,
            max_normalized: r.max_normalized,
            normalization: r.normalization,
            n_basis: r.n_basis,
            cover_warning: r.cover_warning,
        };
        Ok(())
    })
}

/// Minimal sub-flux of ν: keeps the part co-located with μ (within
/// `eps_loc`) and solves for the least singular mass preserving the
/// divergence constraints to `eps_con`.
///
/// # Safety
/// `p` must be a live pair handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ceflux_minimal_flux(
    p: *const CefluxPair,
    knots: usize,
    res: usize,
    eps_loc: f64,
    eps_con: f64,
    out: *mut CefluxMinimalFlux,
) -> CefluxStatus {
    guard(|| {
        let out = out_ref(out)?;
        let p = &deref(p)?.0;
        if !(eps_loc > 0.0 && eps_con > 0.0) {
            return Err(fail(CefluxStatus::InvalidArgument, "tolerances must be positive"));
        }
        let basis = p.basis(knots)?;
        let r = minimal_pair(&p.mu.discretize(res)?, &p.nu.discretize(res)?, &basis, eps_loc, eps_con)?;
        *out = CefluxMinimalFlux {
            objective: r.objective,
            tv_singular: r.tv_singular,
            max_violation: r.max_violation,
            is_submeasure: r.is_submeasure,
        };
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ceflux_pair_free(p: *mut CefluxPair) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}
