//! C ABI over the `branchlab` numerics.
//!
//! Every fallible function returns a [`BlStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and read with
//! [`bl_last_error_message`]. Handles are opaque and released with the
//! matching `*_free` function. Panics are caught at the boundary and reported
//! as [`BlStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use branchlab::gw::{descendant_distribution, discrete_mechanism, FamilyLaw};
use branchlab::levy::LevyTriple;
use branchlab::measure::AtomicMeasure;
use branchlab::scaling::{euler_exponent, solve_phi, Rescaling};
use branchlab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NonCritical = 3,
    Truncation = 4,
    NoConvergence = 5,
    Overflow = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque family-size law.
pub struct BlFamilyLaw(FamilyLaw);

/// Opaque Lévy triple.
pub struct BlLevyTriple(LevyTriple);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BlStatus {
    match e {
        Error::InvalidInput(_) => BlStatus::InvalidInput,
        Error::NonCritical(_) => BlStatus::NonCritical,
        Error::Truncation(_) => BlStatus::Truncation,
        Error::NoConvergence(_) => BlStatus::NoConvergence,
        Error::Overflow(_) => BlStatus::Overflow,
        Error::Config(_) => BlStatus::Config,
        Error::Io(_) => BlStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BlStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BlStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BlStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BlStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: caller passes a null or valid pointer.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null and writable by the caller's contract.
    unsafe { p.write(v) };
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: caller guarantees `n` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: caller guarantees `n` writable elements.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, n) })
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length without the NUL.
/// `buf` may be null when `len` is 0.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` holds `len > n` bytes.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Built-in law by name: `unit`, `binary`, `ternary`, `subcritical-demo`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_family_law_named(name: *const c_char, out: *mut *mut BlFamilyLaw) -> BlStatus {
    guard(|| {
        if name.is_null() {
            return Err(Fail::Null("name"));
        }
        // SAFETY: non-null NUL-terminated string.
        let s =
            unsafe { CStr::from_ptr(name) }.to_str().map_err(|_| Error::InvalidInput("name is not UTF-8".into()))?;
        let law = FamilyLaw::named(s)?;
        unsafe { write(out, Box::into_raw(Box::new(BlFamilyLaw(law))), "out") }
    })
}

/// Law with `π̂(j) = weights[j]` for `j < n`.
///
/// # Safety
/// `weights` must hold `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_family_law_from_weights(
    weights: *const f64,
    n: usize,
    out: *mut *mut BlFamilyLaw,
) -> BlStatus {
    guard(|| {
        let w = unsafe { slice(weights, n, "weights") }?;
        let law = FamilyLaw::new(w)?;
        unsafe { write(out, Box::into_raw(Box::new(BlFamilyLaw(law))), "out") }
    })
}

/// Releases a law; null is ignored.
///
/// # Safety
/// `law` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_family_law_free(law: *mut BlFamilyLaw) {
    if !law.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(law) });
    }
}

/// Mean family size `Ξ`.
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_family_law_xi(law: *const BlFamilyLaw, out: *mut f64) -> BlStatus {
    guard(|| {
        let l = unsafe { as_ref(law, "law") }?;
        unsafe { write(out, l.0.xi(), "out") }
    })
}

/// `ν_n(j)` for `j = 0..=cap` into `masses` and the mass above `cap` into `tail`.
///
/// # Safety
/// `law` must be a live handle; `masses` must hold `cap + 1` writable values;
/// `tail` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_descendant_distribution(
    law: *const BlFamilyLaw,
    n: usize,
    cap: usize,
    masses: *mut f64,
    tail: *mut f64,
) -> BlStatus {
    guard(|| {
        let l = unsafe { as_ref(law, "law") }?;
        let len = cap.checked_add(1).ok_or_else(|| Error::InvalidInput("cap too large".into()))?;
        let out = unsafe { slice_mut(masses, len, "masses") }?;
        let nu = descendant_distribution(&l.0, n, cap)?;
        for (j, m) in out.iter_mut().enumerate() {
            *m = nu.mass(j);
        }
        unsafe { write(tail, nu.tail_mass(), "tail") }
    })
}

/// `Ψ̂(s)` for `s ∈ [0, 1]`.
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_discrete_mechanism(law: *const BlFamilyLaw, s: f64, out: *mut f64) -> BlStatus {
    guard(|| {
        let l = unsafe { as_ref(law, "law") }?;
        let v = discrete_mechanism(&l.0, s)?;
        unsafe { write(out, v, "out") }
    })
}

/// Euler exponent of the law rescaled by `(h, τ)` at `(q, t)`.
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_euler_exponent(
    law: *const BlFamilyLaw,
    h: f64,
    tau: f64,
    q: f64,
    t: f64,
    out: *mut f64,
) -> BlStatus {
    guard(|| {
        let l = unsafe { as_ref(law, "law") }?;
        let v = euler_exponent(&l.0, Rescaling::new(h, tau)?, q, t)?;
        unsafe { write(out, v, "out") }
    })
}

/// Triple `(α₀, α_∞, Σ weights[i]δ_{locations[i]})`.
///
/// # Safety
/// `locations` and `weights` must hold `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_levy_triple_new(
    alpha0: f64,
    alpha_inf: f64,
    locations: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut *mut BlLevyTriple,
) -> BlStatus {
    guard(|| {
        let x = unsafe { slice(locations, n, "locations") }?;
        let w = unsafe { slice(weights, n, "weights") }?;
        let mu = AtomicMeasure::new(x.iter().copied().zip(w.iter().copied()).collect())?;
        let t = LevyTriple::new(alpha0, alpha_inf, mu)?;
        unsafe { write(out, Box::into_raw(Box::new(BlLevyTriple(t))), "out") }
    })
}

/// Quadrature triple of the `alpha`-stable mechanism `Ψ(q) = q^alpha`, `1 < alpha < 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_levy_triple_stable(alpha: f64, out: *mut *mut BlLevyTriple) -> BlStatus {
    guard(|| {
        let t = LevyTriple::stable(alpha)?;
        unsafe { write(out, Box::into_raw(Box::new(BlLevyTriple(t))), "out") }
    })
}

/// Releases a triple; null is ignored.
///
/// # Safety
/// `triple` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_levy_triple_free(triple: *mut BlLevyTriple) {
    if !triple.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(triple) });
    }
}

/// Bernstein transform `Φ(q)`, `q > 0`.
///
/// # Safety
/// `triple` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_bernstein(triple: *const BlLevyTriple, q: f64, out: *mut f64) -> BlStatus {
    guard(|| {
        let t = unsafe { as_ref(triple, "triple") }?;
        let v = t.0.bernstein_value(q)?;
        unsafe { write(out, v, "out") }
    })
}

/// Branching mechanism `Ψ(q)`, `q ≥ 0`.
///
/// # Safety
/// `triple` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_mechanism(triple: *const BlLevyTriple, q: f64, out: *mut f64) -> BlStatus {
    guard(|| {
        let t = unsafe { as_ref(triple, "triple") }?;
        let v = t.0.mechanism(q)?;
        unsafe { write(out, v, "out") }
    })
}

/// `φ(q, times[i])` for `n_times` increasing times into `out`.
///
/// # Safety
/// `triple` must be a live handle; `times` and `out` must hold `n_times` values.
#[no_mangle]
pub unsafe extern "C" fn bl_solve_exponent(
    triple: *const BlLevyTriple,
    q: f64,
    times: *const f64,
    n_times: usize,
    out: *mut f64,
) -> BlStatus {
    guard(|| {
        let t = unsafe { as_ref(triple, "triple") }?;
        let ts = unsafe { slice(times, n_times, "times") }?;
        let dst = unsafe { slice_mut(out, n_times, "out") }?;
        let v = solve_phi(&t.0, q, ts)?;
        dst.copy_from_slice(&v);
        Ok(())
    })
}
