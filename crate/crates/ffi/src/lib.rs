//! C interface to the reverting process library.
//!
//! Objects cross the boundary as opaque handles created by `rv_*_new` or a
//! computing function and released with the matching `rv_*_free`. Every
//! function returns an [`RvStatus`]; on failure a description is available
//! from [`rv_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use reverting::branching::{self, OffspringLaw};
use reverting::clock;
use reverting::integral;
use reverting::nonuniform;
use reverting::occasional;
use reverting::suite::{self, Suite};
use reverting::walk;
use reverting::{Error, Pmf, RandomStream, ReversionLaw};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeLimit = 3,
    Invariant = 4,
    Unnormalized = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A probability mass function on the integers.
pub struct RvPmf {
    inner: Pmf,
}

/// A seeded random stream.
pub struct RvStream {
    inner: RandomStream,
}

/// An offspring law on `{0, 1, ..., d}`.
pub struct RvOffspring {
    inner: OffspringLaw,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RvStatus {
    match e {
        Error::Configuration(_) | Error::Precondition(_) => RvStatus::InvalidArgument,
        Error::Size { .. } => RvStatus::SizeLimit,
        Error::Invariant(_) => RvStatus::Invariant,
        Error::Unnormalized(_) => RvStatus::Unnormalized,
        Error::Io(_) => RvStatus::Io,
    }
}

struct Failure(RvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null() -> Failure {
    Failure(RvStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RvStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(null)
}

unsafe fn in_ref<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `s` with a terminating NUL into `buf` when it fits. `needed`
/// (optional) receives the required capacity including the NUL.
unsafe fn write_string(s: &str, buf: *mut c_char, capacity: usize, needed: *mut usize) -> Result<(), Failure> {
    let bytes = s.as_bytes();
    if let Some(n) = needed.as_mut() {
        *n = bytes.len() + 1;
    }
    if buf.is_null() || capacity < bytes.len() + 1 {
        return Err(Failure(
            RvStatus::BufferTooSmall,
            format!("buffer of {capacity} bytes cannot hold {} bytes", bytes.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
    *buf.add(bytes.len()) = 0;
    Ok(())
}

unsafe fn emit_pmf(pmf: Pmf, out: *mut *mut RvPmf) -> Result<(), Failure> {
    let slot = out_ref(out)?;
    *slot = Box::into_raw(Box::new(RvPmf { inner: pmf }));
    Ok(())
}

/// Message for the last failed call on this thread (empty after success).
/// The pointer stays valid until the next library call on the thread.
#[no_mangle]
pub extern "C" fn rv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Law of the uniform clock `T_n`. `tail_tolerance = 0` gives exact values.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn rv_clock_pmf(n: usize, tail_tolerance: f64, out: *mut *mut RvPmf) -> RvStatus {
    guard(|| emit_pmf(clock::clock_pmf(n, tail_tolerance)?, out))
}

/// Law of `T_n` under explicit reversion weights `alpha_1..alpha_len`.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_weighted_clock_pmf(
    weights: *const f64,
    len: usize,
    n: usize,
    tail_tolerance: f64,
    out: *mut *mut RvPmf,
) -> RvStatus {
    guard(|| {
        let law = ReversionLaw::explicit(in_slice(weights, len)?.to_vec())?;
        emit_pmf(nonuniform::weighted_clock_pmf(&law, n, tail_tolerance)?, out)
    })
}

/// Law of `T_n` under power-law weights `alpha_k = k^beta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_power_clock_pmf(beta: f64, n: usize, tail_tolerance: f64, out: *mut *mut RvPmf) -> RvStatus {
    guard(|| emit_pmf(nonuniform::weighted_clock_pmf(&ReversionLaw::power(beta), n, tail_tolerance)?, out))
}

/// Law of `T_n` for the occasionally reverting clock.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_occasional_pmf(n: usize, q: f64, tail_tolerance: f64, out: *mut *mut RvPmf) -> RvStatus {
    guard(|| emit_pmf(occasional::occasional_pmf(n, q, tail_tolerance)?, out))
}

/// Exact law of the simple reverting walk `R_n` (`n <= 13`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_walk_pmf_simple(n: usize, p: f64, out: *mut *mut RvPmf) -> RvStatus {
    guard(|| emit_pmf(walk::walk_pmf_simple(n, p)?, out))
}

/// Releases a pmf handle. Null is ignored.
///
/// # Safety
/// `pmf` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rv_pmf_free(pmf: *mut RvPmf) {
    if !pmf.is_null() {
        drop(Box::from_raw(pmf));
    }
}

/// Support bounds and number of atoms.
///
/// # Safety
/// `pmf` must be a live handle; the output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn rv_pmf_support(pmf: *const RvPmf, min_value: *mut i64, max_value: *mut i64, len: *mut usize) -> RvStatus {
    guard(|| {
        let p = &in_ref(pmf)?.inner;
        if let Some(x) = min_value.as_mut() {
            *x = p.min_value();
        }
        if let Some(x) = max_value.as_mut() {
            *x = p.max_value();
        }
        if let Some(x) = len.as_mut() {
            *x = p.len();
        }
        Ok(())
    })
}

/// `P(X = value)`.
///
/// # Safety
/// `pmf` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rv_pmf_prob(pmf: *const RvPmf, value: i64, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_ref(out)? = in_ref(pmf)?.inner.prob(value);
        Ok(())
    })
}

/// Copies the probabilities of `min_value..=max_value` into `buf`.
///
/// # Safety
/// `buf` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn rv_pmf_probs(pmf: *const RvPmf, buf: *mut f64, capacity: usize) -> RvStatus {
    guard(|| {
        let probs = in_ref(pmf)?.inner.probs();
        if buf.is_null() || capacity < probs.len() {
            return Err(Failure(
                RvStatus::BufferTooSmall,
                format!("need room for {} values", probs.len()),
            ));
        }
        ptr::copy_nonoverlapping(probs.as_ptr(), buf, probs.len());
        Ok(())
    })
}

/// Mean, variance and the tail mass removed by truncation.
///
/// # Safety
/// `pmf` must be a live handle; the output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn rv_pmf_summary(pmf: *const RvPmf, mean: *mut f64, variance: *mut f64, dropped_mass: *mut f64) -> RvStatus {
    guard(|| {
        let p = &in_ref(pmf)?.inner;
        if let Some(x) = mean.as_mut() {
            *x = p.mean();
        }
        if let Some(x) = variance.as_mut() {
            *x = p.variance();
        }
        if let Some(x) = dropped_mass.as_mut() {
            *x = p.dropped_mass();
        }
        Ok(())
    })
}

/// 1 when exact rational probabilities are available, else 0.
///
/// # Safety
/// `pmf` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn rv_pmf_is_exact(pmf: *const RvPmf) -> c_int {
    pmf.as_ref().map_or(0, |p| p.inner.is_exact() as c_int)
}

/// Exact `P(X = value)` as a decimal fraction string such as `"11/48"`.
///
/// # Safety
/// `buf` must have room for `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn rv_pmf_exact_prob(
    pmf: *const RvPmf,
    value: i64,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> RvStatus {
    guard(|| {
        let r = in_ref(pmf)?
            .inner
            .exact_prob(value)
            .ok_or_else(|| Failure(RvStatus::InvalidArgument, "pmf has no exact probabilities".into()))?;
        write_string(&r.to_string(), buf, capacity, needed)
    })
}

/// `(m_n, v_n)` of the uniform clock.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_clock_moments(n: usize, mean: *mut f64, variance: *mut f64) -> RvStatus {
    guard(|| {
        let m = clock::clock_moments(n)?;
        *out_ref(mean)? = m.mean;
        *out_ref(variance)? = m.variance;
        Ok(())
    })
}

/// Mean, second moment and variance of the occasionally reverting clock.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_occasional_moments(
    n: usize,
    q: f64,
    mean: *mut f64,
    second_moment: *mut f64,
    variance: *mut f64,
) -> RvStatus {
    guard(|| {
        let m = occasional::occasional_moments(n, q)?;
        *out_ref(mean)? = m.mean;
        *out_ref(second_moment)? = m.second_moment;
        *out_ref(variance)? = m.variance;
        Ok(())
    })
}

/// `Var M_n` for the time-integral martingale.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_martingale_variance(n: usize, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_ref(out)? = integral::martingale_variance(n)?.variance;
        Ok(())
    })
}

/// `Cov(T_n, T_{n+m})` (`n >= 2`, `m >= 1`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_clock_covariance(n: usize, m: usize, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_ref(out)? = integral::clock_covariance(n, m)?;
        Ok(())
    })
}

/// Unsigned Stirling number of the first kind `[n, k]` as a decimal string.
///
/// # Safety
/// `buf` must have room for `capacity` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn rv_stirling_first(n: usize, k: usize, buf: *mut c_char, capacity: usize, needed: *mut usize) -> RvStatus {
    guard(|| write_string(&clock::stirling_first(n, k)?.to_string(), buf, capacity, needed))
}

/// `G(s, z)` for the occasionally reverting clock.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_occasional_gf(s: f64, z: f64, q: f64, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_ref(out)? = occasional::occasional_bivariate_gf(s, z, q)?;
        Ok(())
    })
}

/// Creates a random stream; equal `(seed, stream)` pairs replay exactly.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_stream_new(seed: u64, stream: u64, out: *mut *mut RvStream) -> RvStatus {
    guard(|| {
        *out_ref(out)? = Box::into_raw(Box::new(RvStream {
            inner: RandomStream::new(seed, stream),
        }));
        Ok(())
    })
}

/// Releases a stream handle. Null is ignored.
///
/// # Safety
/// `stream` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rv_stream_free(stream: *mut RvStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Simulates `T_1..T_n` of the uniform clock into `values`.
///
/// # Safety
/// `values` must have room for `n` integers.
#[no_mangle]
pub unsafe extern "C" fn rv_simulate_clock(stream: *mut RvStream, n: usize, values: *mut u64) -> RvStatus {
    guard(|| {
        let rng = &mut out_ref(stream)?.inner;
        let t = clock::simulate_clock_recursive(n, rng)?;
        copy_values(&t.values, values)
    })
}

/// Simulates `T_1..T_n` of the occasionally reverting clock into `values`.
///
/// # Safety
/// `values` must have room for `n` integers.
#[no_mangle]
pub unsafe extern "C" fn rv_simulate_occasional(stream: *mut RvStream, n: usize, q: f64, values: *mut u64) -> RvStatus {
    guard(|| {
        let rng = &mut out_ref(stream)?.inner;
        let t = occasional::simulate_occasional(n, q, rng)?;
        copy_values(&t.values, values)
    })
}

unsafe fn copy_values(src: &[u64], dst: *mut u64) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(null());
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Creates an offspring law from `P(Z = 0), ..., P(Z = len - 1)`.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_offspring_new(probs: *const f64, len: usize, out: *mut *mut RvOffspring) -> RvStatus {
    guard(|| {
        let law = OffspringLaw::new(in_slice(probs, len)?.to_vec())?;
        *out_ref(out)? = Box::into_raw(Box::new(RvOffspring { inner: law }));
        Ok(())
    })
}

/// Releases an offspring handle. Null is ignored.
///
/// # Safety
/// `law` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rv_offspring_free(law: *mut RvOffspring) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// `H_n(s)`, the p.g.f. of the reverting Galton-Watson population.
///
/// # Safety
/// `law` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rv_reverting_gw_pgf(law: *const RvOffspring, n: usize, s: f64, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_ref(out)? = branching::reverting_gw_pgf(n, &in_ref(law)?.inner, s)?;
        Ok(())
    })
}

/// `P(X_n = 0)`.
///
/// # Safety
/// `law` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rv_extinction_probability(law: *const RvOffspring, n: usize, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_ref(out)? = branching::extinction_probability(n, &in_ref(law)?.inner)?;
        Ok(())
    })
}

/// Runs a verification suite (`"all"`, `"clock"`, ...). `passed` receives
/// 1 when every check passed.
///
/// # Safety
/// `suite_name` must be a NUL-terminated string; `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn rv_verify(suite_name: *const c_char, seed: u64, passed: *mut c_int) -> RvStatus {
    guard(|| {
        if suite_name.is_null() {
            return Err(null());
        }
        let name = CStr::from_ptr(suite_name)
            .to_str()
            .map_err(|_| Failure(RvStatus::InvalidArgument, "suite name is not UTF-8".into()))?;
        let suite: Suite = name.parse()?;
        let report = suite::run_suite(suite, seed);
        *out_ref(passed)? = report.passed as c_int;
        if !report.passed {
            let names: Vec<&str> = report.failures().map(|c| c.name).collect();
            return Err(Failure(RvStatus::Invariant, format!("failed checks: {}", names.join(", "))));
        }
        Ok(())
    })
}
