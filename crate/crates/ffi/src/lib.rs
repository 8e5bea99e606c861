//! C ABI over `generic-adam`.
//!
//! Every fallible function returns a [`GadamStatus`]. On failure a message is
//! kept per thread and can be copied out with [`gadam_last_error_message`].
//! Objects are opaque handles created by `*_new`/`gadam_schedule_*` functions
//! and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use generic_adam::schedule::{
    check_sufficient_condition, classify_exponents, power_law_schedule, presets, PowerLawFamily,
};
use generic_adam::{AdamState, BoxConstraint, ParameterSchedule, RateClass, WeightedState};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ScheduleError = 3,
    OptimizerError = 4,
    NotFound = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadamRateClass {
    PolyHalfR = 0,
    LogOverPower = 1,
    Poly = 2,
    NotConvergent = 3,
}

/// Schedule handle.
pub struct GadamSchedule(ParameterSchedule);

/// Generic Adam state handle, with an optional box constraint.
pub struct GadamAdam {
    state: AdamState,
    bounds: Option<BoxConstraint>,
}

/// Weighted AdaEMA state handle.
pub struct GadamWeighted {
    state: WeightedState,
    bounds: Option<BoxConstraint>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(GadamStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(GadamStatus::NullPointer, format!("{what} is null"))
    }

    fn arg(msg: impl Into<String>) -> Self {
        Failure(GadamStatus::InvalidArgument, msg.into())
    }
}

impl From<generic_adam::ScheduleError> for Failure {
    fn from(e: generic_adam::ScheduleError) -> Self {
        Failure(GadamStatus::ScheduleError, e.to_string())
    }
}

impl From<generic_adam::OptimError> for Failure {
    fn from(e: generic_adam::OptimError) -> Self {
        Failure(GadamStatus::OptimizerError, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GadamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GadamStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GadamStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn make_box(lo: f64, hi: f64) -> Result<BoxConstraint, Failure> {
    BoxConstraint::uniform(lo, hi).map_err(|_| Failure::arg(format!("box [{lo}, {hi}] is empty")))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gadam_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gadam_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Looks up a named preset (`adaema`, `adamnc`, `rmsprop`, `adam`,
/// `nosadam-hh`, `weighted-poly`, `beta-one`); tabulated presets cover
/// `horizon` steps.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gadam_schedule_preset(
    name: *const c_char,
    horizon: u64,
    out: *mut *mut GadamSchedule,
) -> GadamStatus {
    guard(|| {
        if name.is_null() {
            return Err(Failure::null("name"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Failure::arg("name is not UTF-8"))?;
        match presets::by_name(name, horizon.max(1))? {
            Some(s) => put(out, GadamSchedule(s)),
            None => Err(Failure(
                GadamStatus::NotFound,
                format!("unknown preset `{name}`"),
            )),
        }
    })
}

/// `alpha_t = eta/t^s`, `theta_t = 1 - numerator/max(t, K)^r` with the
/// smallest admissible cutoff `K`, constant `beta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gadam_schedule_power_law(
    eta: f64,
    s: f64,
    numerator: f64,
    r: f64,
    beta: f64,
    out: *mut *mut GadamSchedule,
) -> GadamStatus {
    guard(|| {
        let fam = PowerLawFamily::with_min_cutoff(eta, s, numerator, r, beta)?;
        put(out, GadamSchedule(power_law_schedule(fam)?))
    })
}

/// # Safety
/// `sched` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gadam_schedule_free(sched: *mut GadamSchedule) {
    free(sched)
}

/// Writes `(alpha_t, beta_t, theta_t)` for step `t >= 1`.
///
/// # Safety
/// `sched` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gadam_schedule_eval(
    sched: *const GadamSchedule,
    t: u64,
    alpha: *mut f64,
    beta: *mut f64,
    theta: *mut f64,
) -> GadamStatus {
    guard(|| {
        let tr = as_ref(sched, "sched")?.0.eval(t)?;
        *as_mut(alpha, "alpha")? = tr.alpha;
        *as_mut(beta, "beta")? = tr.beta;
        *as_mut(theta, "theta")? = tr.theta;
        Ok(())
    })
}

/// Runs the sufficient-condition checker over `horizon` steps and stores 1
/// (satisfied) or 0 in `satisfied`.
///
/// # Safety
/// `sched` must be a live handle; `satisfied` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gadam_schedule_check(
    sched: *const GadamSchedule,
    horizon: u64,
    satisfied: *mut i32,
) -> GadamStatus {
    guard(|| {
        let report = check_sufficient_condition(&as_ref(sched, "sched")?.0, horizon)?;
        *as_mut(satisfied, "satisfied")? = i32::from(report.overall);
        Ok(())
    })
}

/// Rate class of the power-law family with exponents `(r, s)`; the decay
/// exponent (0 when not convergent) goes to `exponent` if it is non-null.
///
/// # Safety
/// `class` must be writable; `exponent` may be null.
#[no_mangle]
pub unsafe extern "C" fn gadam_classify_rate(
    r: f64,
    s: f64,
    class: *mut GadamRateClass,
    exponent: *mut f64,
) -> GadamStatus {
    guard(|| {
        let rc = classify_exponents(r, s);
        *as_mut(class, "class")? = match rc {
            RateClass::PolyHalfR { .. } => GadamRateClass::PolyHalfR,
            RateClass::LogOverPower { .. } => GadamRateClass::LogOverPower,
            RateClass::Poly { .. } => GadamRateClass::Poly,
            RateClass::NotConvergent => GadamRateClass::NotConvergent,
        };
        if let Some(e) = exponent.as_mut() {
            *e = rc.exponent();
        }
        Ok(())
    })
}

/// Generic Adam state at `x1` (length `dim`) with `v_0 = eps`.
///
/// # Safety
/// `x1` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gadam_adam_new(
    x1: *const f64,
    dim: usize,
    eps: f64,
    out: *mut *mut GadamAdam,
) -> GadamStatus {
    guard(|| {
        let x1 = slice(x1, dim, "x1")?.to_vec();
        put(
            out,
            GadamAdam {
                state: AdamState::new(x1, eps)?,
                bounds: None,
            },
        )
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gadam_adam_free(state: *mut GadamAdam) {
    free(state)
}

/// Projects every coordinate onto `[lo, hi]` after each step.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gadam_adam_set_box(
    state: *mut GadamAdam,
    lo: f64,
    hi: f64,
) -> GadamStatus {
    guard(|| {
        as_mut(state, "state")?.bounds = Some(make_box(lo, hi)?);
        Ok(())
    })
}

/// One step with gradient `g` (length `dim`), using the schedule at the next
/// step index.
///
/// # Safety
/// Handles must be live; `g` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn gadam_adam_step(
    state: *mut GadamAdam,
    sched: *const GadamSchedule,
    g: *const f64,
    dim: usize,
) -> GadamStatus {
    guard(|| {
        let st = as_mut(state, "state")?;
        let sched = &as_ref(sched, "sched")?.0;
        let g = slice(g, dim, "g")?;
        st.state.step(g, sched, st.bounds.as_ref())?;
        Ok(())
    })
}

/// Copies the iterate into `x` (capacity `dim`, which must equal the state's
/// dimension).
///
/// # Safety
/// `state` must be a live handle; `x` must point to `dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gadam_adam_get_x(
    state: *const GadamAdam,
    x: *mut f64,
    dim: usize,
) -> GadamStatus {
    guard(|| {
        let st = as_ref(state, "state")?;
        copy_out(&st.state.x, x, dim)
    })
}

/// Number of steps taken so far.
///
/// # Safety
/// `state` must be null or a live handle; returns 0 for null.
#[no_mangle]
pub unsafe extern "C" fn gadam_adam_steps(state: *const GadamAdam) -> u64 {
    state.as_ref().map_or(0, |s| s.state.t)
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, dim: usize) -> Result<(), Failure> {
    if dim != src.len() {
        return Err(Failure::arg(format!(
            "buffer holds {dim} values, state has {}",
            src.len()
        )));
    }
    if dim > 0 && dst.is_null() {
        return Err(Failure::null("x"));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), dst, dim);
    Ok(())
}

/// Weighted AdaEMA state at `x1` with `V_0 = eps`, `W_0 = 1`.
///
/// # Safety
/// `x1` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gadam_weighted_new(
    x1: *const f64,
    dim: usize,
    eps: f64,
    out: *mut *mut GadamWeighted,
) -> GadamStatus {
    guard(|| {
        let x1 = slice(x1, dim, "x1")?.to_vec();
        put(
            out,
            GadamWeighted {
                state: WeightedState::new(x1, eps)?,
                bounds: None,
            },
        )
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gadam_weighted_free(state: *mut GadamWeighted) {
    free(state)
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gadam_weighted_set_box(
    state: *mut GadamWeighted,
    lo: f64,
    hi: f64,
) -> GadamStatus {
    guard(|| {
        as_mut(state, "state")?.bounds = Some(make_box(lo, hi)?);
        Ok(())
    })
}

/// One step with weight `w`, base rate `alpha` and momentum `beta`.
///
/// # Safety
/// `state` must be a live handle; `g` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn gadam_weighted_step(
    state: *mut GadamWeighted,
    g: *const f64,
    dim: usize,
    w: f64,
    alpha: f64,
    beta: f64,
) -> GadamStatus {
    guard(|| {
        let st = as_mut(state, "state")?;
        let g = slice(g, dim, "g")?;
        st.state.step(g, w, alpha, beta, st.bounds.as_ref())?;
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle; `x` must point to `dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gadam_weighted_get_x(
    state: *const GadamWeighted,
    x: *mut f64,
    dim: usize,
) -> GadamStatus {
    guard(|| copy_out(&as_ref(state, "state")?.state.x, x, dim))
}
