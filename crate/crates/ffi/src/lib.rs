//! C ABI for the glb-omd bandit library.
//!
//! Policies are opaque heap handles created by [`glb_policy_new`] and released
//! by [`glb_policy_free`]. Every fallible call returns a [`GlbStatus`]; on a
//! non-zero status [`glb_last_error_message`] describes the failure. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use nalgebra::DVector;

use glb_omd::estimators::{beta_radius, configure_params, LambdaMode};
use glb_omd::glm::GlmFamily;
use glb_omd::policies::{build_policy, Policy};
use glb_omd::Error;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Config = 4,
    Contract = 5,
    Numeric = 6,
    Io = 7,
    Panic = 8,
}

/// Reward family codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlbFamily {
    Logistic = 0,
    Poisson = 1,
    Gaussian = 2,
}

/// Policy codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlbPolicyKind {
    GlbOmd = 0,
    GlmUcb = 1,
    Greedy = 2,
}

/// Regularizer modes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlbLambdaMode {
    Theory = 0,
    Practical = 1,
}

/// Opaque policy handle.
pub struct GlbPolicy {
    inner: Box<dyn Policy>,
    d: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(GlbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => GlbStatus::Domain,
            Error::Config(_) | Error::Load { .. } => GlbStatus::Config,
            Error::Contract(_) => GlbStatus::Contract,
            Error::Numeric(_) => GlbStatus::Numeric,
            Error::Io(_) => GlbStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GlbStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> Failure {
    Failure(GlbStatus::InvalidArgument, msg)
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GlbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            GlbStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("panic: {msg}"));
            GlbStatus::Panic
        }
    }
}

fn family_from(code: u32, dispersion: f64) -> Result<GlmFamily, Failure> {
    let name = match code {
        0 => "logistic",
        1 => "poisson",
        2 => "gaussian",
        other => return Err(invalid(format!("unknown family code {other}"))),
    };
    let dispersion = (dispersion > 0.0).then_some(dispersion);
    Ok(GlmFamily::from_name(name, dispersion)?)
}

fn policy_name(code: u32) -> Result<&'static str, Failure> {
    match code {
        0 => Ok("glb-omd"),
        1 => Ok("glm-ucb"),
        2 => Ok("greedy"),
        other => Err(invalid(format!("unknown policy code {other}"))),
    }
}

fn lambda_mode(code: u32) -> Result<LambdaMode, Failure> {
    match code {
        0 => Ok(LambdaMode::Theory),
        1 => Ok(LambdaMode::Practical),
        other => Err(invalid(format!("unknown lambda mode code {other}"))),
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn policy_ref<'a>(p: *const GlbPolicy) -> Result<&'a GlbPolicy, Failure> {
    p.as_ref().ok_or_else(|| null("policy"))
}

unsafe fn floats<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn glb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn glb_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string contains NUL"),
        };
    VERSION.as_ptr()
}

/// Creates a policy. `dispersion <= 0` selects the family default.
/// `radius_scale` only affects GLM-UCB.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn glb_policy_new(
    policy: u32,
    family: u32,
    dispersion: f64,
    d: usize,
    s: f64,
    delta: f64,
    mode: u32,
    radius_scale: f64,
    out: *mut *mut GlbPolicy,
) -> GlbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let fam = family_from(family, dispersion)?;
        let params = configure_params(&fam, d, s, delta, lambda_mode(mode)?)?;
        if !(radius_scale.is_finite() && radius_scale > 0.0) {
            return Err(invalid(format!(
                "radius_scale must be positive, got {radius_scale}"
            )));
        }
        let inner = build_policy(policy_name(policy)?, fam, d, params, radius_scale)?;
        *out = Box::into_raw(Box::new(GlbPolicy { inner, d }));
        Ok(())
    })
}

/// Releases a policy. Null is ignored.
///
/// # Safety
/// `policy` must be null or a handle from [`glb_policy_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn glb_policy_free(policy: *mut GlbPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Parameter dimension of a policy.
///
/// # Safety
/// `policy` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn glb_policy_dim(policy: *const GlbPolicy, out: *mut usize) -> GlbStatus {
    guard(|| {
        let p = policy_ref(policy)?;
        write_out(out, p.d, "out")
    })
}

/// Chooses among `k` arms stored row-major in `actions` (`k * d` values).
///
/// # Safety
/// `actions` must point to `k * d` readable doubles and `out_index` be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn glb_policy_select(
    policy: *const GlbPolicy,
    actions: *const f64,
    k: usize,
    out_index: *mut usize,
) -> GlbStatus {
    guard(|| {
        let p = policy_ref(policy)?;
        let len = k
            .checked_mul(p.d)
            .ok_or_else(|| invalid("k * d overflows".into()))?;
        let flat = floats(actions, len, "actions")?;
        let arms: Vec<DVector<f64>> = flat
            .chunks_exact(p.d)
            .map(DVector::from_column_slice)
            .collect();
        let sel = p.inner.select(&arms)?;
        write_out(out_index, sel.index, "out_index")
    })
}

/// Feeds back the reward `r` for action `x` of length `d`.
///
/// # Safety
/// `policy` must be a live handle not used concurrently; `x` must point to
/// `d` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn glb_policy_observe(
    policy: *mut GlbPolicy,
    x: *const f64,
    d: usize,
    r: f64,
) -> GlbStatus {
    guard(|| {
        let p = policy.as_mut().ok_or_else(|| null("policy"))?;
        if d != p.d {
            return Err(invalid(format!("action has length {d}, expected {}", p.d)));
        }
        let x = DVector::from_column_slice(floats(x, d, "x")?);
        Ok(p.inner.observe(&x, r)?)
    })
}

/// Exploration radius for the next selection.
///
/// # Safety
/// `policy` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn glb_policy_beta(policy: *const GlbPolicy, out: *mut f64) -> GlbStatus {
    guard(|| {
        let p = policy_ref(policy)?;
        write_out(out, p.inner.beta(), "out")
    })
}

/// Copies the current estimate into `out`, which holds `len` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn glb_policy_estimate(
    policy: *const GlbPolicy,
    out: *mut f64,
    len: usize,
) -> GlbStatus {
    guard(|| {
        let p = policy_ref(policy)?;
        if len != p.d {
            return Err(invalid(format!(
                "buffer holds {len} values, expected {}",
                p.d
            )));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(p.inner.estimate().as_slice());
        Ok(())
    })
}

/// Link function `mu(z)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glb_link_mu(
    family: u32,
    dispersion: f64,
    z: f64,
    out: *mut f64,
) -> GlbStatus {
    guard(|| write_out(out, family_from(family, dispersion)?.mu(z)?, "out"))
}

/// Link slope `mu'(z)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glb_link_mu_prime(
    family: u32,
    dispersion: f64,
    z: f64,
    out: *mut f64,
) -> GlbStatus {
    guard(|| write_out(out, family_from(family, dispersion)?.mu_prime(z)?, "out"))
}

/// `1 / inf mu'` over `[-S, S]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glb_kappa(
    family: u32,
    dispersion: f64,
    s: f64,
    out: *mut f64,
) -> GlbStatus {
    guard(|| {
        write_out(
            out,
            family_from(family, dispersion)?.bounds(s)?.kappa,
            "out",
        )
    })
}

/// Confidence radius after `t` rounds for the given configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn glb_beta_radius(
    family: u32,
    dispersion: f64,
    d: usize,
    s: f64,
    delta: f64,
    mode: u32,
    t: usize,
    out: *mut f64,
) -> GlbStatus {
    guard(|| {
        let fam = family_from(family, dispersion)?;
        let params = configure_params(&fam, d, s, delta, lambda_mode(mode)?)?;
        write_out(out, beta_radius(&params, &fam, d, t), "out")
    })
}
