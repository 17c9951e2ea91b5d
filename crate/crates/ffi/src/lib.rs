//! C ABI over `photon_slh`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns a [`PsStatus`]; on failure the message is
//! available from [`ps_last_error`] on the same thread.
//!
//! Complex numbers cross the boundary as interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use photon_slh::io::{model_from_json, model_to_json};
use photon_slh::pulse::{shape_fft, shape_ode, ShapeResult};
use photon_slh::slh::{feedback_reduce, series_product};
use photon_slh::{Error, PhotonTransfer, Pulse, PulseShape, SlhModel, UniformGrid};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    /// Model fails the single-photon linearity conditions or is unstable.
    Condition = 4,
    /// Time grid too short or too coarse for the filter.
    GridInsufficient = 5,
    SingularLoop = 6,
    Panic = 7,
}

pub struct PsModel(SlhModel);
pub struct PsTransfer(PhotonTransfer);
pub struct PsPulse(Pulse);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::Validation(_) | Error::Unstable(_) | Error::SelfTest(_) | Error::NotUnitary(_) | Error::NotHermitian(_) => {
            PsStatus::Condition
        }
        Error::GridTooShort { .. } | Error::GridTooCoarse { .. } => PsStatus::GridInsufficient,
        Error::SingularLoop(_) => PsStatus::SingularLoop,
        Error::Parse(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_) => PsStatus::Parse,
        _ => PsStatus::InvalidArgument,
    }
}

struct Fail(PsStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail(status_of(&e))
    }
}

fn null(what: &str) -> Fail {
    set_error(format!("{what} is null"));
    Fail(PsStatus::NullPointer)
}

fn invalid(msg: impl Into<String>) -> Fail {
    set_error(msg.into());
    Fail(PsStatus::InvalidArgument)
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PsStatus::Ok
        }
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_error("internal panic".into());
            PsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or an empty string.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_from_json(json: *const c_char, out: *mut *mut PsModel) -> PsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| invalid(format!("json is not UTF-8: {e}")))?;
        put(out, PsModel(model_from_json(text)?))
    })
}

/// Single-channel two-level emitter with decay rate `kappa` and transition
/// frequency `omega_c`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_two_level(kappa: f64, omega_c: f64, out: *mut *mut PsModel) -> PsStatus {
    guard(|| {
        if !(kappa > 0.0 && kappa.is_finite() && omega_c.is_finite()) {
            return Err(invalid(format!("need kappa > 0 and finite omega_c, got {kappa}, {omega_c}")));
        }
        put(out, PsModel(SlhModel::two_level(kappa, omega_c)))
    })
}

/// Serializes a model to JSON. Release the string with [`ps_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_to_json(model: *const PsModel, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let m = get(model, "model")?;
        let s = CString::new(model_to_json(&m.0)).map_err(|e| invalid(e.to_string()))?;
        write(out, s.into_raw())
    })
}

/// # Safety
/// `model` must be a live handle; the outputs must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn ps_model_dims(model: *const PsModel, channels: *mut usize, levels: *mut usize) -> PsStatus {
    guard(|| {
        let m = get(model, "model")?;
        if !channels.is_null() {
            *channels = m.0.channels();
        }
        if !levels.is_null() {
            *levels = m.0.levels();
        }
        Ok(())
    })
}

/// Checks the single-photon linearity conditions. `passed` receives 1 or 0;
/// the call itself succeeds either way.
///
/// # Safety
/// `model` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_validate(model: *const PsModel, tol: f64, passed: *mut i32) -> PsStatus {
    guard(|| {
        let m = get(model, "model")?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid(format!("tolerance must be positive, got {tol}")));
        }
        write(passed, m.0.validate(tol).passed as i32)
    })
}

/// Series product: the photon passes `first`, then `second`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_series(
    first: *const PsModel,
    second: *const PsModel,
    out: *mut *mut PsModel,
) -> PsStatus {
    guard(|| {
        let a = get(first, "first")?;
        let b = get(second, "second")?;
        put(out, PsModel(series_product(&b.0, &a.0)?))
    })
}

/// Feeds output channel 2 of a two-channel model back into input channel 2.
/// `delta` receives the frequency shift and may be null.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_feedback(model: *const PsModel, out: *mut *mut PsModel, delta: *mut f64) -> PsStatus {
    guard(|| {
        let m = get(model, "model")?;
        let red = feedback_reduce(&m.0)?;
        if !delta.is_null() {
            *delta = red.delta;
        }
        put(out, PsModel(red.model))
    })
}

/// # Safety
/// `model` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_model_free(model: *mut PsModel) {
    free(model)
}

/// Extracts the photon transfer function of a validated model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_transfer_from_model(model: *const PsModel, tol: f64, out: *mut *mut PsTransfer) -> PsStatus {
    guard(|| {
        let m = get(model, "model")?;
        put(out, PsTransfer(PhotonTransfer::from_model(&m.0, tol)?))
    })
}

/// Cascade: the photon passes `first`, then `next`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_transfer_cascade(
    first: *const PsTransfer,
    next: *const PsTransfer,
    out: *mut *mut PsTransfer,
) -> PsStatus {
    guard(|| {
        let a = get(first, "first")?;
        let b = get(next, "next")?;
        put(out, PsTransfer(a.0.cascade(&b.0)?))
    })
}

/// # Safety
/// `transfer` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_transfer_channels(transfer: *const PsTransfer, out: *mut usize) -> PsStatus {
    guard(|| {
        let t = get(transfer, "transfer")?;
        write(out, t.0.channels())
    })
}

/// Writes the `n x n` response matrix at `omega` row-major into `out` as
/// `2 n²` interleaved doubles. `len` is the capacity of `out` in doubles.
///
/// # Safety
/// `transfer` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_transfer_response(
    transfer: *const PsTransfer,
    omega: f64,
    out: *mut f64,
    len: usize,
) -> PsStatus {
    guard(|| {
        let t = get(transfer, "transfer")?;
        let n = t.0.channels();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < 2 * n * n {
            return Err(invalid(format!("response needs {} doubles, buffer holds {len}", 2 * n * n)));
        }
        let g = t.0.response_at(omega);
        let dst = std::slice::from_raw_parts_mut(out, 2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = g[(i, j)];
                dst[2 * (i * n + j)] = z.re;
                dst[2 * (i * n + j) + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `transfer` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_transfer_free(transfer: *mut PsTransfer) {
    free(transfer)
}

/// Sampled pulse on `t_start + k dt`, `k < len`. `samples` holds
/// `2 len n_channels` doubles, channel-major and interleaved.
/// `len` must be a power of two.
///
/// # Safety
/// `samples` must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_pulse_from_samples(
    t_start: f64,
    dt: f64,
    len: usize,
    n_channels: usize,
    samples: *const f64,
    out: *mut *mut PsPulse,
) -> PsStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null("samples"));
        }
        let grid = UniformGrid::new(t_start, dt, len)?;
        let raw = std::slice::from_raw_parts(samples, 2 * len * n_channels);
        let channels = raw
            .chunks_exact(2 * len)
            .map(|ch| ch.chunks_exact(2).map(|z| Complex64::new(z[0], z[1])).collect())
            .collect();
        put(out, PsPulse(Pulse::sampled(grid, channels)?))
    })
}

/// Normalized Gaussian wavepacket in `channel`, vacuum elsewhere.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_pulse_gaussian(
    t_start: f64,
    dt: f64,
    len: usize,
    n_channels: usize,
    channel: usize,
    center: f64,
    width: f64,
    carrier: f64,
    out: *mut *mut PsPulse,
) -> PsStatus {
    guard(|| {
        let grid = UniformGrid::new(t_start, dt, len)?;
        let shape = PulseShape::Gaussian { center, width, carrier };
        put(out, PsPulse(Pulse::analytic(shape, grid, n_channels, channel)?))
    })
}

/// # Safety
/// `pulse` must be a live handle; the outputs must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn ps_pulse_dims(pulse: *const PsPulse, len: *mut usize, n_channels: *mut usize) -> PsStatus {
    guard(|| {
        let p = get(pulse, "pulse")?;
        if !len.is_null() {
            *len = p.0.len();
        }
        if !n_channels.is_null() {
            *n_channels = p.0.n_channels();
        }
        Ok(())
    })
}

/// Copies one channel into `out` as `2 len` interleaved doubles.
///
/// # Safety
/// `pulse` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_pulse_samples(pulse: *const PsPulse, channel: usize, out: *mut f64, cap: usize) -> PsStatus {
    guard(|| {
        let p = get(pulse, "pulse")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if channel >= p.0.n_channels() {
            return Err(invalid(format!("channel {channel} out of range for {} channels", p.0.n_channels())));
        }
        let src = p.0.channel(channel);
        if cap < 2 * src.len() {
            return Err(invalid(format!("samples need {} doubles, buffer holds {cap}", 2 * src.len())));
        }
        let dst = std::slice::from_raw_parts_mut(out, 2 * src.len());
        for (d, z) in dst.chunks_exact_mut(2).zip(src) {
            d[0] = z.re;
            d[1] = z.im;
        }
        Ok(())
    })
}

/// L² norm over all channels.
///
/// # Safety
/// `pulse` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_pulse_norm(pulse: *const PsPulse, out: *mut f64) -> PsStatus {
    guard(|| {
        let p = get(pulse, "pulse")?;
        write(out, p.0.norm())
    })
}

/// # Safety
/// `pulse` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_pulse_free(pulse: *mut PsPulse) {
    free(pulse)
}

unsafe fn shape_with(
    f: fn(&Pulse, &PhotonTransfer) -> photon_slh::Result<ShapeResult>,
    pulse: *const PsPulse,
    transfer: *const PsTransfer,
    out: *mut *mut PsPulse,
) -> PsStatus {
    guard(|| {
        let p = get(pulse, "pulse")?;
        let t = get(transfer, "transfer")?;
        put(out, PsPulse(f(&p.0, &t.0)?.output))
    })
}

/// Output wavepacket via frequency-domain filtering.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_shape_fft(pulse: *const PsPulse, transfer: *const PsTransfer, out: *mut *mut PsPulse) -> PsStatus {
    shape_with(shape_fft, pulse, transfer, out)
}

/// Output wavepacket via time-domain integration of the single-stage filter.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_shape_ode(pulse: *const PsPulse, transfer: *const PsTransfer, out: *mut *mut PsPulse) -> PsStatus {
    shape_with(shape_ode, pulse, transfer, out)
}
