//! C ABI over the wgqed engine.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`WgqedStatus`]; on failure the message is available from
//! [`wgqed_last_error`] on the same thread until the next failing call.
//! Panics never unwind into C: they are caught and reported as
//! [`WgqedStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64 as C64;
use wgqed::analysis::fit_exponential_rate;
use wgqed::dynamics::{evolve, EvolutionConfig};
use wgqed::reduced::{analytic_slow_decay, forcing_bessel};
use wgqed::scenario::{run_scenario, ScenarioConfig};
use wgqed::state::{make_slow_decay_state, make_virtual_bound_state};
use wgqed::{DecayTrace, Error, JointState, LatticeModel, Waveguide};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WgqedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    /// Time step or Volterra step outside its stability limit.
    Unstable = 4,
    /// Norm left its tolerance during propagation.
    NormDrift = 5,
    /// Requested duration reaches the lattice boundary.
    EdgeHorizon = 6,
    /// A fit or comparison could not be carried out on the data.
    Analysis = 7,
    Io = 8,
    Parse = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WgqedComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for WgqedComplex {
    fn from(z: C64) -> Self {
        WgqedComplex { re: z.re, im: z.im }
    }
}

impl From<WgqedComplex> for C64 {
    fn from(z: WgqedComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

/// Golden-rule constants of a model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WgqedMarkov {
    pub gamma_r: f64,
    pub gamma_i: f64,
    pub v_g: f64,
    pub k0: f64,
}

/// Propagation settings. Obtain defaults from
/// [`wgqed_evolution_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WgqedEvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub sample_every: usize,
    pub norm_tolerance: f64,
    pub edge_guard: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WgqedRateFit {
    pub rate_probability: f64,
    pub rate_amplitude: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub n_samples: usize,
}

/// Opaque lattice model.
pub struct WgqedModel(LatticeModel);

/// Opaque joint emitter-photon state.
pub struct WgqedState(JointState);

/// Opaque sampled emitter trajectory.
pub struct WgqedTrace(DecayTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(WgqedStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::InvalidParameter { .. }
            | Error::NoResonance
            | Error::PacketTooLarge { .. }
            | Error::TailTruncated { .. }
            | Error::GridTooSmall { .. }
            | Error::DimensionMismatch { .. }
            | Error::NotNormalized { .. } => WgqedStatus::InvalidArgument,
            Error::StabilityGuard { .. } | Error::StepTooLarge { .. } => WgqedStatus::Unstable,
            Error::NormDrift { .. } => WgqedStatus::NormDrift,
            Error::EdgeHorizonExceeded { .. } => WgqedStatus::EdgeHorizon,
            Error::InsufficientSamples { .. }
            | Error::NonPositiveSurvival { .. }
            | Error::NotDecaying { .. }
            | Error::TraceTooShort { .. }
            | Error::GridMismatch => WgqedStatus::Analysis,
            Error::Parse(_) => WgqedStatus::Parse,
            Error::Io(_) => WgqedStatus::Io,
        };
        Failure(status, err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(WgqedStatus::NullPointer, format!("`{what}` is null"))
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F>(body: F) -> WgqedStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => WgqedStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            WgqedStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

unsafe fn fill<T: Copy>(src: &[T], buf: *mut T, cap: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if cap < src.len() {
        return Err(Failure(
            WgqedStatus::BufferTooSmall,
            format!("buffer holds {cap} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(WgqedStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Message of the last failure on this thread, or null if none occurred.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn wgqed_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wgqed_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- model ----

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wgqed_model_new(
    omega0: f64,
    omega_c: f64,
    hop_j: f64,
    g0_coupling: f64,
    n_half: usize,
    out: *mut *mut WgqedModel,
) -> WgqedStatus {
    guard(|| {
        let m = LatticeModel::new(omega0, omega_c, hop_j, g0_coupling, n_half)?;
        store(out, WgqedModel(m))
    })
}

/// # Safety
/// `model` must be null or a handle from [`wgqed_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wgqed_model_free(model: *mut WgqedModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_model_golden_rule(model: *const WgqedModel, out: *mut WgqedMarkov) -> WgqedStatus {
    guard(|| {
        let c = deref(model, "model")?.0.golden_rule_constants()?;
        write(
            out,
            WgqedMarkov {
                gamma_r: c.gamma_r,
                gamma_i: c.gamma_i,
                v_g: c.v_g,
                k0: c.k0,
            },
        )
    })
}

/// Memory kernel `G(tau)` of the model.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_model_memory_kernel(
    model: *const WgqedModel,
    tau: f64,
    out: *mut WgqedComplex,
) -> WgqedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, m.0.memory_kernel(tau).into())
    })
}

// ---- states ----

/// Excited emitter with an empty waveguide.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_bare(model: *const WgqedModel, out: *mut *mut WgqedState) -> WgqedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        store(out, WgqedState(JointState::bare(&m.0)))
    })
}

/// Symmetric flat packet of half-width `half_width` sites.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_virtual_bound(
    model: *const WgqedModel,
    half_width: usize,
    out: *mut *mut WgqedState,
) -> WgqedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        store(out, WgqedState(make_virtual_bound_state(&m.0, half_width)?))
    })
}

/// Exponential incoming packet that slows the decay to `epsilon`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_slow_decay(
    model: *const WgqedModel,
    epsilon: f64,
    out: *mut *mut WgqedState,
) -> WgqedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        store(out, WgqedState(make_slow_decay_state(&m.0, epsilon)?))
    })
}

/// State from explicit amplitudes; `photon` holds `2N+1` site amplitudes
/// ordered from `l = -N` to `l = N`.
///
/// # Safety
/// `photon` must point to `len` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_from_parts(
    c_a: WgqedComplex,
    photon: *const WgqedComplex,
    len: usize,
    out: *mut *mut WgqedState,
) -> WgqedStatus {
    guard(|| {
        if photon.is_null() {
            return Err(null("photon"));
        }
        let q = std::slice::from_raw_parts(photon, len)
            .iter()
            .map(|&z| z.into())
            .collect();
        store(out, WgqedState(JointState::from_parts(c_a.into(), q, 0.0)?))
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_free(state: *mut WgqedState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_emitter(state: *const WgqedState, out: *mut WgqedComplex) -> WgqedStatus {
    guard(|| write(out, deref(state, "state")?.0.c_a.into()))
}

/// Number of photon amplitudes, `2N+1`; 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_photon_len(state: *const WgqedState) -> usize {
    state.as_ref().map_or(0, |s| s.0.photon.len())
}

/// # Safety
/// `state` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn wgqed_state_photon(
    state: *const WgqedState,
    buf: *mut WgqedComplex,
    cap: usize,
) -> WgqedStatus {
    guard(|| {
        let q: Vec<WgqedComplex> = deref(state, "state")?.0.photon.iter().map(|&z| z.into()).collect();
        fill(&q, buf, cap)
    })
}

/// Forcing term `F(t)` generated by the photon part of `state`.
///
/// # Safety
/// `state` and `model` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_forcing(
    state: *const WgqedState,
    model: *const WgqedModel,
    t: f64,
    out: *mut WgqedComplex,
) -> WgqedStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let m = deref(model, "model")?;
        if s.0.n_half() != m.0.n_half {
            return Err(Error::DimensionMismatch {
                expected: m.0.sites(),
                found: s.0.photon.len(),
            }
            .into());
        }
        write(out, forcing_bessel(&s.0.photon, &m.0, t).into())
    })
}

// ---- dynamics ----

#[no_mangle]
pub extern "C" fn wgqed_evolution_config_default() -> WgqedEvolutionConfig {
    let d = EvolutionConfig::default();
    WgqedEvolutionConfig {
        dt: d.dt,
        t_max: d.t_max,
        sample_every: d.sample_every,
        norm_tolerance: d.norm_tolerance,
        edge_guard: d.edge_guard,
    }
}

/// Exact propagation of `state` under `model`.
///
/// # Safety
/// `state`, `model` and `config` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_evolve(
    state: *const WgqedState,
    model: *const WgqedModel,
    config: *const WgqedEvolutionConfig,
    out: *mut *mut WgqedTrace,
) -> WgqedStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let m = deref(model, "model")?;
        let c = deref(config, "config")?;
        let cfg = EvolutionConfig {
            dt: c.dt,
            t_max: c.t_max,
            sample_every: c.sample_every,
            norm_tolerance: c.norm_tolerance,
            store_field: false,
            edge_guard: c.edge_guard,
        };
        store(out, WgqedTrace(evolve(&s.0, &m.0, &cfg)?))
    })
}

/// Runs a scenario described by a JSON or `key = value` configuration text,
/// the same format the command-line tool reads.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_run_config(config_text: *const c_char, out: *mut *mut WgqedTrace) -> WgqedStatus {
    guard(|| {
        if config_text.is_null() {
            return Err(null("config_text"));
        }
        let text = CStr::from_ptr(config_text)
            .to_str()
            .map_err(|_| Failure(WgqedStatus::Parse, "configuration is not valid UTF-8".into()))?;
        let cfg = ScenarioConfig::from_text(text)?;
        store(out, WgqedTrace(run_scenario(&cfg)?.trace))
    })
}

/// Closed-form two-exponential emitter amplitude of the slow-decay state.
#[no_mangle]
pub extern "C" fn wgqed_analytic_slow_decay(
    c_a0: WgqedComplex,
    gamma: WgqedComplex,
    epsilon: f64,
    t: f64,
) -> WgqedComplex {
    analytic_slow_decay(c_a0.into(), gamma.into(), epsilon, t).into()
}

// ---- traces ----

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_free(trace: *mut WgqedTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_len(trace: *const WgqedTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_times(trace: *const WgqedTrace, buf: *mut f64, cap: usize) -> WgqedStatus {
    guard(|| fill(&deref(trace, "trace")?.0.times, buf, cap))
}

/// # Safety
/// `trace` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_survival(trace: *const WgqedTrace, buf: *mut f64, cap: usize) -> WgqedStatus {
    guard(|| fill(&deref(trace, "trace")?.0.survival, buf, cap))
}

/// # Safety
/// `trace` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_amplitudes(
    trace: *const WgqedTrace,
    buf: *mut WgqedComplex,
    cap: usize,
) -> WgqedStatus {
    guard(|| {
        let c: Vec<WgqedComplex> = deref(trace, "trace")?.0.c_a.iter().map(|&z| z.into()).collect();
        fill(&c, buf, cap)
    })
}

/// Total norm per sample; NaN for reduced-description traces.
///
/// # Safety
/// `trace` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_norm(trace: *const WgqedTrace, buf: *mut f64, cap: usize) -> WgqedStatus {
    guard(|| fill(&deref(trace, "trace")?.0.norm, buf, cap))
}

/// # Safety
/// `trace` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_write_csv(trace: *const WgqedTrace, path: *const c_char) -> WgqedStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        Ok(t.0.write_csv(path_arg(path)?)?)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_read_csv(path: *const c_char, out: *mut *mut WgqedTrace) -> WgqedStatus {
    guard(|| store(out, WgqedTrace(DecayTrace::read_csv(path_arg(path)?)?)))
}

/// Log-linear fit of the survival over `[t_lo, t_hi]`.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wgqed_trace_fit_rate(
    trace: *const WgqedTrace,
    t_lo: f64,
    t_hi: f64,
    out: *mut WgqedRateFit,
) -> WgqedStatus {
    guard(|| {
        let fit = fit_exponential_rate(&deref(trace, "trace")?.0, [t_lo, t_hi])?;
        write(
            out,
            WgqedRateFit {
                rate_probability: fit.rate_probability,
                rate_amplitude: fit.rate_amplitude,
                intercept: fit.intercept,
                residual_rms: fit.residual_rms,
                n_samples: fit.n_samples,
            },
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, WgqedStatus::Panic);
        let msg = unsafe { CStr::from_ptr(wgqed_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "panic: boom");
    }

    #[test]
    fn error_mapping() {
        let f: Failure = Error::StabilityGuard { product: 1.0 }.into();
        assert_eq!(f.0, WgqedStatus::Unstable);
        let f: Failure = Error::GridMismatch.into();
        assert_eq!(f.0, WgqedStatus::Analysis);
        let f: Failure = Error::NoResonance.into();
        assert_eq!(f.0, WgqedStatus::InvalidArgument);
    }

    #[test]
    fn complex_round_trip() {
        let z = C64::new(0.25, -1.5);
        assert_eq!(C64::from(WgqedComplex::from(z)), z);
    }
}
