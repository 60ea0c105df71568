//! C ABI over the cavcond model.
//!
//! Every fallible function returns a [`CavcondStatus`]. On failure the message is kept in a
//! thread-local slot readable through [`cavcond_last_error`]. Handles are opaque and must be
//! released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cavcond::config::SweepConfig;
use cavcond::harness::{
    run_cavity_sweep, run_convergence, run_multiwell, run_spectrum, run_tau_sweep, Model, ModelSpec, RunReport,
};
use cavcond::kubo::{conductance_noninteracting, ScatteringTimes};
use cavcond::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavcondStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A built structure: basis, populations, transition catalog and Hopfield model.
pub struct CavcondModel {
    model: Model,
    times: ScatteringTimes,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CavcondStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_numerical() {
            CavcondStatus::Numerical
        } else if matches!(e, Error::Io(_)) {
            CavcondStatus::Io
        } else {
            CavcondStatus::Config
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CavcondStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CavcondStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            CavcondStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CavcondStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(CavcondStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

unsafe fn model_ref<'a>(p: *const CavcondModel) -> Result<&'a CavcondModel, Failure> {
    p.as_ref().ok_or_else(|| null("model"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn times(tau0_ps: f64, taup_ps: f64) -> Result<ScatteringTimes, Failure> {
    if !(tau0_ps > 0.0 && taup_ps > 0.0) {
        return Err(Failure(
            CavcondStatus::InvalidArgument,
            format!("scattering times must be positive, got {tau0_ps} and {taup_ps}"),
        ));
    }
    Ok(ScatteringTimes { tau0_ps, taup_ps })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or NULL. Valid until the next failure.
#[no_mangle]
pub extern "C" fn cavcond_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn cavcond_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a model from a JSON run configuration (same schema as the CLI).
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_new(config_json: *const c_char, out: *mut *mut CavcondModel) -> CavcondStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let config = SweepConfig::from_json(read_str(config_json, "config")?)?;
        let model = Model::build(&ModelSpec::from_config(&config))?;
        let handle = Box::new(CavcondModel {
            model,
            times: ScatteringTimes {
                tau0_ps: config.tau0_ps,
                taup_ps: config.taup_ps,
            },
        });
        out.write(Box::into_raw(handle));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`cavcond_model_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_free(model: *mut CavcondModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of subbands in the basis.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_subband_count(model: *const CavcondModel, out: *mut usize) -> CavcondStatus {
    guard(|| write_out(out, model_ref(model)?.model.basis.len()))
}

/// Number of allowed transitions, so the spectrum has this plus one branches.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_transition_count(model: *const CavcondModel, out: *mut usize) -> CavcondStatus {
    guard(|| write_out(out, model_ref(model)?.model.catalog.len()))
}

/// Energy of the reference transition in meV, the unit of the cavity axis.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_reference_energy(model: *const CavcondModel, out: *mut f64) -> CavcondStatus {
    guard(|| write_out(out, model_ref(model)?.model.reference_hw))
}

/// Fermi level in meV, measured from the potential minimum.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_fermi_level(model: *const CavcondModel, out: *mut f64) -> CavcondStatus {
    guard(|| write_out(out, model_ref(model)?.model.populations.fermi_mev))
}

/// Scattering times from the configuration, in ps.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_scattering_times(
    model: *const CavcondModel,
    tau0_ps: *mut f64,
    taup_ps: *mut f64,
) -> CavcondStatus {
    guard(|| {
        let t = model_ref(model)?.times;
        write_out(tau0_ps, t.tau0_ps)?;
        write_out(taup_ps, t.taup_ps)
    })
}

/// Conductance in S with the cavity at `hw_c_mev`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_conductance(
    model: *const CavcondModel,
    hw_c_mev: f64,
    tau0_ps: f64,
    taup_ps: f64,
    out: *mut f64,
) -> CavcondStatus {
    guard(|| {
        let m = model_ref(model)?;
        if !(hw_c_mev >= 0.0 && hw_c_mev.is_finite()) {
            return Err(Failure(CavcondStatus::InvalidArgument, format!("cavity energy {hw_c_mev} meV")));
        }
        let g = m.model.conductance(hw_c_mev, times(tau0_ps, taup_ps)?)?;
        write_out(out, g)
    })
}

/// Conductance in S with the cavity frequency at zero.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_g0(
    model: *const CavcondModel,
    tau0_ps: f64,
    taup_ps: f64,
    out: *mut f64,
) -> CavcondStatus {
    guard(|| {
        let m = model_ref(model)?;
        let g = m.model.g0(times(tau0_ps, taup_ps)?)?;
        write_out(out, g)
    })
}

/// Conductance in S without any light-matter or Coulomb coupling.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_noninteracting(
    model: *const CavcondModel,
    tau0_ps: f64,
    out: *mut f64,
) -> CavcondStatus {
    guard(|| {
        let m = model_ref(model)?;
        let t = times(tau0_ps, 1.0)?;
        write_out(out, conductance_noninteracting(&m.model.catalog, t.tau0_ps))
    })
}

/// Polariton energies (meV, ascending) and electronic weights at `hw_c_mev`.
///
/// `*len` always receives the branch count. If `capacity` is smaller, nothing else is
/// written and `CAVCOND_STATUS_BUFFER_TOO_SMALL` is returned. `weights` may be NULL.
///
/// # Safety
/// `energies` and `weights` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn cavcond_model_spectrum(
    model: *const CavcondModel,
    hw_c_mev: f64,
    energies: *mut f64,
    weights: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> CavcondStatus {
    guard(|| {
        let m = model_ref(model)?;
        let s = m.model.spectrum(hw_c_mev)?;
        let n = s.branches.len();
        write_out(len, n)?;
        if capacity < n {
            return Err(Failure(
                CavcondStatus::BufferTooSmall,
                format!("spectrum has {n} branches, buffer holds {capacity}"),
            ));
        }
        if energies.is_null() {
            return Err(null("energies"));
        }
        for (i, b) in s.branches.iter().enumerate() {
            energies.add(i).write(b.hw_mev);
            if !weights.is_null() {
                weights.add(i).write(b.electronic_weight);
            }
        }
        Ok(())
    })
}

/// Run a CLI verb (`spectrum`, `sweep-cavity`, `sweep-tau`, `multiwell`, `converge`) on a JSON
/// configuration. The report JSON and the CSV table are returned as strings owned by the
/// caller and released with [`cavcond_string_free`]. `csv` may be NULL.
///
/// # Safety
/// String arguments must be NUL-terminated; `report_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cavcond_run(
    verb: *const c_char,
    config_json: *const c_char,
    report_json: *mut *mut c_char,
    csv: *mut *mut c_char,
) -> CavcondStatus {
    guard(|| {
        if report_json.is_null() {
            return Err(null("report_json"));
        }
        let verb = read_str(verb, "verb")?;
        let f: fn(&SweepConfig) -> cavcond::Result<RunReport> = match verb {
            "spectrum" => run_spectrum,
            "sweep-cavity" => run_cavity_sweep,
            "sweep-tau" => run_tau_sweep,
            "multiwell" => run_multiwell,
            "converge" => run_convergence,
            other => return Err(Failure(CavcondStatus::InvalidArgument, format!("unknown verb `{other}`"))),
        };
        let config = SweepConfig::from_json(read_str(config_json, "config")?)?;
        let report = f(&config)?;
        report_json.write(into_c_string(report.to_json()));
        if !csv.is_null() {
            csv.write(into_c_string(report.csv));
        }
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cavcond_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
