//! C ABI over `dicke-core`.
//!
//! Every function returns a [`DkStatus`]; on failure the message is kept
//! per thread and read back with [`dk_last_error`]. Handles are opaque and
//! must be released with their `_free` function. Panics never cross the
//! boundary: they surface as `DK_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dicke_core::analysis::{selectivity_sweep, timescale_check, SweepProtocol};
use dicke_core::dsl::{parse_schedule, ScheduleDocument};
use dicke_core::dynamics::AncillaOutcome;
use dicke_core::protocols::{discrimination_trials, run_schedule, FidelityModel, RunOptions, SimulationResult};
use dicke_core::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    SimulationError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Model override for a run; `DK_MODEL_SCHEDULE` keeps each step's own.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkModel {
    Schedule = 0,
    TwoLevel = 1,
    Symmetric = 2,
    Full = 3,
}

impl DkModel {
    fn resolve(self) -> Option<FidelityModel> {
        match self {
            DkModel::Schedule => None,
            DkModel::TwoLevel => Some(FidelityModel::TwoLevel),
            DkModel::Symmetric => Some(FidelityModel::FullSymmetric),
            DkModel::Full => Some(FidelityModel::FullRegister),
        }
    }
}

/// Parsed schedule file.
pub struct DkSchedule {
    doc: ScheduleDocument,
}

/// Outcome of [`dk_schedule_run`].
pub struct DkRunResult {
    result: SimulationResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (DkStatus, String);

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DkStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {message}"));
            DkStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (DkStatus::NullPointer, format!("{what} is null"))
}

fn sim(e: impl std::fmt::Display) -> Failure {
    (DkStatus::SimulationError, e.to_string())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`.
///
/// `needed` receives the size including the terminating NUL. Returns
/// `DK_STATUS_BUFFER_TOO_SMALL` when `len` is smaller; `buf` may then be null.
///
/// # Safety
/// `buf` must be writable for `len` bytes; `needed` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn dk_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> DkStatus {
    let message = LAST_ERROR.with(|e| e.borrow().clone());
    let bytes = message.as_bytes_with_nul();
    if !needed.is_null() {
        needed.write(bytes.len());
    }
    if len < bytes.len() {
        return DkStatus::BufferTooSmall;
    }
    if buf.is_null() {
        return DkStatus::NullPointer;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
    DkStatus::Ok
}

/// Parses schedule-file text into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_schedule_parse(text: *const c_char, out: *mut *mut DkSchedule) -> DkStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (DkStatus::InvalidArgument, format!("text is not UTF-8: {e}")))?;
        let doc = parse_schedule(text).map_err(|e| (DkStatus::ParseError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(DkSchedule { doc })), "out")
    })
}

/// # Safety
/// `schedule` must come from [`dk_schedule_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dk_schedule_free(schedule: *mut DkSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Number of pulse and measurement steps.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_schedule_step_count(schedule: *const DkSchedule, out: *mut usize) -> DkStatus {
    guard(|| {
        let s = deref(schedule, "schedule")?;
        write_out(out, s.doc.schedule.steps.len(), "out")
    })
}

/// Compiles and executes the schedule. `seed` overrides the schedule seed
/// when non-null.
///
/// # Safety
/// `schedule` and `out` must be valid; `seed` valid or null.
#[no_mangle]
pub unsafe extern "C" fn dk_schedule_run(
    schedule: *const DkSchedule,
    model: DkModel,
    seed: *const u64,
    out: *mut *mut DkRunResult,
) -> DkStatus {
    guard(|| {
        let s = deref(schedule, "schedule")?;
        let mut sched = s.doc.schedule.clone();
        if let Some(seed) = seed.as_ref() {
            sched.seed = *seed;
        }
        let options = RunOptions {
            model: model.resolve(),
            ..RunOptions::default()
        };
        let result = run_schedule(&sched, &options).map_err(sim)?;
        write_out(out, Box::into_raw(Box::new(DkRunResult { result })), "out")
    })
}

/// # Safety
/// `result` must come from [`dk_schedule_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dk_result_free(result: *mut DkRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Fidelity against the first declared expectation, or against the ideal
/// run when the schedule declares none.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_result_fidelity(result: *const DkRunResult, out: *mut f64) -> DkStatus {
    guard(|| write_out(out, deref(result, "result")?.result.headline_fidelity(), "out"))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_result_fidelity_vs_ideal(result: *const DkRunResult, out: *mut f64) -> DkStatus {
    guard(|| write_out(out, deref(result, "result")?.result.fidelity_vs_ideal, "out"))
}

/// Dimension of the final state.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_result_dim(result: *const DkRunResult, out: *mut usize) -> DkStatus {
    guard(|| write_out(out, deref(result, "result")?.result.final_state.dim(), "out"))
}

/// Writes the final amplitudes as interleaved `re, im` pairs; `len` counts
/// doubles and must be at least `2 * dim`.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dk_result_amplitudes(result: *const DkRunResult, buf: *mut f64, len: usize) -> DkStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let amps = r.result.final_state.amplitudes();
        if len < 2 * amps.len() {
            return Err((
                DkStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", 2 * amps.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        for (i, a) in amps.iter().enumerate() {
            buf.add(2 * i).write(a.re);
            buf.add(2 * i + 1).write(a.im);
        }
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_result_measurement_count(result: *const DkRunResult, out: *mut usize) -> DkStatus {
    guard(|| write_out(out, deref(result, "result")?.result.measurements.len(), "out"))
}

/// Outcome of measurement `index`: `excited` is 1 for the excited ancilla,
/// `probability` the Born probability of that outcome.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_result_measurement(
    result: *const DkRunResult,
    index: usize,
    excited: *mut i32,
    probability: *mut f64,
) -> DkStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let m = r.result.measurements.get(index).ok_or_else(|| {
            (
                DkStatus::InvalidArgument,
                format!("measurement {index} out of range ({} recorded)", r.result.measurements.len()),
            )
        })?;
        write_out(excited, i32::from(m.outcome == AncillaOutcome::AncillaExcited), "excited")?;
        write_out(probability, m.probability, "probability")
    })
}

/// Symmetric-model infidelity of `protocol` (`"w"` or `"ladder:K"`) for each
/// ratio, using the schedule's config as template. `ratios` must be
/// strictly increasing; `out` receives `count` values.
///
/// # Safety
/// `ratios` and `out` must hold `count` doubles; `protocol` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dk_selectivity_sweep(
    schedule: *const DkSchedule,
    protocol: *const c_char,
    ratios: *const f64,
    count: usize,
    out: *mut f64,
) -> DkStatus {
    guard(|| {
        let s = deref(schedule, "schedule")?;
        if protocol.is_null() {
            return Err(null("protocol"));
        }
        let name = CStr::from_ptr(protocol).to_str().unwrap_or("");
        let protocol = SweepProtocol::parse(name)
            .ok_or_else(|| (DkStatus::InvalidArgument, format!("unknown protocol `{name}`")))?;
        let ratios = slice(ratios, count, "ratios")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sweep = selectivity_sweep(&s.doc.schedule.config, protocol, ratios).map_err(sim)?;
        for (i, v) in sweep.infidelity.iter().enumerate() {
            out.add(i).write(*v);
        }
        Ok(())
    })
}

/// W-state `π`-pulse time in seconds for `omega_eff` (s⁻¹) and `n_ions`;
/// `fits` is 1 when it meets the 0.1 ms budget.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dk_timescale_check(
    omega_eff: f64,
    n_ions: usize,
    pulse_time: *mut f64,
    fits: *mut i32,
) -> DkStatus {
    guard(|| {
        let t = timescale_check(omega_eff, n_ions).map_err(|e| (DkStatus::InvalidArgument, e.to_string()))?;
        write_out(pulse_time, t.pulse_time, "pulse_time")?;
        write_out(fits, i32::from(t.fits_pulse_budget), "fits")
    })
}

/// Born probability that the excitation filter for `k0` flags the ancilla,
/// for an ionic state with Dicke coefficients `re[k] + i im[k]`.
///
/// # Safety
/// `re` and `im` must hold `count` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn dk_discrimination_probability(
    schedule: *const DkSchedule,
    re: *const f64,
    im: *const f64,
    count: usize,
    k0: usize,
    n0: usize,
    model: DkModel,
    out: *mut f64,
) -> DkStatus {
    guard(|| {
        let s = deref(schedule, "schedule")?;
        let re = slice(re, count, "re")?;
        let im = slice(im, count, "im")?;
        let coeffs: Vec<Complex64> = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let stats =
            discrimination_trials(&s.doc.schedule.config, &coeffs, k0, n0, model.resolve(), 1, 0).map_err(sim)?;
        write_out(out, stats.probability, "out")
    })
}
