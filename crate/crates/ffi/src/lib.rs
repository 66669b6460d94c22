//! C interface to the sampled NMPC controller.
//!
//! Controllers are opaque handles created from the same JSON experiment
//! config the command-line tool reads. Every function returns an
//! [`NmpcStatus`] code; the message of the last failure on the calling thread
//! is available from [`nmpc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sampled_nmpc::bench::{run_experiment, BenchError, ExperimentConfig};
use sampled_nmpc::complexity::{predicted_bounds, CostModel};
use sampled_nmpc::error::NmpcError;
use sampled_nmpc::sampling::halton_point;
use sampled_nmpc::solver::{Controller, StepOutcome};
use sampled_nmpc::StateVec;

/// Result codes. Values 2-4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmpcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidConfig = 2,
    Infeasible = 3,
    Runtime = 4,
    DimensionMismatch = 5,
    Panic = 6,
}

/// Counters and costs of the most recent solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NmpcSolveStats {
    pub cost: f64,
    pub warm_cost: f64,
    pub f_evals: u64,
    pub cost_evals: u64,
    pub improvements: u64,
    pub budget_hit: bool,
    pub elapsed_ms: f64,
}

/// Opaque controller handle.
pub struct NmpcController {
    inner: Controller,
    state_dim: usize,
    input_dim: usize,
    last: Option<StepOutcome>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn solver_status(e: &NmpcError) -> NmpcStatus {
    match e {
        _ if e.is_infeasibility() => NmpcStatus::Infeasible,
        NmpcError::DimensionMismatch { .. } => NmpcStatus::DimensionMismatch,
        NmpcError::NoTerminalLaw(_) | NmpcError::UnboundedBox { .. } => NmpcStatus::InvalidConfig,
        _ => NmpcStatus::Runtime,
    }
}

fn guarded(f: impl FnOnce() -> NmpcStatus) -> NmpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            NmpcStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, NmpcStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(NmpcStatus::NullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        NmpcStatus::InvalidConfig
    })
}

/// Creates a controller from a JSON experiment config. Only the plant and
/// solver settings are used; `steps` and output fields are ignored.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nmpc_controller_create(config_json: *const c_char, out: *mut *mut NmpcController) -> NmpcStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output handle");
            return NmpcStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = match ExperimentConfig::from_json(text).map(ExperimentConfig::resolve).and_then(|c| {
            c.validate()?;
            Ok(c)
        }) {
            Ok(c) => c,
            Err(e) => {
                set_error(e.to_string());
                return NmpcStatus::InvalidConfig;
            }
        };
        let problem = cfg.plant.problem(cfg.horizon);
        let (state_dim, input_dim) = (problem.model.state_dim(), problem.model.input_dim());
        let mut inner = match Controller::new(problem, cfg.solver_config()) {
            Ok(c) => c,
            Err(e) => {
                set_error(e.to_string());
                return NmpcStatus::InvalidConfig;
            }
        };
        if let Some(plan) = cfg.initial_plan() {
            inner = inner.with_initial_plan(plan);
        }
        *out = Box::into_raw(Box::new(NmpcController {
            inner,
            state_dim,
            input_dim,
            last: None,
        }));
        NmpcStatus::Ok
    })
}

/// Releases a controller. Null is ignored.
///
/// # Safety
/// `ctrl` must come from [`nmpc_controller_create`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nmpc_controller_destroy(ctrl: *mut NmpcController) {
    if !ctrl.is_null() {
        drop(Box::from_raw(ctrl));
    }
}

/// # Safety
/// `ctrl` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nmpc_controller_state_dim(ctrl: *const NmpcController) -> usize {
    ctrl.as_ref().map_or(0, |c| c.state_dim)
}

/// # Safety
/// `ctrl` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nmpc_controller_input_dim(ctrl: *const NmpcController) -> usize {
    ctrl.as_ref().map_or(0, |c| c.input_dim)
}

/// Computes the input for measured state `state` and writes it to `input`.
///
/// # Safety
/// `state` must point to `state_len` doubles and `input` to `input_len`
/// writable doubles; `ctrl` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nmpc_controller_solve(
    ctrl: *mut NmpcController,
    state: *const f64,
    state_len: usize,
    input: *mut f64,
    input_len: usize,
) -> NmpcStatus {
    guarded(|| {
        let Some(c) = ctrl.as_mut() else {
            set_error("null controller");
            return NmpcStatus::NullArgument;
        };
        if state.is_null() || input.is_null() {
            set_error("null state or input buffer");
            return NmpcStatus::NullArgument;
        }
        if state_len != c.state_dim || input_len != c.input_dim {
            set_error(format!(
                "expected state length {} and input length {}, got {state_len} and {input_len}",
                c.state_dim, c.input_dim
            ));
            return NmpcStatus::DimensionMismatch;
        }
        let x = StateVec::from_column_slice(std::slice::from_raw_parts(state, state_len));
        match c.inner.solve(&x) {
            Ok(outcome) => {
                std::slice::from_raw_parts_mut(input, input_len).copy_from_slice(outcome.input().as_slice());
                c.last = Some(outcome);
                NmpcStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                solver_status(&e)
            }
        }
    })
}

/// Statistics of the last successful solve.
///
/// # Safety
/// `ctrl` must be a live handle and `stats` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nmpc_controller_last_stats(ctrl: *const NmpcController, stats: *mut NmpcSolveStats) -> NmpcStatus {
    let (Some(c), false) = (ctrl.as_ref(), stats.is_null()) else {
        set_error("null controller or stats pointer");
        return NmpcStatus::NullArgument;
    };
    let Some(o) = &c.last else {
        set_error("no solve has completed");
        return NmpcStatus::Runtime;
    };
    *stats = NmpcSolveStats {
        cost: o.result.cost,
        warm_cost: o.result.warm_cost,
        f_evals: o.result.f_evals,
        cost_evals: o.result.cost_evals,
        improvements: o.result.improvements,
        budget_hit: o.result.budget_hit,
        elapsed_ms: o.elapsed.as_secs_f64() * 1e3,
    };
    NmpcStatus::Ok
}

/// Forgets the previous solution; the next solve starts from a fresh search.
///
/// # Safety
/// `ctrl` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nmpc_controller_reset(ctrl: *mut NmpcController) -> NmpcStatus {
    match ctrl.as_mut() {
        Some(c) => {
            c.inner.reset();
            c.last = None;
            NmpcStatus::Ok
        }
        None => {
            set_error("null controller");
            NmpcStatus::NullArgument
        }
    }
}

/// Runs a full experiment and writes its logs to `out_dir`, like the `run`
/// subcommand.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nmpc_run_experiment(config_json: *const c_char, out_dir: *const c_char) -> NmpcStatus {
    guarded(|| {
        let (text, dir) = match (read_str(config_json), read_str(out_dir)) {
            (Ok(t), Ok(d)) => (t, d),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let result = ExperimentConfig::from_json(text).and_then(|cfg| run_experiment(&cfg, Path::new(dir)));
        match result {
            Ok(_) => NmpcStatus::Ok,
            Err(e) => {
                set_error(e.to_string());
                match &e {
                    BenchError::Config(_) => NmpcStatus::InvalidConfig,
                    BenchError::Io { .. } => NmpcStatus::Runtime,
                    BenchError::Solver { error, .. } => solver_status(error),
                }
            }
        }
    })
}

/// Point `index` (1-based) of the Halton sequence in `dim` dimensions.
///
/// # Safety
/// `out` must point to `dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nmpc_halton_point(index: u64, dim: usize, out: *mut f64) -> NmpcStatus {
    if out.is_null() {
        set_error("null output buffer");
        return NmpcStatus::NullArgument;
    }
    guarded(|| {
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(&halton_point(index, dim));
        NmpcStatus::Ok
    })
}

/// Serial, `n̄`-lane and `lanes`-lane work bounds for one pass, written to
/// `out[0..3]`.
///
/// # Safety
/// `out` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nmpc_predicted_bounds(
    n_bar: usize,
    horizon: usize,
    c1: f64,
    c2: f64,
    lanes: usize,
    out: *mut f64,
) -> NmpcStatus {
    if out.is_null() {
        set_error("null output buffer");
        return NmpcStatus::NullArgument;
    }
    let (a, b, c) = predicted_bounds(n_bar, horizon, CostModel { c1, c2 }, lanes);
    std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&[a, b, c]);
    NmpcStatus::Ok
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn nmpc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
