//! C interface to `lvt-core`.
//!
//! Every function returns an [`LvtStatus`]; results go through out-pointers.
//! Heap objects are opaque and released with the matching `*_free`. On any
//! non-`Ok` status, [`lvt_last_error`] describes the failure for the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lvt_core::equilibrium::{fixed_point, tau_critical, Classification};
use lvt_core::incidence::{self, advalorem_incidence, unit_tax_incidence, Incidence, IncidenceInputs};
use lvt_core::stochastic::{simulate_paths, PathBundle, StochasticParams};
use lvt_core::{GridSpec, LvtError, ModelParams, SimConfig, SimTrace, Simulation, SpatialProfile, TaxSchedule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    UnknownName = 3,
    UnstableTimeStep = 4,
    NonFinite = 5,
    NoInteriorPoint = 6,
    OutOfRange = 7,
    Internal = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvtClassification {
    Saddle = 0,
    StableNode = 1,
    UnstableNode = 2,
    StableFocus = 3,
    UnstableFocus = 4,
    BoundaryOnly = 5,
    NonHyperbolic = 6,
}

impl From<Classification> for LvtClassification {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Saddle => LvtClassification::Saddle,
            Classification::StableNode => LvtClassification::StableNode,
            Classification::UnstableNode => LvtClassification::UnstableNode,
            Classification::StableFocus => LvtClassification::StableFocus,
            Classification::UnstableFocus => LvtClassification::UnstableFocus,
            Classification::BoundaryOnly => LvtClassification::BoundaryOnly,
            Classification::NonHyperbolic => LvtClassification::NonHyperbolic,
        }
    }
}

/// Spatial geometry, each with its built-in shape constants.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvtProfile {
    Exponential = 0,
    Polycentric = 1,
    Suburban = 2,
}

impl LvtProfile {
    fn to_core(self) -> SpatialProfile {
        match self {
            LvtProfile::Exponential => SpatialProfile::ExponentialBaseline,
            LvtProfile::Polycentric => SpatialProfile::polycentric(),
            LvtProfile::Suburban => SpatialProfile::suburban_flat(),
        }
    }
}

/// Model constants. Opaque.
pub struct LvtParams(ModelParams);

/// Result of a grid simulation. Opaque.
pub struct LvtTrace(SimTrace);

/// Monte Carlo ensemble. Opaque.
pub struct LvtBundle(PathBundle);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvtEquilibrium {
    pub v_star: f64,
    pub k_star: f64,
    /// 1 when an interior point exists.
    pub exists: i32,
    /// NaN when there is no interior point.
    pub trace_j: f64,
    pub det_j: f64,
    pub classification: LvtClassification,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvtGrid {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvtSimOptions {
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub profile: LvtProfile,
    /// Tax rises by `tax_eta` per unit distance from the center; 0 for a uniform tax.
    pub tax_eta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvtStochasticOptions {
    pub kappa_a: f64,
    pub kappa_mu: f64,
    pub sigma_a: f64,
    pub sigma_mu: f64,
    pub sigma_v: f64,
    pub sigma_k: f64,
    pub correlation: f64,
    pub floor: f64,
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub record_every: usize,
    pub profile: LvtProfile,
    pub distance: f64,
}

/// Ensemble statistics at one recorded time.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvtSummaryRow {
    pub t: f64,
    pub mean_v: f64,
    pub var_v: f64,
    pub q05_v: f64,
    pub q95_v: f64,
    pub mean_k: f64,
    pub var_k: f64,
    pub q05_k: f64,
    pub q95_k: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvtIncidenceInputs {
    pub d_prime: f64,
    pub s_prime: f64,
    pub p0: f64,
    pub tau_unit: f64,
    pub t_adval: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvtIncidence {
    pub tax: f64,
    pub buyer_burden: f64,
    pub seller_burden: f64,
    pub pass_through: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

struct Fail(LvtStatus, String);

impl From<LvtError> for Fail {
    fn from(e: LvtError) -> Self {
        let status = match &e {
            LvtError::InvalidParameter { .. }
            | LvtError::ShapeMismatch { .. }
            | LvtError::Config(_)
            | LvtError::EmptyInput(_)
            | LvtError::ZeroDenominator(_) => LvtStatus::InvalidParameter,
            LvtError::UnstableTimeStep { .. } => LvtStatus::UnstableTimeStep,
            LvtError::NonFiniteGrid { .. } | LvtError::NonFinitePath { .. } => LvtStatus::NonFinite,
            LvtError::NoInteriorPoint { .. } => LvtStatus::NoInteriorPoint,
            _ => LvtStatus::Internal,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LvtStatus::NullPointer, format!("null pointer: {what}"))
}

/// Runs `f`, translating errors and panics into a status and the thread's
/// last-error message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LvtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LvtStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lvt");
            LvtStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn param_slot<'a>(p: &'a mut ModelParams, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "r" => &mut p.r,
        "tau" => &mut p.tau,
        "d_v" => &mut p.d_v,
        "beta" => &mut p.beta,
        "c_b" => &mut p.c_b,
        "i_0" => &mut p.i_0,
        "kappa" => &mut p.kappa,
        "delta" => &mut p.delta,
        "a_0" => &mut p.a_0,
        "mu_0" => &mut p.mu_0,
        "gamma" => &mut p.gamma,
        "lambda" => &mut p.lambda,
        _ => return None,
    })
}

unsafe fn name_arg<'a>(name: *const c_char) -> Result<&'a str, Fail> {
    if name.is_null() {
        return Err(null("name"));
    }
    CStr::from_ptr(name)
        .to_str()
        .map_err(|_| Fail(LvtStatus::UnknownName, "name is not UTF-8".into()))
}

/// Message for the last failing call on this thread; empty after success.
/// The pointer stays valid until the next `lvt_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lvt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn lvt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Allocates the default parameter set.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lvt_params_new(out_params: *mut *mut LvtParams) -> LvtStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        *slot = Box::into_raw(Box::new(LvtParams(ModelParams::default())));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`lvt_params_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lvt_params_free(params: *mut LvtParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Sets a parameter by field name (`"r"`, `"tau"`, `"beta"`, ...). The full
/// set is validated; on failure the old value is kept.
///
/// # Safety
/// `params` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lvt_params_set(params: *mut LvtParams, name: *const c_char, value: f64) -> LvtStatus {
    guard(|| {
        let p = &mut out(params, "params")?.0;
        let name = name_arg(name)?;
        let mut next = *p;
        let slot = param_slot(&mut next, name).ok_or_else(|| Fail(LvtStatus::UnknownName, format!("unknown parameter `{name}`")))?;
        *slot = value;
        next.validate()?;
        *p = next;
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle, `name` NUL-terminated, `value` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_params_get(params: *const LvtParams, name: *const c_char, value: *mut f64) -> LvtStatus {
    guard(|| {
        let mut p = get(params, "params")?.0;
        let name = name_arg(name)?;
        let v = *param_slot(&mut p, name).ok_or_else(|| Fail(LvtStatus::UnknownName, format!("unknown parameter `{name}`")))?;
        *out(value, "value")? = v;
        Ok(())
    })
}

/// Steady state for productivity `a` and effective decay `alpha`
/// (`r + tau - mu`). A missing interior point is not an error: `exists` is 0.
///
/// # Safety
/// `params` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_fixed_point(params: *const LvtParams, a: f64, alpha: f64, result: *mut LvtEquilibrium) -> LvtStatus {
    guard(|| {
        let p = &get(params, "params")?.0;
        let eq = fixed_point(p, a, alpha);
        *out(result, "result")? = LvtEquilibrium {
            v_star: eq.v_star,
            k_star: eq.k_star,
            exists: eq.exists as i32,
            trace_j: eq.trace_j.unwrap_or(f64::NAN),
            det_j: eq.det_j.unwrap_or(f64::NAN),
            classification: eq.classification.into(),
        };
        Ok(())
    })
}

/// Tax rate at which the interior point disappears for centrality `mu`.
///
/// # Safety
/// `params` must be a live handle and `tau_c` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_tau_critical(params: *const LvtParams, mu: f64, tau_c: *mut f64) -> LvtStatus {
    guard(|| {
        let p = &get(params, "params")?.0;
        *out(tau_c, "tau_c")? = tau_critical(p, mu);
        Ok(())
    })
}

/// Runs the grid model from the default initial condition. The tax at the
/// center is `params.tau`.
///
/// # Safety
/// All pointers must be valid; `out_trace` receives a handle to free with [`lvt_trace_free`].
#[no_mangle]
pub unsafe extern "C" fn lvt_simulate(
    params: *const LvtParams,
    grid: *const LvtGrid,
    options: *const LvtSimOptions,
    out_trace: *mut *mut LvtTrace,
) -> LvtStatus {
    guard(|| {
        let p = &get(params, "params")?.0;
        let g = get(grid, "grid")?;
        let o = get(options, "options")?;
        let slot = out(out_trace, "out_trace")?;
        *slot = ptr::null_mut();
        let gs = GridSpec::new(g.lx, g.ly, g.nx, g.ny)?;
        let sc = SimConfig {
            dt: o.dt,
            t_final: o.t_final,
            record_every: o.record_every,
            keep_snapshots: false,
            ..SimConfig::default()
        };
        let tax = TaxSchedule::radial_linear(p.tau, o.tax_eta);
        let trace = Simulation::with_tax(&gs, p, &o.profile.to_core(), tax, &sc)?.run()?;
        *slot = Box::into_raw(Box::new(LvtTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`lvt_simulate`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lvt_trace_free(trace: *mut LvtTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of recorded times.
///
/// # Safety
/// `trace` must be a live handle and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_trace_len(trace: *const LvtTrace, len: *mut usize) -> LvtStatus {
    guard(|| {
        *out(len, "len")? = get(trace, "trace")?.0.times.len();
        Ok(())
    })
}

/// Time and spatial means at recorded index `index`.
///
/// # Safety
/// `trace` must be a live handle; the out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_trace_point(
    trace: *const LvtTrace,
    index: usize,
    t: *mut f64,
    mean_v: *mut f64,
    mean_k: *mut f64,
) -> LvtStatus {
    guard(|| {
        let tr = &get(trace, "trace")?.0;
        if index >= tr.times.len() {
            return Err(Fail(LvtStatus::OutOfRange, format!("index {index} >= {}", tr.times.len())));
        }
        *out(t, "t")? = tr.times[index];
        *out(mean_v, "mean_v")? = tr.mean_v[index];
        *out(mean_k, "mean_k")? = tr.mean_k[index];
        Ok(())
    })
}

/// Spatial means of the final state.
///
/// # Safety
/// `trace` must be a live handle; the out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_trace_final_means(trace: *const LvtTrace, mean_v: *mut f64, mean_k: *mut f64) -> LvtStatus {
    guard(|| {
        let (v, k) = get(trace, "trace")?.0.final_means();
        *out(mean_v, "mean_v")? = v;
        *out(mean_k, "mean_k")? = k;
        Ok(())
    })
}

/// Fills `options` with the library defaults.
///
/// # Safety
/// `options` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_stochastic_defaults(options: *mut LvtStochasticOptions) -> LvtStatus {
    guard(|| {
        let d = StochasticParams::default();
        *out(options, "options")? = LvtStochasticOptions {
            kappa_a: d.kappa_a,
            kappa_mu: d.kappa_mu,
            sigma_a: d.sigma_a,
            sigma_mu: d.sigma_mu,
            sigma_v: d.sigma_v,
            sigma_k: d.sigma_k,
            correlation: d.correlation,
            floor: d.floor,
            dt: d.dt,
            horizon: d.horizon,
            n_paths: d.n_paths,
            seed: d.seed,
            record_every: d.record_every,
            profile: LvtProfile::Exponential,
            distance: 4.0,
        };
        Ok(())
    })
}

/// Simulates an ensemble at `options.distance`. Deterministic in `options.seed`.
///
/// # Safety
/// All pointers must be valid; `out_bundle` receives a handle to free with [`lvt_bundle_free`].
#[no_mangle]
pub unsafe extern "C" fn lvt_stochastic_run(
    params: *const LvtParams,
    options: *const LvtStochasticOptions,
    out_bundle: *mut *mut LvtBundle,
) -> LvtStatus {
    guard(|| {
        let p = &get(params, "params")?.0;
        let o = get(options, "options")?;
        let slot = out(out_bundle, "out_bundle")?;
        *slot = ptr::null_mut();
        let sp = StochasticParams {
            kappa_a: o.kappa_a,
            kappa_mu: o.kappa_mu,
            sigma_a: o.sigma_a,
            sigma_mu: o.sigma_mu,
            sigma_v: o.sigma_v,
            sigma_k: o.sigma_k,
            correlation: o.correlation,
            floor: o.floor,
            dt: o.dt,
            horizon: o.horizon,
            n_paths: o.n_paths,
            seed: o.seed,
            record_every: o.record_every,
        };
        let bundle = simulate_paths(&sp, p, o.distance, &o.profile.to_core())?;
        *slot = Box::into_raw(Box::new(LvtBundle(bundle)));
        Ok(())
    })
}

/// # Safety
/// `bundle` must come from [`lvt_stochastic_run`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lvt_bundle_free(bundle: *mut LvtBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Number of recorded times in the ensemble.
///
/// # Safety
/// `bundle` must be a live handle and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_bundle_len(bundle: *const LvtBundle, len: *mut usize) -> LvtStatus {
    guard(|| {
        *out(len, "len")? = get(bundle, "bundle")?.0.times.len();
        Ok(())
    })
}

/// # Safety
/// `bundle` must be a live handle and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_bundle_summary(bundle: *const LvtBundle, index: usize, row: *mut LvtSummaryRow) -> LvtStatus {
    guard(|| {
        let b = &get(bundle, "bundle")?.0;
        if index >= b.times.len() {
            return Err(Fail(LvtStatus::OutOfRange, format!("index {index} >= {}", b.times.len())));
        }
        *out(row, "row")? = LvtSummaryRow {
            t: b.times[index],
            mean_v: b.v.mean[index],
            var_v: b.v.var[index],
            q05_v: b.v.q05[index],
            q95_v: b.v.q95[index],
            mean_k: b.k.mean[index],
            var_k: b.k.var[index],
            q05_k: b.k.q05[index],
            q95_k: b.k.q95[index],
        };
        Ok(())
    })
}

fn incidence_inputs(i: &LvtIncidenceInputs) -> IncidenceInputs {
    IncidenceInputs {
        d_prime: i.d_prime,
        s_prime: i.s_prime,
        p0: i.p0,
        tau_unit: i.tau_unit,
        t_adval: i.t_adval,
    }
}

fn incidence_out(inc: Incidence) -> LvtIncidence {
    LvtIncidence {
        tax: inc.tax,
        buyer_burden: inc.buyer_burden(),
        seller_burden: inc.seller_burden(),
        pass_through: inc.pass_through(),
    }
}

/// Per-unit tax `inputs.tau_unit`.
///
/// # Safety
/// `inputs` readable, `result` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_unit_incidence(inputs: *const LvtIncidenceInputs, result: *mut LvtIncidence) -> LvtStatus {
    guard(|| {
        let inc = unit_tax_incidence(&incidence_inputs(get(inputs, "inputs")?))?;
        *out(result, "result")? = incidence_out(inc);
        Ok(())
    })
}

/// Ad valorem rate `inputs.t_adval` on price `inputs.p0`.
///
/// # Safety
/// `inputs` readable, `result` writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_advalorem_incidence(inputs: *const LvtIncidenceInputs, result: *mut LvtIncidence) -> LvtStatus {
    guard(|| {
        let inc = advalorem_incidence(&incidence_inputs(get(inputs, "inputs")?))?;
        *out(result, "result")? = incidence_out(inc);
        Ok(())
    })
}

/// Site value `rent / (r + tau_v)`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvt_capitalization(rent: f64, r: f64, tau_v: f64, value: *mut f64) -> LvtStatus {
    guard(|| {
        *out(value, "value")? = incidence::lvt_capitalization(rent, r, tau_v)?;
        Ok(())
    })
}
