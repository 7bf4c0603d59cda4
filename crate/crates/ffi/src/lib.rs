//! C ABI for the greyshot library.
//!
//! Every function returns a [`GsStatus`]; results come back through out
//! pointers. Trained parameters live behind the opaque [`GsParams`] handle,
//! which the caller releases with [`greyshot_params_free`]. After a failure,
//! [`greyshot_last_error`] describes it until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use greyshot::model::{self, Direction, GreyShotParams, TrainConfig};
use greyshot::{grey, metrics, Error, Gm11Model, PopularityProfile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    NearSingular = 4,
    NonPositiveTransform = 5,
    Degenerate = 6,
    Io = 7,
    Parse = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> GsStatus {
    match err {
        Error::EmptySeries
        | Error::SeriesTooShort { .. }
        | Error::NonPositiveValue { .. }
        | Error::InvalidArgument(_)
        | Error::EmptyDataset => GsStatus::InvalidArgument,
        Error::NearSingular { .. } => GsStatus::NearSingular,
        Error::IndexOutOfRange { .. } => GsStatus::OutOfRange,
        Error::NonPositiveTransform { .. } => GsStatus::NonPositiveTransform,
        Error::DegenerateProfile | Error::ConstantPredictions => GsStatus::Degenerate,
        Error::Parse { .. } | Error::ParamsFormat(_) | Error::Csv(_) => GsStatus::Parse,
        Error::Io(_) => GsStatus::Io,
        Error::Trial { source, .. } => status_of(source),
    }
}

struct Failure(GsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GsStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside greyshot".into());
            GsStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(GsStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Message for the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next greyshot call on this thread.
#[no_mangle]
pub extern "C" fn greyshot_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Fitted GM(1,1) parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsGm11Model {
    pub a: f64,
    pub b: f64,
    pub x0_first: f64,
    pub alpha: f64,
}

impl From<Gm11Model> for GsGm11Model {
    fn from(m: Gm11Model) -> Self {
        Self {
            a: m.a,
            b: m.b,
            x0_first: m.x0_first,
            alpha: m.alpha,
        }
    }
}

unsafe fn gm11_arg(p: *const GsGm11Model) -> Result<Gm11Model, Failure> {
    let m = p.as_ref().ok_or_else(|| null("model"))?;
    Ok(Gm11Model::new(m.a, m.b, m.x0_first, m.alpha)?)
}

/// Partial sums of `values[0..len]` into `out[0..len]`.
///
/// # Safety
/// `values` and `out` must each point to `len` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn greyshot_ago(values: *const f64, len: usize, out: *mut f64) -> GsStatus {
    guard(|| {
        let input = in_slice(values, len, "values")?;
        let result = grey::ago(input)?;
        out_slice(out, len, "out")?.copy_from_slice(&result);
        Ok(())
    })
}

/// First differences (first element kept) of `values[0..len]` into `out[0..len]`.
///
/// # Safety
/// `values` and `out` must each point to `len` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn greyshot_inverse_ago(
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let input = in_slice(values, len, "values")?;
        let result = grey::inverse_ago(input)?;
        out_slice(out, len, "out")?.copy_from_slice(&result);
        Ok(())
    })
}

/// Least-squares GM(1,1) fit.
///
/// # Safety
/// `values` must point to `len` doubles and `out` to a writable model.
#[no_mangle]
pub unsafe extern "C" fn greyshot_gm11_fit(
    values: *const f64,
    len: usize,
    alpha: f64,
    out: *mut GsGm11Model,
) -> GsStatus {
    guard(|| {
        let series = in_slice(values, len, "values")?;
        let model = grey::fit_gm11(series, alpha)?;
        *out_ref(out, "out")? = model.into();
        Ok(())
    })
}

/// Cumulative forecast at step `t`.
///
/// # Safety
/// `model` must point to a valid model and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn greyshot_gm11_forecast_cumulative(
    model: *const GsGm11Model,
    t: u64,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let model = gm11_arg(model)?;
        *out_ref(out, "out")? = model.forecast_cumulative(t);
        Ok(())
    })
}

/// Restored forecast for steps `1..=horizon` into `out[0..horizon]`.
///
/// # Safety
/// `model` must point to a valid model and `out` to `horizon` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn greyshot_gm11_forecast_restored(
    model: *const GsGm11Model,
    horizon: usize,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let model = gm11_arg(model)?;
        let values = model.forecast_restored(horizon)?;
        out_slice(out, horizon, "out")?.copy_from_slice(&values);
        Ok(())
    })
}

/// Training hyperparameters. `init_scale <= 0` selects `1/sqrt(rank)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsTrainConfig {
    pub rank: usize,
    pub learning_rate: f64,
    pub iterations: u64,
    pub seed: u64,
    pub init_scale: f64,
    pub g_floor: f64,
    pub a_init: f64,
    pub b_init: f64,
    /// Nonzero selects gradient ascent instead of descent.
    pub ascent: u8,
}

impl From<&GsTrainConfig> for TrainConfig {
    fn from(c: &GsTrainConfig) -> Self {
        TrainConfig {
            rank: c.rank,
            learning_rate: c.learning_rate,
            iterations: c.iterations,
            seed: c.seed,
            init_scale: (c.init_scale > 0.0).then_some(c.init_scale),
            g_floor: c.g_floor,
            a_init: c.a_init,
            b_init: c.b_init,
            direction: if c.ascent != 0 {
                Direction::Ascent
            } else {
                Direction::Descent
            },
        }
    }
}

#[no_mangle]
pub extern "C" fn greyshot_train_config_default() -> GsTrainConfig {
    let d = TrainConfig::default();
    GsTrainConfig {
        rank: d.rank,
        learning_rate: d.learning_rate,
        iterations: d.iterations,
        seed: d.seed,
        init_scale: 0.0,
        g_floor: d.g_floor,
        a_init: d.a_init,
        b_init: d.b_init,
        ascent: 0,
    }
}

/// Opaque handle to trained GreyShot parameters.
pub struct GsParams {
    inner: GreyShotParams,
}

fn into_handle(inner: GreyShotParams) -> *mut GsParams {
    Box::into_raw(Box::new(GsParams { inner }))
}

unsafe fn handle<'a>(p: *const GsParams) -> Result<&'a GreyShotParams, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("params"))
}

/// Trains on an `m x n` grid. No rating data is involved.
///
/// On success `*out` owns a new handle; `skipped` (may be null) receives the
/// number of skipped steps.
///
/// # Safety
/// `config` must be valid, `out` writable, `skipped` null or writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_train(
    m: usize,
    n: usize,
    config: *const GsTrainConfig,
    out: *mut *mut GsParams,
    skipped: *mut u64,
) -> GsStatus {
    guard(|| {
        let config = TrainConfig::from(config.as_ref().ok_or_else(|| null("config"))?);
        let slot = out_ref(out, "out")?;
        let outcome = model::train(m, n, &config)?;
        if let Some(s) = skipped.as_mut() {
            *s = outcome.skipped_steps;
        }
        *slot = into_handle(outcome.params);
        Ok(())
    })
}

/// Raw dot-product prediction `U_i . V_j`.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_params_predict(
    params: *const GsParams,
    i: usize,
    j: usize,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let p = handle(params)?;
        *out_ref(out, "out")? = p.predict(i, j)?;
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn greyshot_params_dims(
    params: *const GsParams,
    users: *mut usize,
    items: *mut usize,
    rank: *mut usize,
) -> GsStatus {
    guard(|| {
        let p = handle(params)?;
        for (slot, value) in [(users, p.users()), (items, p.items()), (rank, p.rank())] {
            if let Some(s) = slot.as_mut() {
                *s = value;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn greyshot_params_grey(
    params: *const GsParams,
    a: *mut f64,
    b: *mut f64,
) -> GsStatus {
    guard(|| {
        let p = handle(params)?;
        if let Some(s) = a.as_mut() {
            *s = p.a;
        }
        if let Some(s) = b.as_mut() {
            *s = p.b;
        }
        Ok(())
    })
}

/// Writes the `greyshot-params v1` text format.
///
/// # Safety
/// `params` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn greyshot_params_save(
    params: *const GsParams,
    path: *const c_char,
) -> GsStatus {
    guard(|| {
        let p = handle(params)?;
        let path = path_arg(path)?;
        p.write_to(BufWriter::new(File::create(path).map_err(Error::from)?))?;
        Ok(())
    })
}

/// Reads a `greyshot-params v1` file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_params_load(
    path: *const c_char,
    out: *mut *mut GsParams,
) -> GsStatus {
    guard(|| {
        let path = path_arg(path)?;
        let slot = out_ref(out, "out")?;
        let file = File::open(path).map_err(Error::from)?;
        *slot = into_handle(GreyShotParams::read_from(BufReader::new(file))?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn greyshot_params_free(params: *mut GsParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// `(1 - b/a) e^{-a x} + b/a`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_grey_transform(
    x: f64,
    a: f64,
    b: f64,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        *out_ref(out, "out")? = model::grey_transform(x, a, b)?;
        Ok(())
    })
}

/// `g^g`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_likelihood_term(g: f64, out: *mut f64) -> GsStatus {
    guard(|| {
        *out_ref(out, "out")? = model::likelihood_term(g)?;
        Ok(())
    })
}

/// Gradients of `g^g` at dot product `x`: `d/da`, `d/db`, and the scalar `s`
/// with `d/dU_i = s V_j`, `d/dV_j = s U_i`. Any out pointer may be null.
///
/// # Safety
/// Non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_gradients(
    x: f64,
    a: f64,
    b: f64,
    g_floor: f64,
    grad_a: *mut f64,
    grad_b: *mut f64,
    factor_scale: *mut f64,
) -> GsStatus {
    guard(|| {
        let ga = model::grad_a_at(x, a, b, g_floor)?;
        let gb = model::grad_b_at(x, a, b, g_floor)?;
        let s = model::factor_gradient_scale(x, a, b, g_floor)?;
        for (slot, value) in [(grad_a, ga), (grad_b, gb), (factor_scale, s)] {
            if let Some(o) = slot.as_mut() {
                *o = value;
            }
        }
        Ok(())
    })
}

/// Mean absolute error of `predictions` against `ratings` (no rescaling).
///
/// # Safety
/// Both arrays must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_mae(
    predictions: *const f64,
    ratings: *const f64,
    len: usize,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let p = in_slice(predictions, len, "predictions")?;
        let r = in_slice(ratings, len, "ratings")?;
        *out_ref(out, "out")? = metrics::mae_of(p, r)?;
        Ok(())
    })
}

/// Degree of Matthew effect over per-item top-L counts (zeros are ignored).
///
/// # Safety
/// `counts` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn greyshot_dme(counts: *const u64, len: usize, out: *mut f64) -> GsStatus {
    guard(|| {
        let c = in_slice(counts, len, "counts")?;
        let profile = PopularityProfile::from_counts(c.iter().copied().enumerate());
        *out_ref(out, "out")? = metrics::dme(&profile)?;
        Ok(())
    })
}
