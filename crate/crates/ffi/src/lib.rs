//! C ABI for the `lrbs` library.
//!
//! Every fallible function returns an [`LrbsStatus`]; on failure the message
//! is available from [`lrbs_last_error_message`] on the same thread until the
//! next call. Models are opaque handles created by [`lrbs_model_load`] or
//! [`lrbs_train`] and released with [`lrbs_model_free`].
//!
//! Sample buffers are row-major with one sample per row, so a block of `n`
//! samples of dimension `d` holds `n * d` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use lrbs::eval::average_precision;
use lrbs::optimizer::{train_with_pca, TrainConfig};
use lrbs::{DenseMatrix, Error, LabeledModality, SimilarityModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrbsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Validation = 4,
    Numerical = 5,
    Panic = 6,
}

/// Training options. `pca_energy <= 0` disables PCA.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrbsTrainConfig {
    pub lambda: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub eta0: f64,
    pub backtrack_shrink: f64,
    pub seed: u64,
    pub pca_energy: f64,
}

/// Opaque trained model.
pub struct LrbsModel {
    inner: SimilarityModel,
}

struct Failure {
    status: LrbsStatus,
    message: String,
}

impl Failure {
    fn new(status: LrbsStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => LrbsStatus::Io,
            Error::Numerical(_) => LrbsStatus::Numerical,
            Error::InvalidArgument(_) => LrbsStatus::InvalidArgument,
            _ => LrbsStatus::Validation,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LrbsStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LrbsStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("panic: {msg}"));
            LrbsStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(
            LrbsStatus::NullPointer,
            format!("{what} is null"),
        ))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be valid for `len` reads unless `len` is zero.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be valid for `len` writes unless `len` is zero.
unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn product(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure::new(LrbsStatus::InvalidArgument, "buffer size overflows"))
}

/// `count x dim` row-major samples as a `dim x count` feature matrix.
unsafe fn samples(
    p: *const f64,
    count: usize,
    dim: usize,
    what: &str,
) -> Result<DenseMatrix, Failure> {
    let data = slice(p, product(count, dim)?, what)?.to_vec();
    Ok(DenseMatrix::from_vec(count, dim, data)?.transpose())
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    non_null(p, "path")?;
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(LrbsStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn model_ref<'a>(p: *const LrbsModel) -> Result<&'a LrbsModel, Failure> {
    non_null(p, "model")?;
    Ok(&*p)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrbs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn lrbs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn lrbs_train_config_default() -> LrbsTrainConfig {
    let d = TrainConfig::default();
    LrbsTrainConfig {
        lambda: d.lambda,
        max_iters: d.max_iters,
        rel_tol: d.rel_tol,
        eta0: d.eta0,
        backtrack_shrink: d.backtrack_shrink,
        seed: d.seed,
        pca_energy: 0.0,
    }
}

/// Loads a model file; on success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrbs_model_load(
    path: *const c_char,
    out: *mut *mut LrbsModel,
) -> LrbsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let model = lrbs::data::load_model(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(LrbsModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and `path` be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lrbs_model_save(
    model: *const LrbsModel,
    path: *const c_char,
) -> LrbsStatus {
    guard(|| {
        let m = model_ref(model)?;
        lrbs::data::save_model(&path_arg(path)?, &m.inner)?;
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrbs_model_free(model: *mut LrbsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Raw input dimensions and the shape of `M`.
///
/// # Safety
/// All pointers must be valid; output pointers may be NULL to skip them.
#[no_mangle]
pub unsafe extern "C" fn lrbs_model_dims(
    model: *const LrbsModel,
    dim_x: *mut usize,
    dim_z: *mut usize,
    m_rows: *mut usize,
    m_cols: *mut usize,
) -> LrbsStatus {
    guard(|| {
        let m = &model_ref(model)?.inner;
        let (dx, dz) = m.input_dims();
        for (p, v) in [
            (dim_x, dx),
            (dim_z, dz),
            (m_rows, m.m.rows()),
            (m_cols, m.m.cols()),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Writes the `n_x x n_z` row-major score matrix `x_i^T M z_j` to `out`.
///
/// # Safety
/// `x` holds `n_x * dim_x` doubles, `z` holds `n_z * dim_z` doubles and `out`
/// has room for `n_x * n_z`.
#[no_mangle]
pub unsafe extern "C" fn lrbs_model_score(
    model: *const LrbsModel,
    x: *const f64,
    n_x: usize,
    z: *const f64,
    n_z: usize,
    out: *mut f64,
) -> LrbsStatus {
    guard(|| {
        let m = &model_ref(model)?.inner;
        let (dx, dz) = m.input_dims();
        let xs = samples(x, n_x, dx, "x")?;
        let zs = samples(z, n_z, dz, "z")?;
        let out = slice_mut(out, product(n_x, n_z)?, "out")?;
        if n_x == 0 || n_z == 0 {
            return Ok(());
        }
        let s = m.score(&xs, &zs)?;
        out.copy_from_slice(s.as_slice());
        Ok(())
    })
}

/// Trains a model from labeled samples of both modalities.
///
/// # Safety
/// `x` holds `n_x * dim_x` doubles and `x_labels` `n_x` labels (likewise for
/// `z`); `config` may be NULL for defaults; `out` must be valid;
/// `objective` may be NULL.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn lrbs_train(
    x: *const f64,
    x_labels: *const i64,
    n_x: usize,
    dim_x: usize,
    z: *const f64,
    z_labels: *const i64,
    n_z: usize,
    dim_z: usize,
    config: *const LrbsTrainConfig,
    out: *mut *mut LrbsModel,
    objective: *mut f64,
) -> LrbsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let c = if config.is_null() {
            lrbs_train_config_default()
        } else {
            *config
        };
        let xm = LabeledModality::new(
            samples(x, n_x, dim_x, "x")?,
            slice(x_labels, n_x, "x_labels")?.to_vec(),
        )?;
        let zm = LabeledModality::new(
            samples(z, n_z, dim_z, "z")?,
            slice(z_labels, n_z, "z_labels")?.to_vec(),
        )?;
        let cfg = TrainConfig {
            lambda: c.lambda,
            max_iters: c.max_iters,
            rel_tol: c.rel_tol,
            eta0: c.eta0,
            backtrack_shrink: c.backtrack_shrink,
            seed: c.seed,
        };
        let pca = (c.pca_energy > 0.0).then_some(c.pca_energy);
        let (model, trace) = train_with_pca(&xm, &zm, &cfg, pca)?;
        if !objective.is_null() {
            *objective = trace.final_best_objective();
        }
        *out = Box::into_raw(Box::new(LrbsModel { inner: model }));
        Ok(())
    })
}

/// Average precision of a ranked relevance list (nonzero bytes are relevant).
///
/// # Safety
/// `relevance` holds `len` bytes and `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn lrbs_average_precision(
    relevance: *const u8,
    len: usize,
    out: *mut f64,
) -> LrbsStatus {
    guard(|| {
        non_null(out, "out")?;
        let rel: Vec<bool> = slice(relevance, len, "relevance")?
            .iter()
            .map(|&b| b != 0)
            .collect();
        *out = average_precision(&rel);
        Ok(())
    })
}

/// Singular value thresholding of a row-major `rows x cols` matrix.
///
/// # Safety
/// `l` and `out` each hold `rows * cols` doubles; `rank` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn lrbs_svt(
    l: *const f64,
    rows: usize,
    cols: usize,
    gamma: f64,
    out: *mut f64,
    rank: *mut usize,
) -> LrbsStatus {
    guard(|| {
        let n = product(rows, cols)?;
        let lm = DenseMatrix::from_vec_finite(rows, cols, slice(l, n, "l")?.to_vec())?;
        let out = slice_mut(out, n, "out")?;
        let shrunk = lrbs::prox::svt_with_spectrum(&lm, gamma)?;
        out.copy_from_slice(shrunk.matrix.as_slice());
        if !rank.is_null() {
            *rank = shrunk.rank();
        }
        Ok(())
    })
}
