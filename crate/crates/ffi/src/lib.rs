//! C ABI over the trifuse library.
//!
//! Every function returns a [`TfStatus`]; on failure a description is kept
//! per thread and can be read with [`tf_last_error_message`]. Models and
//! configs are opaque handles released with their matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use trifuse::evaluation::{auc, eer, roc, FrameScore};
use trifuse::fusion::{fuse_raw, BranchWeights, FusionConfig, MissingBranchPolicy};
use trifuse::motion::{compute_hmof, fit_gmm, AutoencoderModel, GmmConfig, GmmModel, HmofConfig};
use trifuse::{
    min_max_invert_normalize, min_max_normalize, BBox, BranchScores, BranchValue, Error, ErrorKind,
    FlowField, PipelineConfig, Preset, TargetId,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    Config = 2,
    Data = 3,
    Numeric = 4,
    /// A string argument was not valid UTF-8.
    InvalidString = 5,
    /// The library panicked; the handle involved should not be reused.
    Internal = 6,
}

impl From<ErrorKind> for TfStatus {
    fn from(kind: ErrorKind) -> Self {
        match kind {
            ErrorKind::Config => TfStatus::Config,
            ErrorKind::Data => TfStatus::Data,
            ErrorKind::Numeric => TfStatus::Numeric,
        }
    }
}

/// Opaque fitted Gaussian mixture.
pub struct TfGmm(GmmModel);

/// Opaque autoencoder.
pub struct TfAutoencoder(AutoencoderModel);

/// Opaque pipeline configuration.
pub struct TfConfig(PipelineConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(TfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.kind().into(), e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(TfStatus::NullArgument, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> FfiResult) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TfStatus::Internal
        }
    }
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out_ptr<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn string(ptr: *const c_char, what: &str) -> Result<String, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(TfStatus::InvalidString, format!("{what} is not UTF-8")))
}

fn preset(name: &str) -> Result<Preset, Failure> {
    name.parse().map_err(Failure::from)
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Min-max normalizes `n` scores into `out` (equal scores map to 0.5).
///
/// # Safety
/// `scores` and `out` must point to `n` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_min_max_normalize(
    scores: *const f64,
    n: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let v = min_max_normalize(input(scores, n, "scores")?)?;
        output(out, n, "out")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Inverted min-max normalization: the lowest score maps to 1.
///
/// # Safety
/// As for [`tf_min_max_normalize`].
#[no_mangle]
pub unsafe extern "C" fn tf_min_max_invert_normalize(
    scores: *const f64,
    n: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let v = min_max_invert_normalize(input(scores, n, "scores")?)?;
        output(out, n, "out")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Magnitude histogram of the `w`x`h` box at (`x`,`y`) in a row-major flow
/// field of interleaved (dx, dy) pairs. Writes `n_bins + 1` values.
///
/// # Safety
/// `flow` must hold `2 * width * height` floats and `out` `out_len` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn tf_hmof(
    flow: *const f32,
    width: u32,
    height: u32,
    x: u32,
    y: u32,
    w: u32,
    h: u32,
    n_bins: usize,
    magnitude_cap: f64,
    out: *mut f64,
    out_len: usize,
) -> TfStatus {
    guard(|| {
        let pixels = width as usize * height as usize;
        let raw = input(flow, 2 * pixels, "flow")?;
        let field = FlowField::new(
            width,
            height,
            raw.chunks_exact(2).map(|p| [p[0], p[1]]).collect(),
        )?;
        let cfg = HmofConfig {
            n_bins,
            magnitude_cap,
        };
        let feature = compute_hmof(&field, BBox::new(x, y, w, h), &cfg)?;
        if out_len != feature.bins.len() {
            return Err(Error::WidthMismatch {
                expected: feature.bins.len(),
                actual: out_len,
            }
            .into());
        }
        output(out, out_len, "out")?.copy_from_slice(&feature.bins);
        Ok(())
    })
}

/// Fits a `k`-component diagonal mixture to `n` row-major samples of `dim`
/// values with the default iteration limits.
///
/// # Safety
/// `samples` must hold `n * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_gmm_fit(
    samples: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    seed: u64,
    out: *mut *mut TfGmm,
) -> TfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()).into());
        }
        let flat = input(samples, n * dim, "samples")?;
        let rows: Vec<Vec<f64>> = flat.chunks_exact(dim).map(<[f64]>::to_vec).collect();
        let fit = fit_gmm(
            &rows,
            &GmmConfig {
                k,
                seed,
                ..GmmConfig::default()
            },
        )?;
        *out = boxed(TfGmm(fit.model));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_gmm_load(path: *const c_char, out: *mut *mut TfGmm) -> TfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let model = GmmModel::load(&PathBuf::from(string(path, "path")?))?;
        *out = boxed(TfGmm(model));
        Ok(())
    })
}

/// # Safety
/// `gmm` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tf_gmm_save(gmm: *const TfGmm, path: *const c_char) -> TfStatus {
    guard(|| {
        let gmm = handle(gmm, "gmm")?;
        gmm.0.save(&PathBuf::from(string(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `gmm` must come from this library; `dim` and `k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_gmm_shape(
    gmm: *const TfGmm,
    k: *mut usize,
    dim: *mut usize,
) -> TfStatus {
    guard(|| {
        let gmm = handle(gmm, "gmm")?;
        *out_ptr(k, "k")? = gmm.0.k();
        *out_ptr(dim, "dim")? = gmm.0.dim();
        Ok(())
    })
}

/// Log density of one point.
///
/// # Safety
/// `x` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_gmm_log_likelihood(
    gmm: *const TfGmm,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let gmm = handle(gmm, "gmm")?;
        *out_ptr(out, "out")? = gmm.0.log_likelihood(input(x, dim, "x")?)?;
        Ok(())
    })
}

/// # Safety
/// `gmm` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_gmm_free(gmm: *mut TfGmm) {
    if !gmm.is_null() {
        drop(Box::from_raw(gmm));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_autoencoder_load(
    path: *const c_char,
    out: *mut *mut TfAutoencoder,
) -> TfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let model = AutoencoderModel::load(&PathBuf::from(string(path, "path")?))?;
        *out = boxed(TfAutoencoder(model));
        Ok(())
    })
}

/// # Safety
/// `ae` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_autoencoder_input_width(
    ae: *const TfAutoencoder,
    out: *mut usize,
) -> TfStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(ae, "ae")?.0.input_width();
        Ok(())
    })
}

/// Reconstruction of `x`; input and output hold the model's input width.
///
/// # Safety
/// `x` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_autoencoder_reconstruct(
    ae: *const TfAutoencoder,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let y = handle(ae, "ae")?.0.reconstruct(input(x, len, "x")?)?;
        output(out, len, "out")?.copy_from_slice(&y);
        Ok(())
    })
}

/// # Safety
/// `ae` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_autoencoder_free(ae: *mut TfAutoencoder) {
    if !ae.is_null() {
        drop(Box::from_raw(ae));
    }
}

fn branch(v: *const f64) -> Option<BranchValue> {
    // SAFETY: callers pass null or a readable double.
    unsafe { v.as_ref() }.map(|&n| BranchValue {
        raw: n,
        normalized: n,
    })
}

/// Weighted max of the normalized branch scores that are present; pass null
/// for a missing branch.
///
/// # Safety
/// Each non-null score pointer must reference one double; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_fuse_raw(
    obj: *const f64,
    act: *const f64,
    mot: *const f64,
    w_obj: f64,
    w_act: f64,
    w_mot: f64,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = FusionConfig {
            weights: BranchWeights {
                obj: w_obj,
                act: w_act,
                mot: w_mot,
            },
            decision_threshold: 0.5,
            missing_branch: MissingBranchPolicy::Ignore,
            motion_flag_threshold: 0.5,
        };
        cfg.validate()?;
        let scores = BranchScores {
            target_id: TargetId(0),
            frame_index: 0,
            sco_obj: branch(obj),
            sco_act: branch(act),
            sco_mot: branch(mot),
        };
        *out = fuse_raw(&scores, &cfg)?;
        Ok(())
    })
}

/// Frame-level ROC AUC and EER over `n` frames; `labels[i]` is non-zero for
/// abnormal frames. Either output may be null.
///
/// # Safety
/// `scores` and `labels` must each hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn tf_roc_auc_eer(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    auc_out: *mut f64,
    eer_out: *mut f64,
) -> TfStatus {
    guard(|| {
        let scores = input(scores, n, "scores")?;
        let labels = input(labels, n, "labels")?;
        let frames: Vec<FrameScore> = scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&score, &l))| FrameScore {
                frame_index: i as u32,
                score,
                gt_abnormal: l != 0,
            })
            .collect();
        let curve = roc(&frames)?;
        if let Some(a) = auc_out.as_mut() {
            *a = auc(&curve);
        }
        if let Some(e) = eer_out.as_mut() {
            *e = eer(&curve);
        }
        Ok(())
    })
}

/// Configuration of a named preset ("umn" or "ped2").
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_config_preset(
    name: *const c_char,
    out: *mut *mut TfConfig,
) -> TfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = PipelineConfig::preset(preset(&string(name, "name")?)?);
        *out = boxed(TfConfig(cfg));
        Ok(())
    })
}

/// Config file layered over `fallback_preset` (used when the file names none).
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_config_load(
    path: *const c_char,
    fallback_preset: *const c_char,
    out: *mut *mut TfConfig,
) -> TfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let fallback = preset(&string(fallback_preset, "fallback_preset")?)?;
        let cfg = PipelineConfig::load(&PathBuf::from(string(path, "path")?), fallback)?;
        *out = boxed(TfConfig(cfg));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tf_config_set_seed(cfg: *mut TfConfig, seed: u64) -> TfStatus {
    guard(|| {
        out_ptr(cfg, "cfg")?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_config_free(cfg: *mut TfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs train, score and eval on the dataset at `data_root`, writing all
/// artifacts to `out_dir`. On success `*summary_json` receives the summary,
/// to be released with [`tf_string_free`].
///
/// # Safety
/// Strings must be NUL-terminated; `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tf_run_pipeline(
    cfg: *const TfConfig,
    data_root: *const c_char,
    out_dir: *const c_char,
    summary_json: *mut *mut c_char,
) -> TfStatus {
    guard(|| {
        let summary_json = out_ptr(summary_json, "summary_json")?;
        let cfg = handle(cfg, "cfg")?;
        cfg.0.validate()?;
        let data = PathBuf::from(string(data_root, "data_root")?);
        let out = PathBuf::from(string(out_dir, "out_dir")?);
        let summary = trifuse::pipeline::run_pipeline(&cfg.0, &data, &out)?;
        let json = CString::new(summary.to_json()?).expect("JSON has no NUL bytes");
        *summary_json = json.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn tf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
