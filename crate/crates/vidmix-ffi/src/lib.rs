//! C ABI over the mixing engine.
//!
//! Conventions: every fallible function returns a [`VmStatus`] and writes
//! results through out-pointers. Handles are opaque; free each with its
//! matching `vm_*_free`. On failure, `vm_last_error` returns the calling
//! thread's most recent error message. Buffers are always copied across the
//! boundary; no function retains caller memory.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vidmix::batch::{
    fixed_lambda_batch_loss, mixed_batch_loss, BatchMixPlan, MixStrategy, Prediction,
};
use vidmix::clip::{BinaryMask, Clip, ClipShape, Label};
use vidmix::masks::{
    aggregate, decode_rle, encode_rle, AggregatedMask, InstanceMaskSet, MaskMode, MaskParseError,
};
use vidmix::objectmix::{compose_onto, compose_pair, coverage_lambda, mix_labels};
use vidmix::videomix::{apply_videomix, sample_patch, PatchSpec};
use vidmix::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    MalformedMask = 4,
    Geometry = 5,
    Io = 6,
    Json = 7,
    /// A failure tied to a named input file.
    File = 8,
    /// A string argument was not valid UTF-8.
    Utf8 = 9,
    /// An internal invariant failed; the handle state is still consistent.
    Panic = 10,
}

/// Mask aggregation across a clip.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmMaskMode {
    /// Per-frame union of instances.
    Spatial = 0,
    /// One union over all frames, held fixed per frame.
    Spatiotemporal = 1,
}

/// A rectangle-mix patch in real coordinates; `lam` is the drawn area
/// fraction and the corners are already clamped to the frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmPatch {
    pub lam: f64,
    pub w1: f64,
    pub w2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// A dense float video clip (opaque).
pub struct VmClip {
    inner: Clip,
}

/// A per-frame instance-mask set (opaque).
pub struct VmMaskSet {
    inner: InstanceMaskSet,
}

/// An aggregated binary mask per frame (opaque).
pub struct VmAggMask {
    inner: AggregatedMask,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn status_of(err: &Error) -> VmStatus {
    match err {
        Error::DimensionMismatch(_) => VmStatus::DimensionMismatch,
        Error::MalformedMask(_) => VmStatus::MalformedMask,
        Error::InvalidArgument(_) => VmStatus::InvalidArgument,
        Error::Geometry(_) => VmStatus::Geometry,
        Error::Io { .. } => VmStatus::Io,
        Error::Json { .. } => VmStatus::Json,
        Error::File { .. } => VmStatus::File,
    }
}

fn fail(err: Error) -> VmStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn null_fail() -> VmStatus {
    set_error("null pointer argument");
    VmStatus::NullPointer
}

/// Runs `f`, converting panics into `VM_STATUS_PANIC`.
fn guarded<F: FnOnce() -> VmStatus>(f: F) -> VmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            VmStatus::Panic
        }
    }
}

/// Reads `len` items at `ptr`; a null `ptr` is accepted only when `len` is 0.
unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, VmStatus> {
    if ptr.is_null() {
        return Err(null_fail());
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        VmStatus::Utf8
    })
}

/// The calling thread's most recent error message; empty until a call fails.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn vm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `text` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vm_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Creates a clip from a dense frame-major buffer laid out as
/// `[frame][channel][row][column]`; `len` must equal
/// `frames * channels * height * width` and every value must be finite.
///
/// # Safety
/// `data` must point to `len` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_clip_create(
    frames: usize,
    channels: usize,
    height: usize,
    width: usize,
    data: *const f32,
    len: usize,
    out: *mut *mut VmClip,
) -> VmStatus {
    guarded(|| {
        if out.is_null() {
            return null_fail();
        }
        let Some(values) = slice_arg(data, len) else {
            return null_fail();
        };
        let shape = match ClipShape::new(frames, channels, height, width) {
            Ok(shape) => shape,
            Err(e) => return fail(e),
        };
        match Clip::new(shape, values.to_vec()) {
            Ok(clip) => {
                *out = Box::into_raw(Box::new(VmClip { inner: clip }));
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Frees a clip handle. Null is a no-op.
///
/// # Safety
/// `clip` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vm_clip_free(clip: *mut VmClip) {
    if !clip.is_null() {
        drop(Box::from_raw(clip));
    }
}

/// Reports a clip's dimensions.
///
/// # Safety
/// All pointers must be valid; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_clip_shape(
    clip: *const VmClip,
    out_frames: *mut usize,
    out_channels: *mut usize,
    out_height: *mut usize,
    out_width: *mut usize,
) -> VmStatus {
    guarded(|| {
        let Some(clip) = clip.as_ref() else {
            return null_fail();
        };
        if out_frames.is_null()
            || out_channels.is_null()
            || out_height.is_null()
            || out_width.is_null()
        {
            return null_fail();
        }
        let shape = clip.inner.shape();
        *out_frames = shape.frames;
        *out_channels = shape.channels;
        *out_height = shape.height;
        *out_width = shape.width;
        VmStatus::Ok
    })
}

/// Reports the total element count of a clip's buffer.
///
/// # Safety
/// Both pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_clip_volume(clip: *const VmClip, out: *mut usize) -> VmStatus {
    guarded(|| {
        let Some(clip) = clip.as_ref() else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        *out = clip.inner.shape().volume();
        VmStatus::Ok
    })
}

/// Copies a clip's buffer into `buf`, which must hold exactly `len ==
/// vm_clip_volume` floats.
///
/// # Safety
/// `buf` must point to `len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn vm_clip_copy_data(
    clip: *const VmClip,
    buf: *mut f32,
    len: usize,
) -> VmStatus {
    guarded(|| {
        let Some(clip) = clip.as_ref() else {
            return null_fail();
        };
        if buf.is_null() {
            return null_fail();
        }
        let data = clip.inner.data();
        if data.len() != len {
            return fail(Error::DimensionMismatch(format!(
                "clip holds {} values, buffer holds {len}",
                data.len()
            )));
        }
        slice::from_raw_parts_mut(buf, len).copy_from_slice(data);
        VmStatus::Ok
    })
}

fn mask_parse_fail(err: MaskParseError) -> VmStatus {
    let status = match &err {
        MaskParseError::Json(_) => VmStatus::Json,
        MaskParseError::Data(inner) => status_of(inner),
    };
    set_error(&err.to_string());
    status
}

/// Parses a mask sidecar document from a JSON string.
///
/// # Safety
/// `text` must be a readable NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_mask_set_parse_json(
    text: *const c_char,
    out: *mut *mut VmMaskSet,
) -> VmStatus {
    guarded(|| {
        if out.is_null() {
            return null_fail();
        }
        let text = match str_arg(text) {
            Ok(text) => text,
            Err(status) => return status,
        };
        match InstanceMaskSet::from_json_str(text) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(VmMaskSet { inner: set }));
                VmStatus::Ok
            }
            Err(e) => mask_parse_fail(e),
        }
    })
}

/// Reads and parses a mask sidecar file.
///
/// # Safety
/// `path` must be a readable NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_mask_set_read_file(
    path: *const c_char,
    out: *mut *mut VmMaskSet,
) -> VmStatus {
    guarded(|| {
        if out.is_null() {
            return null_fail();
        }
        let path = match str_arg(path) {
            Ok(path) => path,
            Err(status) => return status,
        };
        match InstanceMaskSet::from_json_file(Path::new(path)) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(VmMaskSet { inner: set }));
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Frees a mask-set handle. Null is a no-op.
///
/// # Safety
/// `set` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vm_mask_set_free(set: *mut VmMaskSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Reports how many frames a mask set covers.
///
/// # Safety
/// Both pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_mask_set_frame_count(
    set: *const VmMaskSet,
    out: *mut usize,
) -> VmStatus {
    guarded(|| {
        let Some(set) = set.as_ref() else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        *out = set.inner.frame_count();
        VmStatus::Ok
    })
}

/// Drops every instance whose detection score is below `min_score`;
/// instances without a score are kept.
///
/// # Safety
/// `set` must be a valid handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vm_mask_set_retain_min_score(
    set: *mut VmMaskSet,
    min_score: f64,
) -> VmStatus {
    guarded(|| {
        let Some(set) = set.as_mut() else {
            return null_fail();
        };
        if !min_score.is_finite() || !(0.0..=1.0).contains(&min_score) {
            return fail(Error::InvalidArgument(format!(
                "minimum score {min_score} outside [0,1]"
            )));
        }
        set.inner.retain_min_score(min_score);
        VmStatus::Ok
    })
}

/// Serializes a mask set back to canonical sidecar JSON. The returned string
/// must be released with `vm_string_free`.
///
/// # Safety
/// Both pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_mask_set_to_json(
    set: *const VmMaskSet,
    out: *mut *mut c_char,
) -> VmStatus {
    guarded(|| {
        let Some(set) = set.as_ref() else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        let text = set.inner.to_json_string();
        match CString::new(text) {
            Ok(c) => {
                *out = c.into_raw();
                VmStatus::Ok
            }
            Err(_) => {
                set_error("serialized JSON contained a NUL byte");
                VmStatus::Panic
            }
        }
    })
}

/// Aggregates a mask set: per-frame unions, optionally unioned again over
/// time so every frame carries the same mask.
///
/// # Safety
/// Both pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_mask_set_aggregate(
    set: *const VmMaskSet,
    mode: VmMaskMode,
    out: *mut *mut VmAggMask,
) -> VmStatus {
    guarded(|| {
        let Some(set) = set.as_ref() else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        let mode = match mode {
            VmMaskMode::Spatial => MaskMode::Spatial,
            VmMaskMode::Spatiotemporal => MaskMode::Spatiotemporal,
        };
        match aggregate(&set.inner, mode) {
            Ok(agg) => {
                *out = Box::into_raw(Box::new(VmAggMask { inner: agg }));
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Frees an aggregated-mask handle. Null is a no-op.
///
/// # Safety
/// `mask` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vm_agg_mask_free(mask: *mut VmAggMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// The fraction of set pixels over the whole clip volume (the label weight
/// of the pasted source).
///
/// # Safety
/// Both pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_agg_mask_coverage(mask: *const VmAggMask, out: *mut f64) -> VmStatus {
    guarded(|| {
        let Some(mask) = mask.as_ref() else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        let shape = match ClipShape::new(
            mask.inner.frame_count(),
            1,
            mask.inner.height(),
            mask.inner.width(),
        ) {
            Ok(shape) => shape,
            Err(e) => return fail(e),
        };
        match coverage_lambda(&mask.inner, &shape) {
            Ok(v) => {
                *out = v;
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Composes one directed output: `fg` where the mask is set, `bg` elsewhere.
///
/// # Safety
/// All handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_compose_onto(
    fg: *const VmClip,
    bg: *const VmClip,
    mask: *const VmAggMask,
    out: *mut *mut VmClip,
) -> VmStatus {
    guarded(|| {
        let (Some(fg), Some(bg), Some(mask)) = (fg.as_ref(), bg.as_ref(), mask.as_ref()) else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        match compose_onto(&fg.inner, &bg.inner, &mask.inner) {
            Ok(clip) => {
                *out = Box::into_raw(Box::new(VmClip { inner: clip }));
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Composes both directed outputs: `out12` takes `v1` under `m1` over `v2`;
/// `out21` takes `v2` under `m2` over `v1`.
///
/// # Safety
/// All handles must be valid; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_compose_pair(
    v1: *const VmClip,
    v2: *const VmClip,
    m1: *const VmAggMask,
    m2: *const VmAggMask,
    out12: *mut *mut VmClip,
    out21: *mut *mut VmClip,
) -> VmStatus {
    guarded(|| {
        let (Some(v1), Some(v2), Some(m1), Some(m2)) =
            (v1.as_ref(), v2.as_ref(), m1.as_ref(), m2.as_ref())
        else {
            return null_fail();
        };
        if out12.is_null() || out21.is_null() {
            return null_fail();
        }
        match compose_pair(&v1.inner, &v2.inner, &m1.inner, &m2.inner) {
            Ok((a, b)) => {
                *out12 = Box::into_raw(Box::new(VmClip { inner: a }));
                *out21 = Box::into_raw(Box::new(VmClip { inner: b }));
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Blends two label weight vectors both ways: `out12 = lam1*y1 +
/// (1-lam1)*y2` and `out21 = (1-lam2)*y1 + lam2*y2`. Each vector holds
/// `num_classes` weights summing to 1.
///
/// # Safety
/// `y1` and `y2` must point to `num_classes` readable doubles; `out12` and
/// `out21` must point to `num_classes` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vm_mix_labels(
    y1: *const f64,
    y2: *const f64,
    num_classes: usize,
    lam1: f64,
    lam2: f64,
    out12: *mut f64,
    out21: *mut f64,
) -> VmStatus {
    guarded(|| {
        let (Some(y1), Some(y2)) = (slice_arg(y1, num_classes), slice_arg(y2, num_classes)) else {
            return null_fail();
        };
        if out12.is_null() || out21.is_null() {
            return null_fail();
        }
        let a = match Label::new(y1.to_vec()) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        let b = match Label::new(y2.to_vec()) {
            Ok(b) => b,
            Err(e) => return fail(e),
        };
        match mix_labels(&a, &b, lam1, lam2) {
            Ok((m12, m21)) => {
                slice::from_raw_parts_mut(out12, num_classes).copy_from_slice(m12.weights());
                slice::from_raw_parts_mut(out21, num_classes).copy_from_slice(m21.weights());
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds a patch from explicit draws: area fraction `lam` and center
/// `(w_c, h_c)`, with all four corners clamped to a `width` x `height`
/// frame.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_patch_from_draws(
    lam: f64,
    w_c: f64,
    h_c: f64,
    width: usize,
    height: usize,
    out: *mut VmPatch,
) -> VmStatus {
    guarded(|| {
        if out.is_null() {
            return null_fail();
        }
        match PatchSpec::from_draws(lam, w_c, h_c, width, height) {
            Ok(spec) => {
                *out = VmPatch {
                    lam: spec.lam,
                    w1: spec.w1,
                    w2: spec.w2,
                    h1: spec.h1,
                    h2: spec.h2,
                };
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Draws a patch: `lam ~ Beta(alpha, alpha)` and a uniform center, exactly
/// as the pipeline draws them for a given stream seed.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_sample_patch(
    alpha: f64,
    width: usize,
    height: usize,
    seed: u64,
    out: *mut VmPatch,
) -> VmStatus {
    guarded(|| {
        if out.is_null() {
            return null_fail();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match sample_patch(&mut rng, alpha, width, height) {
            Ok(spec) => {
                *out = VmPatch {
                    lam: spec.lam,
                    w1: spec.w1,
                    w2: spec.w2,
                    h1: spec.h1,
                    h2: spec.h2,
                };
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Splices the patch rectangle of `src` into `base` on every frame, writing
/// the realized area fraction (the label weight of `src`) to
/// `out_fraction`.
///
/// # Safety
/// All handles and `patch` must be valid; `out_clip` and `out_fraction`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_apply_videomix(
    base: *const VmClip,
    src: *const VmClip,
    patch: *const VmPatch,
    out_clip: *mut *mut VmClip,
    out_fraction: *mut f64,
) -> VmStatus {
    guarded(|| {
        let (Some(base), Some(src), Some(patch)) = (base.as_ref(), src.as_ref(), patch.as_ref())
        else {
            return null_fail();
        };
        if out_clip.is_null() || out_fraction.is_null() {
            return null_fail();
        }
        let spec = match PatchSpec::new(patch.lam, patch.w1, patch.w2, patch.h1, patch.h2) {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        match apply_videomix(&base.inner, &src.inner, &spec) {
            Ok((clip, fraction)) => {
                *out_clip = Box::into_raw(Box::new(VmClip { inner: clip }));
                *out_fraction = fraction;
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn labels_from_flat(flat: &[f64], batch: usize, num_classes: usize) -> Result<Vec<Label>, Error> {
    flat.chunks_exact(num_classes)
        .take(batch)
        .map(|chunk| Label::new(chunk.to_vec()))
        .collect()
}

fn preds_from_flat(
    flat: &[f64],
    batch: usize,
    num_classes: usize,
) -> Result<Vec<Prediction>, Error> {
    flat.chunks_exact(num_classes)
        .take(batch)
        .map(|chunk| Prediction::new(chunk.to_vec()))
        .collect()
}

/// The per-sample weighted batch loss: for each slot `i`,
/// `lambdas[i] * CE(preds[i], labels[i]) + (1 - lambdas[i]) *
/// CE(preds[i], labels[pairing[i]])`. `preds` and `labels` are row-major
/// `batch x num_classes`; `pairing` is a 0-based permutation.
///
/// # Safety
/// `preds` and `labels` must hold `batch * num_classes` readable doubles,
/// `pairing` and `lambdas` `batch` readable entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_mixed_batch_loss(
    preds: *const f64,
    labels: *const f64,
    batch: usize,
    num_classes: usize,
    pairing: *const usize,
    lambdas: *const f64,
    out: *mut f64,
) -> VmStatus {
    guarded(|| {
        let total = match batch.checked_mul(num_classes) {
            Some(total) => total,
            None => {
                return fail(Error::InvalidArgument(
                    "batch * num_classes overflows".to_string(),
                ))
            }
        };
        let (Some(preds), Some(labels), Some(pairing), Some(lambdas)) = (
            slice_arg(preds, total),
            slice_arg(labels, total),
            slice_arg(pairing, batch),
            slice_arg(lambdas, batch),
        ) else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        let preds = match preds_from_flat(preds, batch, num_classes) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        let labels = match labels_from_flat(labels, batch, num_classes) {
            Ok(l) => l,
            Err(e) => return fail(e),
        };
        let plan = BatchMixPlan {
            batch_size: batch,
            applied: true,
            pairing: pairing.to_vec(),
            per_sample_lambda: lambdas.to_vec(),
            strategy: MixStrategy::Objectmix,
        };
        match mixed_batch_loss(&preds, &labels, &plan) {
            Ok(loss) => {
                *out = loss;
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// The shared-lambda variant: `lam * sum_i CE(preds[i], labels[i]) +
/// (1 - lam) * sum_i CE(preds[i], labels[pairing[i]])`.
///
/// # Safety
/// Same layout requirements as `vm_mixed_batch_loss`.
#[no_mangle]
pub unsafe extern "C" fn vm_fixed_lambda_batch_loss(
    preds: *const f64,
    labels: *const f64,
    batch: usize,
    num_classes: usize,
    pairing: *const usize,
    lam: f64,
    out: *mut f64,
) -> VmStatus {
    guarded(|| {
        let total = match batch.checked_mul(num_classes) {
            Some(total) => total,
            None => {
                return fail(Error::InvalidArgument(
                    "batch * num_classes overflows".to_string(),
                ))
            }
        };
        let (Some(preds), Some(labels), Some(pairing)) = (
            slice_arg(preds, total),
            slice_arg(labels, total),
            slice_arg(pairing, batch),
        ) else {
            return null_fail();
        };
        if out.is_null() {
            return null_fail();
        }
        let preds = match preds_from_flat(preds, batch, num_classes) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        let labels = match labels_from_flat(labels, batch, num_classes) {
            Ok(l) => l,
            Err(e) => return fail(e),
        };
        match fixed_lambda_batch_loss(&preds, &labels, pairing, lam) {
            Ok(loss) => {
                *out = loss;
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Decodes column-major run-length counts (first run counts zeros) into a
/// row-major 0/1 byte grid. `out_bits` must hold `height * width` bytes.
///
/// # Safety
/// `runs` must hold `run_count` readable entries; `out_bits` must hold
/// `height * width` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vm_rle_decode(
    runs: *const i64,
    run_count: usize,
    height: usize,
    width: usize,
    out_bits: *mut u8,
) -> VmStatus {
    guarded(|| {
        let Some(runs) = slice_arg(runs, run_count) else {
            return null_fail();
        };
        if out_bits.is_null() {
            return null_fail();
        }
        match decode_rle(runs, height, width) {
            Ok(mask) => {
                let total = match height.checked_mul(width) {
                    Some(total) => total,
                    None => {
                        return fail(Error::InvalidArgument(
                            "height * width overflows".to_string(),
                        ))
                    }
                };
                slice::from_raw_parts_mut(out_bits, total).copy_from_slice(mask.bits());
                VmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Encodes a row-major 0/1 byte grid into canonical column-major run-length
/// counts. Two-call pattern: the required run count is always written to
/// `out_len`; when `capacity` is too small nothing else is written and the
/// call returns `VM_STATUS_INVALID_ARGUMENT`, so probe with capacity 0
/// first.
///
/// # Safety
/// `bits` must hold `height * width` readable bytes; `out_runs` must hold
/// `capacity` writable entries (or be null with `capacity` 0); `out_len`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_rle_encode(
    bits: *const u8,
    height: usize,
    width: usize,
    out_runs: *mut i64,
    capacity: usize,
    out_len: *mut usize,
) -> VmStatus {
    guarded(|| {
        let total = match height.checked_mul(width) {
            Some(total) => total,
            None => {
                return fail(Error::InvalidArgument(
                    "height * width overflows".to_string(),
                ))
            }
        };
        let Some(bits) = slice_arg(bits, total) else {
            return null_fail();
        };
        if out_len.is_null() {
            return null_fail();
        }
        let mask = match BinaryMask::new(height, width, bits.to_vec()) {
            Ok(mask) => mask,
            Err(e) => return fail(e),
        };
        let runs = encode_rle(&mask);
        *out_len = runs.len();
        if runs.len() > capacity {
            return fail(Error::InvalidArgument(format!(
                "encoding needs {} runs, capacity is {capacity}",
                runs.len()
            )));
        }
        if !out_runs.is_null() {
            slice::from_raw_parts_mut(out_runs, runs.len()).copy_from_slice(&runs);
        }
        VmStatus::Ok
    })
}
