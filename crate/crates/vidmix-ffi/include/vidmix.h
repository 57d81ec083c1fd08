#ifndef VIDMIX_H
#define VIDMIX_H

/* Generated by the vidmix-ffi build script; edit src/lib.rs instead. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum {
  VM_STATUS_OK = 0,
  // A required pointer argument was null.
  VM_STATUS_NULL_POINTER = 1,
  VM_STATUS_INVALID_ARGUMENT = 2,
  VM_STATUS_DIMENSION_MISMATCH = 3,
  VM_STATUS_MALFORMED_MASK = 4,
  VM_STATUS_GEOMETRY = 5,
  VM_STATUS_IO = 6,
  VM_STATUS_JSON = 7,
  // A failure tied to a named input file.
  VM_STATUS_FILE = 8,
  // A string argument was not valid UTF-8.
  VM_STATUS_UTF8 = 9,
  // An internal invariant failed; the handle state is still consistent.
  VM_STATUS_PANIC = 10,
} VmStatus;

// Mask aggregation across a clip.
typedef enum {
  // Per-frame union of instances.
  VM_MASK_MODE_SPATIAL = 0,
  // One union over all frames, held fixed per frame.
  VM_MASK_MODE_SPATIOTEMPORAL = 1,
} VmMaskMode;

// An aggregated binary mask per frame (opaque).
typedef struct VmAggMask VmAggMask;

// A dense float video clip (opaque).
typedef struct VmClip VmClip;

// A per-frame instance-mask set (opaque).
typedef struct VmMaskSet VmMaskSet;

// A rectangle-mix patch in real coordinates; `lam` is the drawn area
// fraction and the corners are already clamped to the frame.
typedef struct {
  double lam;
  double w1;
  double w2;
  double h1;
  double h2;
} VmPatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The calling thread's most recent error message; empty until a call fails.
// The pointer stays valid until the next failing call on this thread.
const char *vm_last_error(void);

// Frees a string returned by this library. Null is a no-op.
//
// # Safety
// `text` must be null or a string returned by this library, not yet freed.
void vm_string_free(char *text);

// Creates a clip from a dense frame-major buffer laid out as
// `[frame][channel][row][column]`; `len` must equal
// `frames * channels * height * width` and every value must be finite.
//
// # Safety
// `data` must point to `len` readable floats; `out` must be writable.
VmStatus vm_clip_create(size_t frames,
                        size_t channels,
                        size_t height,
                        size_t width,
                        const float *data,
                        size_t len,
                        VmClip **out);

// Frees a clip handle. Null is a no-op.
//
// # Safety
// `clip` must be null or a handle from this library, not yet freed.
void vm_clip_free(VmClip *clip);

// Reports a clip's dimensions.
//
// # Safety
// All pointers must be valid; the out-pointers must be writable.
VmStatus vm_clip_shape(const VmClip *clip,
                       size_t *out_frames,
                       size_t *out_channels,
                       size_t *out_height,
                       size_t *out_width);

// Reports the total element count of a clip's buffer.
//
// # Safety
// Both pointers must be valid; `out` must be writable.
VmStatus vm_clip_volume(const VmClip *clip, size_t *out);

// Copies a clip's buffer into `buf`, which must hold exactly `len ==
// vm_clip_volume` floats.
//
// # Safety
// `buf` must point to `len` writable floats.
VmStatus vm_clip_copy_data(const VmClip *clip, float *buf, size_t len);

// Parses a mask sidecar document from a JSON string.
//
// # Safety
// `text` must be a readable NUL-terminated string; `out` must be writable.
VmStatus vm_mask_set_parse_json(const char *text, VmMaskSet **out);

// Reads and parses a mask sidecar file.
//
// # Safety
// `path` must be a readable NUL-terminated string; `out` must be writable.
VmStatus vm_mask_set_read_file(const char *path, VmMaskSet **out);

// Frees a mask-set handle. Null is a no-op.
//
// # Safety
// `set` must be null or a handle from this library, not yet freed.
void vm_mask_set_free(VmMaskSet *set);

// Reports how many frames a mask set covers.
//
// # Safety
// Both pointers must be valid; `out` must be writable.
VmStatus vm_mask_set_frame_count(const VmMaskSet *set, size_t *out);

// Drops every instance whose detection score is below `min_score`;
// instances without a score are kept.
//
// # Safety
// `set` must be a valid handle from this library.
VmStatus vm_mask_set_retain_min_score(VmMaskSet *set, double min_score);

// Serializes a mask set back to canonical sidecar JSON. The returned string
// must be released with `vm_string_free`.
//
// # Safety
// Both pointers must be valid; `out` must be writable.
VmStatus vm_mask_set_to_json(const VmMaskSet *set, char **out);

// Aggregates a mask set: per-frame unions, optionally unioned again over
// time so every frame carries the same mask.
//
// # Safety
// Both pointers must be valid; `out` must be writable.
VmStatus vm_mask_set_aggregate(const VmMaskSet *set, VmMaskMode mode, VmAggMask **out);

// Frees an aggregated-mask handle. Null is a no-op.
//
// # Safety
// `mask` must be null or a handle from this library, not yet freed.
void vm_agg_mask_free(VmAggMask *mask);

// The fraction of set pixels over the whole clip volume (the label weight
// of the pasted source).
//
// # Safety
// Both pointers must be valid; `out` must be writable.
VmStatus vm_agg_mask_coverage(const VmAggMask *mask, double *out);

// Composes one directed output: `fg` where the mask is set, `bg` elsewhere.
//
// # Safety
// All handles must be valid; `out` must be writable.
VmStatus vm_compose_onto(const VmClip *fg, const VmClip *bg, const VmAggMask *mask, VmClip **out);

// Composes both directed outputs: `out12` takes `v1` under `m1` over `v2`;
// `out21` takes `v2` under `m2` over `v1`.
//
// # Safety
// All handles must be valid; both out-pointers must be writable.
VmStatus vm_compose_pair(const VmClip *v1,
                         const VmClip *v2,
                         const VmAggMask *m1,
                         const VmAggMask *m2,
                         VmClip **out12,
                         VmClip **out21);

// Blends two label weight vectors both ways: `out12 = lam1*y1 +
// (1-lam1)*y2` and `out21 = (1-lam2)*y1 + lam2*y2`. Each vector holds
// `num_classes` weights summing to 1.
//
// # Safety
// `y1` and `y2` must point to `num_classes` readable doubles; `out12` and
// `out21` must point to `num_classes` writable doubles.
VmStatus vm_mix_labels(const double *y1,
                       const double *y2,
                       size_t num_classes,
                       double lam1,
                       double lam2,
                       double *out12,
                       double *out21);

// Builds a patch from explicit draws: area fraction `lam` and center
// `(w_c, h_c)`, with all four corners clamped to a `width` x `height`
// frame.
//
// # Safety
// `out` must be writable.
VmStatus vm_patch_from_draws(double lam,
                             double w_c,
                             double h_c,
                             size_t width,
                             size_t height,
                             VmPatch *out);

// Draws a patch: `lam ~ Beta(alpha, alpha)` and a uniform center, exactly
// as the pipeline draws them for a given stream seed.
//
// # Safety
// `out` must be writable.
VmStatus vm_sample_patch(double alpha, size_t width, size_t height, uint64_t seed, VmPatch *out);

// Splices the patch rectangle of `src` into `base` on every frame, writing
// the realized area fraction (the label weight of `src`) to
// `out_fraction`.
//
// # Safety
// All handles and `patch` must be valid; `out_clip` and `out_fraction`
// must be writable.
VmStatus vm_apply_videomix(const VmClip *base,
                           const VmClip *src,
                           const VmPatch *patch,
                           VmClip **out_clip,
                           double *out_fraction);

// The per-sample weighted batch loss: for each slot `i`,
// `lambdas[i] * CE(preds[i], labels[i]) + (1 - lambdas[i]) *
// CE(preds[i], labels[pairing[i]])`. `preds` and `labels` are row-major
// `batch x num_classes`; `pairing` is a 0-based permutation.
//
// # Safety
// `preds` and `labels` must hold `batch * num_classes` readable doubles,
// `pairing` and `lambdas` `batch` readable entries; `out` must be writable.
VmStatus vm_mixed_batch_loss(const double *preds,
                             const double *labels,
                             size_t batch,
                             size_t num_classes,
                             const size_t *pairing,
                             const double *lambdas,
                             double *out);

// The shared-lambda variant: `lam * sum_i CE(preds[i], labels[i]) +
// (1 - lam) * sum_i CE(preds[i], labels[pairing[i]])`.
//
// # Safety
// Same layout requirements as `vm_mixed_batch_loss`.
VmStatus vm_fixed_lambda_batch_loss(const double *preds,
                                    const double *labels,
                                    size_t batch,
                                    size_t num_classes,
                                    const size_t *pairing,
                                    double lam,
                                    double *out);

// Decodes column-major run-length counts (first run counts zeros) into a
// row-major 0/1 byte grid. `out_bits` must hold `height * width` bytes.
//
// # Safety
// `runs` must hold `run_count` readable entries; `out_bits` must hold
// `height * width` writable bytes.
VmStatus vm_rle_decode(const int64_t *runs,
                       size_t run_count,
                       size_t height,
                       size_t width,
                       uint8_t *out_bits);

// Encodes a row-major 0/1 byte grid into canonical column-major run-length
// counts. Two-call pattern: the required run count is always written to
// `out_len`; when `capacity` is too small nothing else is written and the
// call returns `VM_STATUS_INVALID_ARGUMENT`, so probe with capacity 0
// first.
//
// # Safety
// `bits` must hold `height * width` readable bytes; `out_runs` must hold
// `capacity` writable entries (or be null with `capacity` 0); `out_len`
// must be writable.
VmStatus vm_rle_encode(const uint8_t *bits,
                       size_t height,
                       size_t width,
                       int64_t *out_runs,
                       size_t capacity,
                       size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VIDMIX_H */
