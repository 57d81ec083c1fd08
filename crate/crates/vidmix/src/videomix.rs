//! Rectangle-patch mixing: a Beta-distributed area ratio, a uniform patch
//! center, and the same clamped rectangle pasted into every frame.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::clip::Clip;
use crate::error::{Error, Result};

/// A sampled mix rectangle in real pixel coordinates.
///
/// `w1 <= w2` and `h1 <= h2` always hold; coordinates are already clamped to
/// the frame the patch was drawn for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    /// The drawn area ratio, in [0,1].
    pub lam: f64,
    pub w1: f64,
    pub w2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Which quantity weighs the pasted source in label mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PatchWeight {
    /// Area fraction of the rasterized rectangle; matches composed pixels.
    #[default]
    RealizedArea,
    /// The lambda drawn from the Beta distribution, ignoring rasterization.
    DrawnLambda,
}

/// Integer pixel bounds of a patch: rows `[row_start, row_end)`, columns
/// `[col_start, col_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterPatch {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl RasterPatch {
    pub fn area(&self) -> usize {
        (self.row_end - self.row_start) * (self.col_end - self.col_start)
    }
}

impl PatchSpec {
    /// Validates ordering, range, and finiteness.
    pub fn new(lam: f64, w1: f64, w2: f64, h1: f64, h2: f64) -> Result<Self> {
        for (name, v) in [("lam", lam), ("w1", w1), ("w2", w2), ("h1", h1), ("h2", h2)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "patch field {name} must be finite, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&lam) {
            return Err(Error::InvalidArgument(format!(
                "patch lambda {lam} outside [0,1]"
            )));
        }
        if w1 < 0.0 || h1 < 0.0 || w1 > w2 || h1 > h2 {
            return Err(Error::InvalidArgument(format!(
                "patch coordinates must satisfy 0 <= start <= end, got w=[{w1},{w2}] h=[{h1},{h2}]"
            )));
        }
        Ok(PatchSpec {
            lam,
            w1,
            w2,
            h1,
            h2,
        })
    }

    /// Builds the clamped rectangle for a draw of `lam` centered at
    /// `(w_c, h_c)` in a `w` x `h` frame. Half-extents are `w*sqrt(lam)/2`
    /// and `h*sqrt(lam)/2`; all four coordinates clamp to the frame.
    pub fn from_draws(lam: f64, w_c: f64, h_c: f64, w: usize, h: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lam) {
            return Err(Error::InvalidArgument(format!(
                "drawn lambda {lam} outside [0,1]"
            )));
        }
        let (wf, hf) = (w as f64, h as f64);
        let half_w = wf * lam.sqrt() / 2.0;
        let half_h = hf * lam.sqrt() / 2.0;
        PatchSpec::new(
            lam,
            (w_c - half_w).clamp(0.0, wf),
            (w_c + half_w).clamp(0.0, wf),
            (h_c - half_h).clamp(0.0, hf),
            (h_c + half_h).clamp(0.0, hf),
        )
    }

    /// Pixel bounds: starts round down, ends round up, zero-length intervals
    /// stay empty. Fails if the patch exceeds a `width` x `height` frame.
    pub fn rasterized(&self, width: usize, height: usize) -> Result<RasterPatch> {
        if self.w2 > width as f64 || self.h2 > height as f64 {
            return Err(Error::InvalidArgument(format!(
                "patch w=[{},{}] h=[{},{}] exceeds a {width}x{height} frame",
                self.w1, self.w2, self.h1, self.h2
            )));
        }
        let span = |start: f64, end: f64| -> (usize, usize) {
            if end > start {
                (start.floor() as usize, end.ceil() as usize)
            } else {
                let s = start.floor() as usize;
                (s, s)
            }
        };
        let (col_start, col_end) = span(self.w1, self.w2);
        let (row_start, row_end) = span(self.h1, self.h2);
        Ok(RasterPatch {
            row_start,
            row_end,
            col_start,
            col_end,
        })
    }

    /// Area fraction of the rasterized rectangle in a `width` x `height` frame.
    pub fn realized_fraction(&self, width: usize, height: usize) -> Result<f64> {
        let raster = self.rasterized(width, height)?;
        Ok(raster.area() as f64 / (width * height) as f64)
    }

    /// The label weight for the pasted source under the chosen convention.
    pub fn mix_weight(&self, width: usize, height: usize, source: PatchWeight) -> Result<f64> {
        match source {
            PatchWeight::RealizedArea => self.realized_fraction(width, height),
            PatchWeight::DrawnLambda => Ok(self.lam),
        }
    }
}

/// Draws a patch: `lam ~ Beta(alpha, alpha)`, center uniform over the frame.
pub fn sample_patch<R: Rng + ?Sized>(
    rng: &mut R,
    alpha: f64,
    w: usize,
    h: usize,
) -> Result<PatchSpec> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument(format!(
            "frame dimensions must be positive, got {w}x{h}"
        )));
    }
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::InvalidArgument(format!("invalid Beta parameter {alpha}: {e}")))?;
    let lam: f64 = beta.sample(rng);
    let w_c = rng.random_range(0.0..w as f64);
    let h_c = rng.random_range(0.0..h as f64);
    PatchSpec::from_draws(lam.clamp(0.0, 1.0), w_c, h_c, w, h)
}

/// Replaces the patch rectangle of `v1` with `v2`'s pixels in every frame.
/// Returns the output clip and the area fraction attributed to `v2`; label
/// mixing puts `1 - fraction` on `v1`'s label.
pub fn apply_videomix(v1: &Clip, v2: &Clip, patch: &PatchSpec) -> Result<(Clip, f64)> {
    let shape = v1.shape();
    if v2.shape() != shape {
        return Err(Error::DimensionMismatch(format!(
            "clips disagree: {}x{}x{}x{} vs {}x{}x{}x{}",
            shape.frames,
            shape.channels,
            shape.height,
            shape.width,
            v2.shape().frames,
            v2.shape().channels,
            v2.shape().height,
            v2.shape().width
        )));
    }
    let raster = patch.rasterized(shape.width, shape.height)?;
    let mut data = v1.data().to_vec();
    let width = shape.width;
    let plane = shape.plane_len();
    for t in 0..shape.frames {
        for c in 0..shape.channels {
            let offset = (t * shape.channels + c) * plane;
            for row in raster.row_start..raster.row_end {
                let start = offset + row * width + raster.col_start;
                let end = offset + row * width + raster.col_end;
                data[start..end].copy_from_slice(&v2.data()[start..end]);
            }
        }
    }
    let fraction = raster.area() as f64 / (width * shape.height) as f64;
    Ok((Clip::from_parts_unchecked(shape, data), fraction))
}
