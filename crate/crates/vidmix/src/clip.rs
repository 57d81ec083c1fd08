//! Dense clip and mask containers plus the per-frame blend primitive.

use crate::error::{Error, Result};

/// Labels must sum to 1 within this tolerance.
pub const LABEL_SUM_TOLERANCE: f64 = 1e-9;

/// Dimensions of a clip: `frames` x `channels` x `height` x `width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClipShape {
    pub frames: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl ClipShape {
    /// All dimensions must be at least 1 and the element count must fit in `usize`.
    pub fn new(frames: usize, channels: usize, height: usize, width: usize) -> Result<Self> {
        if frames == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "clip shape must be positive in every dimension, got {frames}x{channels}x{height}x{width}"
            )));
        }
        frames
            .checked_mul(channels)
            .and_then(|n| n.checked_mul(height))
            .and_then(|n| n.checked_mul(width))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "clip shape {frames}x{channels}x{height}x{width} overflows the addressable range"
                ))
            })?;
        Ok(ClipShape {
            frames,
            channels,
            height,
            width,
        })
    }

    /// Elements in one frame: `channels * height * width`.
    pub fn frame_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    /// Elements in one channel plane: `height * width`.
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    /// Total element count.
    pub fn volume(&self) -> usize {
        self.frames * self.frame_len()
    }

    /// Pixel count over all frames: `frames * height * width`.
    pub fn pixel_count(&self) -> usize {
        self.frames * self.plane_len()
    }
}

/// A dense video clip stored frame-major as `(t, c, h, w)`, one `f32` per element.
///
/// Values are finite; pixel data loaded from 8-bit sources lives in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    shape: ClipShape,
    data: Vec<f32>,
}

impl Clip {
    /// `data.len()` must equal `shape.volume()` and every element must be finite.
    pub fn new(shape: ClipShape, data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.volume() {
            return Err(Error::DimensionMismatch(format!(
                "clip buffer holds {} elements but shape {}x{}x{}x{} needs {}",
                data.len(),
                shape.frames,
                shape.channels,
                shape.height,
                shape.width,
                shape.volume()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "clip data must be finite, found {bad}"
            )));
        }
        Ok(Clip { shape, data })
    }

    /// Skips validation; callers guarantee length and finiteness.
    pub(crate) fn from_parts_unchecked(shape: ClipShape, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), shape.volume());
        Clip { shape, data }
    }

    /// A clip with every element set to `value`.
    pub fn filled(shape: ClipShape, value: f32) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fill value must be finite, got {value}"
            )));
        }
        Ok(Clip {
            data: vec![value; shape.volume()],
            shape,
        })
    }

    pub fn shape(&self) -> ClipShape {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// The `(t, c, h, w)` element.
    pub fn get(&self, t: usize, c: usize, h: usize, w: usize) -> f32 {
        let s = &self.shape;
        self.data[((t * s.channels + c) * s.height + h) * s.width + w]
    }

    /// Borrowed slice of frame `t`, laid out `(c, h, w)`.
    pub fn frame(&self, t: usize) -> &[f32] {
        let len = self.shape.frame_len();
        &self.data[t * len..(t + 1) * len]
    }

    /// Consumes the clip, handing back its buffer.
    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

/// A single-channel binary mask, row-major, one byte per pixel holding 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<u8>,
}

impl BinaryMask {
    /// `bits.len()` must equal `height * width` and every byte must be 0 or 1.
    pub fn new(height: usize, width: usize, bits: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "mask dimensions must be positive, got {height}x{width}"
            )));
        }
        let len = height.checked_mul(width).ok_or_else(|| {
            Error::InvalidArgument(format!("mask shape {height}x{width} overflows"))
        })?;
        if bits.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "mask buffer holds {} bytes but shape {height}x{width} needs {len}",
                bits.len()
            )));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::MalformedMask(format!(
                "mask bytes must be 0 or 1, found {bad}"
            )));
        }
        Ok(BinaryMask {
            height,
            width,
            bits,
        })
    }

    pub(crate) fn from_bits_unchecked(height: usize, width: usize, bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), height * width);
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BinaryMask {
            height,
            width,
            bits,
        }
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0; height.saturating_mul(width)])
    }

    pub fn ones(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![1; height.saturating_mul(width)])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// The bit at row `h`, column `w`.
    pub fn get(&self, h: usize, w: usize) -> u8 {
        self.bits[h * self.width + w]
    }

    /// A mask with every bit inverted.
    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().map(|b| 1 - b).collect(),
        }
    }

    /// Bitwise OR with another mask of the same shape, in place.
    pub fn or_assign(&mut self, other: &BinaryMask) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::DimensionMismatch(format!(
                "cannot OR a {}x{} mask with a {}x{} mask",
                self.height, self.width, other.height, other.width
            )));
        }
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }
}

/// Count of set pixels.
pub fn mask_area(mask: &BinaryMask) -> usize {
    mask.bits.iter().map(|&b| b as usize).sum()
}

/// Per-pixel selection: the foreground value where the mask is 1, the
/// background value elsewhere. Inputs are `(c, h, w)` frame slices; no
/// interpolation is applied.
pub fn blend_frame(
    foreground: &[f32],
    background: &[f32],
    channels: usize,
    mask: &BinaryMask,
) -> Result<Vec<f32>> {
    let frame_len = channels * mask.height * mask.width;
    if foreground.len() != frame_len || background.len() != frame_len {
        return Err(Error::DimensionMismatch(format!(
            "blend expects {channels}x{}x{} frames of {frame_len} elements, got {} and {}",
            mask.height,
            mask.width,
            foreground.len(),
            background.len()
        )));
    }
    let mut out = vec![0.0f32; frame_len];
    blend_frame_into(foreground, background, channels, mask, &mut out);
    Ok(out)
}

/// `blend_frame` writing into a caller-owned buffer; lengths already checked.
pub(crate) fn blend_frame_into(
    foreground: &[f32],
    background: &[f32],
    channels: usize,
    mask: &BinaryMask,
    out: &mut [f32],
) {
    let plane = mask.height * mask.width;
    for c in 0..channels {
        let offset = c * plane;
        let fg = &foreground[offset..offset + plane];
        let bg = &background[offset..offset + plane];
        let dst = &mut out[offset..offset + plane];
        for i in 0..plane {
            dst[i] = if mask.bits[i] == 1 { fg[i] } else { bg[i] };
        }
    }
}

/// A probability distribution over action classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    weights: Vec<f64>,
}

impl Label {
    /// Weights must be non-negative, finite, and sum to 1 within
    /// [`LABEL_SUM_TOLERANCE`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "label needs at least one class".to_string(),
            ));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "label weights must be finite and non-negative, found {bad}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > LABEL_SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "label weights sum to {sum}, expected 1 within {LABEL_SUM_TOLERANCE}"
            )));
        }
        Ok(Label { weights })
    }

    /// All mass on `class`.
    pub fn one_hot(num_classes: usize, class: usize) -> Result<Self> {
        if class >= num_classes {
            return Err(Error::InvalidArgument(format!(
                "class {class} out of range for {num_classes} classes"
            )));
        }
        let mut weights = vec![0.0; num_classes];
        weights[class] = 1.0;
        Ok(Label { weights })
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
