//! Frame sampling and the spatial transform chain, applied with identical
//! geometry to a clip and its instance masks.

use rand::Rng;

use crate::clip::{BinaryMask, Clip, ClipShape};
use crate::error::{Error, Result};
use crate::masks::{InstanceMask, InstanceMaskSet};
use crate::pipeline::{AugConfig, TransformMode};

/// Picks `t` frame indices: a uniformly random contiguous window when the
/// video is long enough, otherwise indices wrap cyclically from frame 0.
/// Only the long-enough case consumes randomness.
pub fn sample_frames<R: Rng + ?Sized>(
    rng: &mut R,
    total_frames: usize,
    t: usize,
) -> Result<Vec<usize>> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "cannot sample zero frames".to_string(),
        ));
    }
    if total_frames == 0 {
        return Err(Error::InvalidArgument(
            "video has no frames to sample".to_string(),
        ));
    }
    if total_frames >= t {
        let start = rng.random_range(0..=total_frames - t);
        Ok((start..start + t).collect())
    } else {
        Ok((0..t).map(|i| i % total_frames).collect())
    }
}

/// One drawn set of geometric parameters, shared by clip and masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub resized_h: usize,
    pub resized_w: usize,
    pub crop_y: usize,
    pub crop_x: usize,
    pub crop_h: usize,
    pub crop_w: usize,
    pub flip: bool,
}

/// Aspect-preserving dimensions with the short side pinned to `short`.
fn resize_dims(src_h: usize, src_w: usize, short: usize) -> (usize, usize) {
    if src_h <= src_w {
        let w = ((src_w as f64) * (short as f64) / (src_h as f64)).round() as usize;
        (short, w.max(short))
    } else {
        let h = ((src_h as f64) * (short as f64) / (src_w as f64)).round() as usize;
        (h.max(short), short)
    }
}

/// Draws the transform parameters for one clip. Train mode consumes, in
/// order: the short-side length, the crop row, the crop column, and the flip
/// coin (always drawn, whatever `hflip_prob`). Val mode consumes nothing.
pub fn draw_geometry<R: Rng + ?Sized>(
    rng: &mut R,
    src_h: usize,
    src_w: usize,
    cfg: &AugConfig,
    mode: TransformMode,
) -> Result<Geometry> {
    let (short, crop) = match mode {
        TransformMode::Train => {
            let (lo, hi) = cfg.train_resize_range;
            (rng.random_range(lo..=hi), cfg.crop)
        }
        TransformMode::Val => (cfg.val_resize, cfg.val_crop),
    };
    let (resized_h, resized_w) = resize_dims(src_h, src_w, short);
    if resized_h < crop || resized_w < crop {
        return Err(Error::Geometry(format!(
            "resized frame {resized_h}x{resized_w} is smaller than the {crop}x{crop} crop"
        )));
    }
    let (crop_y, crop_x, flip) = match mode {
        TransformMode::Train => {
            let y = rng.random_range(0..=resized_h - crop);
            let x = rng.random_range(0..=resized_w - crop);
            let flip = rng.random_bool(cfg.hflip_prob);
            (y, x, flip)
        }
        TransformMode::Val => ((resized_h - crop) / 2, (resized_w - crop) / 2, false),
    };
    Ok(Geometry {
        resized_h,
        resized_w,
        crop_y,
        crop_x,
        crop_h: crop,
        crop_w: crop,
        flip,
    })
}

/// Per-axis bilinear interpolation table: source pair and fraction for each
/// output position, using half-pixel centers.
fn bilinear_axis(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let center = ((d as f64 + 0.5) * scale - 0.5).max(0.0);
            let lo = (center.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            (lo, hi, (center - center.floor()) as f32)
        })
        .collect()
}

/// Bilinear resize of every frame and channel.
pub fn resize_clip_bilinear(clip: &Clip, out_h: usize, out_w: usize) -> Result<Clip> {
    let shape = clip.shape();
    let out_shape = ClipShape::new(shape.frames, shape.channels, out_h, out_w)?;
    if out_h == shape.height && out_w == shape.width {
        return Ok(clip.clone());
    }
    let rows = bilinear_axis(shape.height, out_h);
    let cols = bilinear_axis(shape.width, out_w);
    let mut data = vec![0.0f32; out_shape.volume()];
    let src_plane = shape.plane_len();
    let dst_plane = out_h * out_w;
    for plane_idx in 0..shape.frames * shape.channels {
        let src = &clip.data()[plane_idx * src_plane..(plane_idx + 1) * src_plane];
        let dst = &mut data[plane_idx * dst_plane..(plane_idx + 1) * dst_plane];
        for (oy, &(y0, y1, fy)) in rows.iter().enumerate() {
            let top = &src[y0 * shape.width..(y0 + 1) * shape.width];
            let bottom = &src[y1 * shape.width..(y1 + 1) * shape.width];
            let out_row = &mut dst[oy * out_w..(oy + 1) * out_w];
            for (ox, &(x0, x1, fx)) in cols.iter().enumerate() {
                let a = top[x0] + (top[x1] - top[x0]) * fx;
                let b = bottom[x0] + (bottom[x1] - bottom[x0]) * fx;
                out_row[ox] = a + (b - a) * fy;
            }
        }
    }
    Ok(Clip::from_parts_unchecked(out_shape, data))
}

/// Nearest-neighbor mask resize (half-pixel centers), keeping bits binary.
pub fn resize_mask_nearest(mask: &BinaryMask, out_h: usize, out_w: usize) -> Result<BinaryMask> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "mask resize target must be positive, got {out_h}x{out_w}"
        )));
    }
    if out_h == mask.height() && out_w == mask.width() {
        return Ok(mask.clone());
    }
    let pick = |src: usize, dst: usize| -> Vec<usize> {
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|d| (((d as f64 + 0.5) * scale).floor() as usize).min(src - 1))
            .collect()
    };
    let rows = pick(mask.height(), out_h);
    let cols = pick(mask.width(), out_w);
    let mut bits = vec![0u8; out_h * out_w];
    for (oy, &sy) in rows.iter().enumerate() {
        for (ox, &sx) in cols.iter().enumerate() {
            bits[oy * out_w + ox] = mask.get(sy, sx);
        }
    }
    Ok(BinaryMask::from_bits_unchecked(out_h, out_w, bits))
}

/// Extracts the window rows `[y0, y0+h)`, columns `[x0, x0+w)` of every frame.
pub fn crop_clip(clip: &Clip, y0: usize, x0: usize, h: usize, w: usize) -> Result<Clip> {
    let shape = clip.shape();
    if y0 + h > shape.height || x0 + w > shape.width {
        return Err(Error::Geometry(format!(
            "crop [{y0}+{h}, {x0}+{w}] exceeds a {}x{} frame",
            shape.height, shape.width
        )));
    }
    let out_shape = ClipShape::new(shape.frames, shape.channels, h, w)?;
    let mut data = Vec::with_capacity(out_shape.volume());
    for plane_idx in 0..shape.frames * shape.channels {
        let src = &clip.data()[plane_idx * shape.plane_len()..];
        for row in y0..y0 + h {
            let start = row * shape.width + x0;
            data.extend_from_slice(&src[start..start + w]);
        }
    }
    Ok(Clip::from_parts_unchecked(out_shape, data))
}

pub fn crop_mask(
    mask: &BinaryMask,
    y0: usize,
    x0: usize,
    h: usize,
    w: usize,
) -> Result<BinaryMask> {
    if y0 + h > mask.height() || x0 + w > mask.width() {
        return Err(Error::Geometry(format!(
            "crop [{y0}+{h}, {x0}+{w}] exceeds a {}x{} mask",
            mask.height(),
            mask.width()
        )));
    }
    let mut bits = Vec::with_capacity(h * w);
    for row in y0..y0 + h {
        let start = row * mask.width() + x0;
        bits.extend_from_slice(&mask.bits()[start..start + w]);
    }
    Ok(BinaryMask::from_bits_unchecked(h, w, bits))
}

/// Mirrors every row: the pixel at column `w` moves to `W-1-w`.
pub fn hflip_clip(clip: &Clip) -> Clip {
    let shape = clip.shape();
    let mut data = clip.data().to_vec();
    for row in data.chunks_exact_mut(shape.width) {
        row.reverse();
    }
    Clip::from_parts_unchecked(shape, data)
}

pub fn hflip_mask(mask: &BinaryMask) -> BinaryMask {
    let mut bits = mask.bits().to_vec();
    for row in bits.chunks_exact_mut(mask.width()) {
        row.reverse();
    }
    BinaryMask::from_bits_unchecked(mask.height(), mask.width(), bits)
}

/// Applies one drawn geometry to a clip: resize, crop, then optional flip.
pub fn apply_geometry_clip(clip: &Clip, g: &Geometry) -> Result<Clip> {
    let resized = resize_clip_bilinear(clip, g.resized_h, g.resized_w)?;
    let cropped = crop_clip(&resized, g.crop_y, g.crop_x, g.crop_h, g.crop_w)?;
    Ok(if g.flip {
        hflip_clip(&cropped)
    } else {
        cropped
    })
}

/// The same geometry applied to a single mask (nearest-neighbor resize).
pub fn apply_geometry_mask(mask: &BinaryMask, g: &Geometry) -> Result<BinaryMask> {
    let resized = resize_mask_nearest(mask, g.resized_h, g.resized_w)?;
    let cropped = crop_mask(&resized, g.crop_y, g.crop_x, g.crop_h, g.crop_w)?;
    Ok(if g.flip {
        hflip_mask(&cropped)
    } else {
        cropped
    })
}

/// Draws one geometry and applies it to the clip and every instance mask.
pub fn spatial_transform<R: Rng + ?Sized>(
    rng: &mut R,
    clip: &Clip,
    masks: &InstanceMaskSet,
    cfg: &AugConfig,
    mode: TransformMode,
) -> Result<(Clip, InstanceMaskSet)> {
    let shape = clip.shape();
    if masks.frame_count() != shape.frames
        || masks.height() != shape.height
        || masks.width() != shape.width
    {
        return Err(Error::DimensionMismatch(format!(
            "mask set ({} frames at {}x{}) is not aligned with the clip ({} frames at {}x{})",
            masks.frame_count(),
            masks.height(),
            masks.width(),
            shape.frames,
            shape.height,
            shape.width
        )));
    }
    let g = draw_geometry(rng, shape.height, shape.width, cfg, mode)?;
    let out_clip = apply_geometry_clip(clip, &g)?;
    let per_frame = masks
        .per_frame()
        .iter()
        .map(|instances| {
            instances
                .iter()
                .map(|inst| {
                    Ok(InstanceMask {
                        mask: apply_geometry_mask(&inst.mask, &g)?,
                        category: inst.category,
                        score: inst.score,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let out_shape = ClipShape::new(shape.frames, 1, g.crop_h, g.crop_w)?;
    Ok((out_clip, InstanceMaskSet::new(out_shape, per_frame)?))
}
