//! Instance-mask ingestion (uncompressed COCO-style RLE) and the spatial /
//! temporal OR aggregation that turns per-instance masks into paste masks.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clip::{BinaryMask, ClipShape};
use crate::error::{Error, Result};

/// How instance masks are aggregated before compositing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Per-frame OR over instances; masks may differ across frames.
    Spatial,
    /// Spatial OR followed by OR across frames; one mask shared by all frames.
    Spatiotemporal,
}

/// One detected instance: a binary mask plus optional detector metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMask {
    pub mask: BinaryMask,
    /// COCO category id in 0..=79 when present.
    pub category: Option<u32>,
    /// Detector confidence in [0,1] when present.
    pub score: Option<f64>,
}

/// Per-frame collections of instance masks for one clip.
///
/// `shape.channels` is carried but ignored; masks are single-channel.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMaskSet {
    shape: ClipShape,
    per_frame: Vec<Vec<InstanceMask>>,
}

impl InstanceMaskSet {
    /// Every mask must measure `shape.height` x `shape.width`, category ids
    /// must be COCO classes (0..=79), and scores must lie in [0,1].
    pub fn new(shape: ClipShape, per_frame: Vec<Vec<InstanceMask>>) -> Result<Self> {
        if per_frame.len() != shape.frames {
            return Err(Error::DimensionMismatch(format!(
                "mask set covers {} frames but shape declares {}",
                per_frame.len(),
                shape.frames
            )));
        }
        for (t, instances) in per_frame.iter().enumerate() {
            for (n, instance) in instances.iter().enumerate() {
                if instance.mask.height() != shape.height || instance.mask.width() != shape.width {
                    return Err(Error::DimensionMismatch(format!(
                        "instance {n} of frame {t} is {}x{}, expected {}x{}",
                        instance.mask.height(),
                        instance.mask.width(),
                        shape.height,
                        shape.width
                    )));
                }
                if let Some(category) = instance.category {
                    if category > 79 {
                        return Err(Error::MalformedMask(format!(
                            "instance {n} of frame {t} has category {category}, expected 0..=79"
                        )));
                    }
                }
                if let Some(score) = instance.score {
                    if !(0.0..=1.0).contains(&score) {
                        return Err(Error::MalformedMask(format!(
                            "instance {n} of frame {t} has score {score}, expected [0,1]"
                        )));
                    }
                }
            }
        }
        Ok(InstanceMaskSet { shape, per_frame })
    }

    /// A set with no detections in any of `frames` frames.
    pub fn empty(frames: usize, height: usize, width: usize) -> Result<Self> {
        let shape = ClipShape::new(frames, 1, height, width)?;
        Ok(InstanceMaskSet {
            shape,
            per_frame: vec![Vec::new(); frames],
        })
    }

    pub fn shape(&self) -> ClipShape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn frame_count(&self) -> usize {
        self.per_frame.len()
    }

    pub fn per_frame(&self) -> &[Vec<InstanceMask>] {
        &self.per_frame
    }

    /// Drops instances scoring strictly below `min_score`. Instances without
    /// a score are always kept.
    pub fn retain_min_score(&mut self, min_score: f64) {
        for instances in &mut self.per_frame {
            instances.retain(|i| i.score.is_none_or(|s| s >= min_score));
        }
    }

    /// A new set holding clones of the frames at `indices`, in order.
    /// Indices may repeat; this mirrors cyclic frame sampling.
    pub fn select_frames(&self, indices: &[usize]) -> Result<Self> {
        let mut per_frame = Vec::with_capacity(indices.len());
        for &i in indices {
            let frame = self.per_frame.get(i).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "frame index {i} out of range for a {}-frame mask set",
                    self.per_frame.len()
                ))
            })?;
            per_frame.push(frame.clone());
        }
        let shape = ClipShape::new(
            indices.len(),
            self.shape.channels,
            self.shape.height,
            self.shape.width,
        )?;
        Ok(InstanceMaskSet { shape, per_frame })
    }

    /// Parses the per-clip mask sidecar JSON document.
    pub fn from_json_str(text: &str) -> std::result::Result<Self, MaskParseError> {
        let doc: MaskFileDoc = serde_json::from_str(text).map_err(MaskParseError::Json)?;
        doc.try_into().map_err(MaskParseError::Data)
    }

    /// Reads and parses a mask sidecar file, attaching the path to errors.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            MaskParseError::Json(source) => Error::Json {
                path: path.to_path_buf(),
                source,
            },
            MaskParseError::Data(err) => err.in_file(path),
        })
    }

    /// Serializes back to the sidecar JSON format (canonical RLE runs).
    pub fn to_json_string(&self) -> String {
        let doc = MaskFileDoc {
            height: self.shape.height,
            width: self.shape.width,
            frames: self
                .per_frame
                .iter()
                .map(|instances| MaskFileFrame {
                    instances: instances
                        .iter()
                        .map(|i| MaskFileInstance {
                            category: i.category,
                            score: i.score,
                            rle: encode_rle(&i.mask),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("mask document serializes")
    }
}

/// Distinguishes syntactic from semantic failures when parsing mask JSON.
#[derive(Debug, thiserror::Error)]
pub enum MaskParseError {
    #[error("invalid JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error(transparent)]
    Data(Error),
}

#[derive(Serialize, Deserialize)]
struct MaskFileDoc {
    height: usize,
    width: usize,
    frames: Vec<MaskFileFrame>,
}

#[derive(Serialize, Deserialize)]
struct MaskFileFrame {
    #[serde(default)]
    instances: Vec<MaskFileInstance>,
}

#[derive(Serialize, Deserialize)]
struct MaskFileInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    rle: Vec<i64>,
}

impl TryFrom<MaskFileDoc> for InstanceMaskSet {
    type Error = Error;

    fn try_from(doc: MaskFileDoc) -> Result<Self> {
        if doc.frames.is_empty() {
            return Err(Error::MalformedMask(
                "mask document lists no frames".to_string(),
            ));
        }
        let shape = ClipShape::new(doc.frames.len(), 1, doc.height, doc.width)?;
        let mut per_frame = Vec::with_capacity(doc.frames.len());
        for frame in doc.frames {
            let mut instances = Vec::with_capacity(frame.instances.len());
            for inst in frame.instances {
                instances.push(InstanceMask {
                    mask: decode_rle(&inst.rle, doc.height, doc.width)?,
                    category: inst.category,
                    score: inst.score,
                });
            }
            per_frame.push(instances);
        }
        InstanceMaskSet::new(shape, per_frame)
    }
}

/// A per-frame paste mask produced by OR-aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedMask {
    mode: MaskMode,
    per_frame: Vec<BinaryMask>,
}

impl AggregatedMask {
    /// Frames must be nonempty and uniform in size; spatiotemporal mode
    /// additionally requires all frames bit-identical.
    pub fn new(mode: MaskMode, per_frame: Vec<BinaryMask>) -> Result<Self> {
        let first = per_frame.first().ok_or_else(|| {
            Error::InvalidArgument("aggregated mask needs at least one frame".to_string())
        })?;
        let (h, w) = (first.height(), first.width());
        for (t, m) in per_frame.iter().enumerate() {
            if m.height() != h || m.width() != w {
                return Err(Error::DimensionMismatch(format!(
                    "aggregated mask frame {t} is {}x{}, expected {h}x{w}",
                    m.height(),
                    m.width()
                )));
            }
            if mode == MaskMode::Spatiotemporal && m != first {
                return Err(Error::InvalidArgument(format!(
                    "spatiotemporal aggregated mask differs at frame {t}"
                )));
            }
        }
        Ok(AggregatedMask { mode, per_frame })
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    pub fn frame_count(&self) -> usize {
        self.per_frame.len()
    }

    pub fn per_frame(&self) -> &[BinaryMask] {
        &self.per_frame
    }

    pub fn frame(&self, t: usize) -> &BinaryMask {
        &self.per_frame[t]
    }

    pub fn height(&self) -> usize {
        self.per_frame[0].height()
    }

    pub fn width(&self) -> usize {
        self.per_frame[0].width()
    }
}

/// Per-pixel logical OR over all instance masks of one frame; the empty list
/// yields the all-zero mask.
pub fn aggregate_instances<'a, I>(frame_masks: I, h: usize, w: usize) -> Result<BinaryMask>
where
    I: IntoIterator<Item = &'a BinaryMask>,
{
    let mut out = BinaryMask::zeros(h, w)?;
    for mask in frame_masks {
        out.or_assign(mask)?;
    }
    Ok(out)
}

/// OR over instances within each frame; frames stay independent.
pub fn aggregate_spatial(ims: &InstanceMaskSet) -> Result<AggregatedMask> {
    let (h, w) = (ims.height(), ims.width());
    let per_frame = ims
        .per_frame()
        .iter()
        .map(|instances| aggregate_instances(instances.iter().map(|i| &i.mask), h, w))
        .collect::<Result<Vec<_>>>()?;
    AggregatedMask::new(MaskMode::Spatial, per_frame)
}

/// OR across frames of a spatially aggregated mask; every output frame holds
/// the same union mask. Accepts spatiotemporal input unchanged (idempotent).
pub fn aggregate_temporal(spatial: &AggregatedMask) -> Result<AggregatedMask> {
    let union = aggregate_instances(
        spatial.per_frame().iter(),
        spatial.height(),
        spatial.width(),
    )?;
    AggregatedMask::new(MaskMode::Spatiotemporal, vec![union; spatial.frame_count()])
}

/// Aggregates an instance set under the chosen mode.
pub fn aggregate(ims: &InstanceMaskSet, mode: MaskMode) -> Result<AggregatedMask> {
    let spatial = aggregate_spatial(ims)?;
    match mode {
        MaskMode::Spatial => Ok(spatial),
        MaskMode::Spatiotemporal => aggregate_temporal(&spatial),
    }
}

/// Decodes uncompressed COCO-style RLE: alternating run lengths starting with
/// the 0-run, column-major order, summing to `h * w`.
pub fn decode_rle(counts: &[i64], h: usize, w: usize) -> Result<BinaryMask> {
    if h == 0 || w == 0 {
        return Err(Error::InvalidArgument(format!(
            "mask dimensions must be positive, got {h}x{w}"
        )));
    }
    let total = h * w;
    let mut bits = vec![0u8; total];
    let mut k: usize = 0;
    let mut value = 0u8;
    for &run in counts {
        let run = usize::try_from(run).map_err(|_| {
            Error::MalformedMask(format!("RLE run lengths must be non-negative, found {run}"))
        })?;
        let end = k.checked_add(run).filter(|&e| e <= total).ok_or_else(|| {
            Error::MalformedMask(format!(
                "RLE runs sum past {total} pixels for a {h}x{w} mask"
            ))
        })?;
        if value == 1 {
            for idx in k..end {
                // Column-major pixel index: row = idx % h, col = idx / h.
                bits[(idx % h) * w + idx / h] = 1;
            }
        }
        k = end;
        value ^= 1;
    }
    if k != total {
        return Err(Error::MalformedMask(format!(
            "RLE runs cover {k} pixels, expected {total} for a {h}x{w} mask"
        )));
    }
    Ok(BinaryMask::from_bits_unchecked(h, w, bits))
}

/// Re-encodes a mask into canonical RLE: the first run counts leading zeros
/// (possibly 0), every later run is positive, runs sum to `h * w`.
pub fn encode_rle(mask: &BinaryMask) -> Vec<i64> {
    let (h, w) = (mask.height(), mask.width());
    let mut counts = Vec::new();
    let mut value = 0u8;
    let mut run: i64 = 0;
    for idx in 0..h * w {
        let bit = mask.bits()[(idx % h) * w + idx / h];
        if bit == value {
            run += 1;
        } else {
            counts.push(run);
            value = bit;
            run = 1;
        }
    }
    counts.push(run);
    counts
}
