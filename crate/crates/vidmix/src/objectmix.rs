//! Object copy-paste mixing: compose two clips under aggregated instance
//! masks and blend their labels by mask area fraction.

use clap::ValueEnum;

use crate::clip::{blend_frame_into, mask_area, Clip, ClipShape, Label};
use crate::error::{Error, Result};
use crate::masks::{aggregate, aggregate_spatial, AggregatedMask, InstanceMaskSet, MaskMode};

/// Which source supplies the pasted foreground region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixDirection {
    /// Source 1's masked region pasted onto source 2.
    OneOntoTwo,
    /// Source 2's masked region pasted onto source 1.
    TwoOntoOne,
}

impl MixDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            MixDirection::OneOntoTwo => "12",
            MixDirection::TwoOntoOne => "21",
        }
    }
}

/// Which aggregated mask the label weight is computed from.
///
/// The default weighs labels by the mask actually pasted (the temporal union
/// in spatiotemporal mode). `SpatialUnion` instead always uses the per-frame
/// spatial union's area, a compatibility reading of the label equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum LambdaSource {
    #[default]
    #[value(name = "pasted")]
    PastedMask,
    /// The per-frame spatial union (the lambda_spatial statistic).
    #[value(name = "m-prime")]
    SpatialUnion,
}

/// One input clip with its identity and label.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub clip: Clip,
    pub label: Label,
}

/// Where a mixed sample came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Ids of the two sources, in argument order.
    pub sources: [String; 2],
    /// The mask aggregation used, when the strategy pastes mask regions.
    pub mode: Option<MaskMode>,
    pub direction: MixDirection,
}

/// A composed clip with its soft label and mixing weight.
#[derive(Debug, Clone)]
pub struct MixedSample {
    pub clip: Clip,
    pub label: Label,
    /// Label weight attributed to the foreground-mask source.
    pub lam: f64,
    pub provenance: Provenance,
}

/// Fraction of set mask pixels over the whole clip volume:
/// `sum_t area(mask[t]) / (T * H * W)`.
pub fn coverage_lambda(mask: &AggregatedMask, shape: &ClipShape) -> Result<f64> {
    if mask.frame_count() != shape.frames
        || mask.height() != shape.height
        || mask.width() != shape.width
    {
        return Err(Error::DimensionMismatch(format!(
            "mask of {} frames at {}x{} does not cover a {}x{}x{} clip volume",
            mask.frame_count(),
            mask.height(),
            mask.width(),
            shape.frames,
            shape.height,
            shape.width
        )));
    }
    let ones: usize = mask.per_frame().iter().map(mask_area).sum();
    Ok(ones as f64 / shape.pixel_count() as f64)
}

fn check_compose_shapes(
    v1: &Clip,
    v2: &Clip,
    m1: &AggregatedMask,
    m2: &AggregatedMask,
) -> Result<ClipShape> {
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
    for (name, mask) in [("m1", m1), ("m2", m2)] {
        if mask.frame_count() != shape.frames
            || mask.height() != shape.height
            || mask.width() != shape.width
        {
            return Err(Error::DimensionMismatch(format!(
                "{name} has {} frames at {}x{}, clip needs {} at {}x{}",
                mask.frame_count(),
                mask.height(),
                mask.width(),
                shape.frames,
                shape.height,
                shape.width
            )));
        }
    }
    Ok(shape)
}

/// Composes both directed outputs: the first takes `v1` where `m1` is set and
/// `v2` elsewhere; the second takes `v2` where `m2` is set and `v1` elsewhere.
/// Inputs are unmodified.
pub fn compose_pair(
    v1: &Clip,
    v2: &Clip,
    m1: &AggregatedMask,
    m2: &AggregatedMask,
) -> Result<(Clip, Clip)> {
    let shape = check_compose_shapes(v1, v2, m1, m2)?;
    let mut out12 = vec![0.0f32; shape.volume()];
    let mut out21 = vec![0.0f32; shape.volume()];
    let frame_len = shape.frame_len();
    for t in 0..shape.frames {
        let range = t * frame_len..(t + 1) * frame_len;
        blend_frame_into(
            v1.frame(t),
            v2.frame(t),
            shape.channels,
            m1.frame(t),
            &mut out12[range.clone()],
        );
        blend_frame_into(
            v2.frame(t),
            v1.frame(t),
            shape.channels,
            m2.frame(t),
            &mut out21[range],
        );
    }
    Ok((
        Clip::from_parts_unchecked(shape, out12),
        Clip::from_parts_unchecked(shape, out21),
    ))
}

/// One directed composition: `fg` where `mask` is set, `bg` elsewhere.
pub fn compose_onto(fg: &Clip, bg: &Clip, mask: &AggregatedMask) -> Result<Clip> {
    let shape = check_compose_shapes(fg, bg, mask, mask)?;
    let mut out = vec![0.0f32; shape.volume()];
    let frame_len = shape.frame_len();
    for t in 0..shape.frames {
        blend_frame_into(
            fg.frame(t),
            bg.frame(t),
            shape.channels,
            mask.frame(t),
            &mut out[t * frame_len..(t + 1) * frame_len],
        );
    }
    Ok(Clip::from_parts_unchecked(shape, out))
}

/// Blends labels both ways: the first output weighs `y1` by `lam1`, the
/// second weighs `y2` by `lam2`.
pub fn mix_labels(y1: &Label, y2: &Label, lam1: f64, lam2: f64) -> Result<(Label, Label)> {
    if y1.num_classes() != y2.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "labels disagree on class count: {} vs {}",
            y1.num_classes(),
            y2.num_classes()
        )));
    }
    for lam in [lam1, lam2] {
        if !(0.0..=1.0).contains(&lam) {
            return Err(Error::InvalidArgument(format!(
                "mixing weight {lam} outside [0,1]"
            )));
        }
    }
    let blend = |wa: f64, a: &Label, b: &Label| -> Result<Label> {
        Label::new(
            a.weights()
                .iter()
                .zip(b.weights())
                .map(|(x, y)| wa * x + (1.0 - wa) * y)
                .collect(),
        )
    };
    Ok((blend(lam1, y1, y2)?, blend(lam2, y2, y1)?))
}

/// Full object mix with the default label-weight source.
pub fn object_mix(
    s1: &Sample,
    s2: &Sample,
    mode: MaskMode,
    m1set: &InstanceMaskSet,
    m2set: &InstanceMaskSet,
) -> Result<(MixedSample, MixedSample)> {
    object_mix_with(s1, s2, mode, m1set, m2set, LambdaSource::default())
}

/// Aggregates each mask set under `mode`, composes both directed clips, and
/// mixes labels by mask coverage; `lambda_source` picks which aggregate's
/// area feeds the label weights.
pub fn object_mix_with(
    s1: &Sample,
    s2: &Sample,
    mode: MaskMode,
    m1set: &InstanceMaskSet,
    m2set: &InstanceMaskSet,
    lambda_source: LambdaSource,
) -> Result<(MixedSample, MixedSample)> {
    let shape = s1.clip.shape();
    let m1 = aggregate(m1set, mode)?;
    let m2 = aggregate(m2set, mode)?;
    let (v12, v21) = compose_pair(&s1.clip, &s2.clip, &m1, &m2)?;
    let (lam1, lam2) = match lambda_source {
        LambdaSource::PastedMask => (coverage_lambda(&m1, &shape)?, coverage_lambda(&m2, &shape)?),
        LambdaSource::SpatialUnion => (
            coverage_lambda(&aggregate_spatial(m1set)?, &shape)?,
            coverage_lambda(&aggregate_spatial(m2set)?, &shape)?,
        ),
    };
    let (y12, y21) = mix_labels(&s1.label, &s2.label, lam1, lam2)?;
    let sources = [s1.id.clone(), s2.id.clone()];
    Ok((
        MixedSample {
            clip: v12,
            label: y12,
            lam: lam1,
            provenance: Provenance {
                sources: sources.clone(),
                mode: Some(mode),
                direction: MixDirection::OneOntoTwo,
            },
        },
        MixedSample {
            clip: v21,
            label: y21,
            lam: lam2,
            provenance: Provenance {
                sources,
                mode: Some(mode),
                direction: MixDirection::TwoOntoOne,
            },
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::BinaryMask;
    use crate::masks::InstanceMask;
    use proptest::prelude::*;

    fn agg(mode: MaskMode, frames: Vec<BinaryMask>) -> AggregatedMask {
        AggregatedMask::new(mode, frames).unwrap()
    }

    fn mask(h: usize, w: usize, bits: &[u8]) -> BinaryMask {
        BinaryMask::new(h, w, bits.to_vec()).unwrap()
    }

    fn numbered_clip(shape: ClipShape, offset: f32) -> Clip {
        let data = (0..shape.volume())
            .map(|i| (i as f32 + offset) / 1000.0)
            .collect();
        Clip::new(shape, data).unwrap()
    }

    #[test]
    fn coverage_handles_degenerate_masks() {
        let shape = ClipShape::new(2, 3, 2, 2).unwrap();
        let ones = agg(MaskMode::Spatial, vec![BinaryMask::ones(2, 2).unwrap(); 2]);
        let zeros = agg(MaskMode::Spatial, vec![BinaryMask::zeros(2, 2).unwrap(); 2]);
        assert_eq!(coverage_lambda(&ones, &shape).unwrap(), 1.0);
        assert_eq!(coverage_lambda(&zeros, &shape).unwrap(), 0.0);
    }

    #[test]
    fn coverage_counts_bits_over_volume() {
        // T=2, H=2, W=2 with three set bits total: 3/8.
        let shape = ClipShape::new(2, 3, 2, 2).unwrap();
        let m = agg(
            MaskMode::Spatial,
            vec![mask(2, 2, &[1, 0, 0, 1]), mask(2, 2, &[0, 0, 1, 0])],
        );
        assert_eq!(coverage_lambda(&m, &shape).unwrap(), 0.375);
    }

    #[test]
    fn coverage_rejects_shape_mismatch() {
        let shape = ClipShape::new(3, 3, 2, 2).unwrap();
        let m = agg(MaskMode::Spatial, vec![mask(2, 2, &[1, 0, 0, 1]); 2]);
        assert!(coverage_lambda(&m, &shape).is_err());
    }

    #[test]
    fn compose_identity_masks() {
        let shape = ClipShape::new(2, 2, 3, 3).unwrap();
        let v1 = numbered_clip(shape, 0.0);
        let v2 = numbered_clip(shape, 500.0);
        let ones = agg(MaskMode::Spatial, vec![BinaryMask::ones(3, 3).unwrap(); 2]);
        let zeros = agg(MaskMode::Spatial, vec![BinaryMask::zeros(3, 3).unwrap(); 2]);
        let (v12, v21) = compose_pair(&v1, &v2, &ones, &zeros).unwrap();
        // m1 all ones keeps v1; m2 all zeros also keeps v1 in the reverse direction.
        assert_eq!(v12.data(), v1.data());
        assert_eq!(v21.data(), v1.data());
        let (w12, w21) = compose_pair(&v1, &v2, &zeros, &ones).unwrap();
        assert_eq!(w12.data(), v2.data());
        assert_eq!(w21.data(), v2.data());
    }

    #[test]
    fn compose_matches_per_pixel_oracle() {
        let shape = ClipShape::new(2, 2, 2, 2).unwrap();
        let v1 = numbered_clip(shape, 0.0);
        let v2 = numbered_clip(shape, 111.0);
        let m1 = agg(
            MaskMode::Spatial,
            vec![mask(2, 2, &[1, 0, 0, 1]), mask(2, 2, &[0, 1, 1, 0])],
        );
        let m2 = agg(
            MaskMode::Spatial,
            vec![mask(2, 2, &[1, 1, 0, 0]), mask(2, 2, &[0, 0, 0, 1])],
        );
        let (v12, v21) = compose_pair(&v1, &v2, &m1, &m2).unwrap();
        for t in 0..2 {
            for c in 0..2 {
                for h in 0..2 {
                    for w in 0..2 {
                        let want12 = if m1.frame(t).get(h, w) == 1 {
                            v1.get(t, c, h, w)
                        } else {
                            v2.get(t, c, h, w)
                        };
                        let want21 = if m2.frame(t).get(h, w) == 1 {
                            v2.get(t, c, h, w)
                        } else {
                            v1.get(t, c, h, w)
                        };
                        assert_eq!(v12.get(t, c, h, w), want12);
                        assert_eq!(v21.get(t, c, h, w), want21);
                    }
                }
            }
        }
    }

    #[test]
    fn compose_rejects_mismatched_inputs() {
        let a = Clip::filled(ClipShape::new(2, 1, 2, 2).unwrap(), 0.0).unwrap();
        let b = Clip::filled(ClipShape::new(2, 1, 2, 3).unwrap(), 0.0).unwrap();
        let m = agg(MaskMode::Spatial, vec![mask(2, 2, &[1, 0, 0, 1]); 2]);
        assert!(compose_pair(&a, &b, &m, &m).is_err());
        assert!(compose_onto(&a, &b, &m).is_err());
        let short = agg(MaskMode::Spatial, vec![mask(2, 2, &[1, 0, 0, 1])]);
        assert!(compose_pair(&a, &a, &short, &m).is_err());
    }

    #[test]
    fn compose_onto_matches_pair_outputs() {
        let shape = ClipShape::new(2, 2, 2, 2).unwrap();
        let v1 = numbered_clip(shape, 0.0);
        let v2 = numbered_clip(shape, 111.0);
        let m1 = agg(
            MaskMode::Spatial,
            vec![mask(2, 2, &[1, 0, 0, 1]), mask(2, 2, &[0, 1, 1, 0])],
        );
        let m2 = agg(
            MaskMode::Spatial,
            vec![mask(2, 2, &[1, 1, 0, 0]), mask(2, 2, &[0, 0, 0, 1])],
        );
        let (v12, v21) = compose_pair(&v1, &v2, &m1, &m2).unwrap();
        assert_eq!(compose_onto(&v1, &v2, &m1).unwrap().data(), v12.data());
        assert_eq!(compose_onto(&v2, &v1, &m2).unwrap().data(), v21.data());
    }

    #[test]
    fn mix_labels_degenerate_weights() {
        let y1 = Label::one_hot(4, 0).unwrap();
        let y2 = Label::one_hot(4, 3).unwrap();
        let (a, _) = mix_labels(&y1, &y2, 1.0, 0.5).unwrap();
        assert_eq!(a.weights(), y1.weights());
        let (b, _) = mix_labels(&y1, &y2, 0.0, 0.5).unwrap();
        assert_eq!(b.weights(), y2.weights());
    }

    #[test]
    fn mix_labels_weights_by_lambda() {
        // One-hot classes 3 and 7 at lam1 = 0.375.
        let y1 = Label::one_hot(8, 3).unwrap();
        let y2 = Label::one_hot(8, 7).unwrap();
        let (y12, y21) = mix_labels(&y1, &y2, 0.375, 0.25).unwrap();
        assert_eq!(y12.weights()[3], 0.375);
        assert_eq!(y12.weights()[7], 0.625);
        // Second direction weighs y2 by lam2.
        assert_eq!(y21.weights()[7], 0.25);
        assert_eq!(y21.weights()[3], 0.75);
    }

    #[test]
    fn mix_labels_rejects_bad_inputs() {
        let y1 = Label::one_hot(4, 0).unwrap();
        let y3 = Label::one_hot(3, 0).unwrap();
        assert!(mix_labels(&y1, &y3, 0.5, 0.5).is_err());
        assert!(mix_labels(&y1, &y1, -0.1, 0.5).is_err());
        assert!(mix_labels(&y1, &y1, 0.5, 1.1).is_err());
    }

    fn sample(id: &str, shape: ClipShape, offset: f32, class: usize) -> Sample {
        Sample {
            id: id.to_string(),
            clip: numbered_clip(shape, offset),
            label: Label::one_hot(5, class).unwrap(),
        }
    }

    #[test]
    fn object_mix_with_empty_masks_swaps_sources() {
        let shape = ClipShape::new(2, 1, 2, 2).unwrap();
        let s1 = sample("a", shape, 0.0, 1);
        let s2 = sample("b", shape, 99.0, 4);
        let empty = InstanceMaskSet::empty(2, 2, 2).unwrap();
        let (first, second) = object_mix(&s1, &s2, MaskMode::Spatial, &empty, &empty).unwrap();
        // Nothing pasted: direction 12 shows v2 wearing y2, direction 21 shows v1.
        assert_eq!(first.clip.data(), s2.clip.data());
        assert_eq!(first.label.weights(), s2.label.weights());
        assert_eq!(first.lam, 0.0);
        assert_eq!(second.clip.data(), s1.clip.data());
        assert_eq!(second.label.weights(), s1.label.weights());
        assert_eq!(second.lam, 0.0);
        assert_eq!(first.provenance.direction, MixDirection::OneOntoTwo);
        assert_eq!(first.provenance.sources, ["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn object_mix_with_full_mask_keeps_first_source() {
        let shape = ClipShape::new(2, 1, 2, 2).unwrap();
        let s1 = sample("a", shape, 0.0, 1);
        let s2 = sample("b", shape, 99.0, 4);
        let full = InstanceMaskSet::new(
            ClipShape::new(2, 1, 2, 2).unwrap(),
            vec![
                vec![InstanceMask {
                    mask: BinaryMask::ones(2, 2).unwrap(),
                    category: Some(0),
                    score: Some(1.0),
                }];
                2
            ],
        )
        .unwrap();
        let empty = InstanceMaskSet::empty(2, 2, 2).unwrap();
        let (first, _) = object_mix(&s1, &s2, MaskMode::Spatial, &full, &empty).unwrap();
        assert_eq!(first.clip.data(), s1.clip.data());
        assert_eq!(first.label.weights(), s1.label.weights());
        assert_eq!(first.lam, 1.0);
    }

    #[test]
    fn object_mix_matches_chained_oracle_on_small_fixture() {
        // T=2 frames of 4x4, one instance in each frame of set 1, two in set 2.
        let shape = ClipShape::new(2, 1, 4, 4).unwrap();
        let s1 = sample("a", shape, 0.0, 2);
        let s2 = sample("b", shape, 77.0, 3);
        let inst = |bits: &[u8]| InstanceMask {
            mask: mask(4, 4, bits),
            category: Some(1),
            score: Some(0.8),
        };
        let m1 = InstanceMaskSet::new(
            ClipShape::new(2, 1, 4, 4).unwrap(),
            vec![
                vec![inst(&[1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0])],
                vec![inst(&[0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0])],
            ],
        )
        .unwrap();
        let m2 = InstanceMaskSet::new(
            ClipShape::new(2, 1, 4, 4).unwrap(),
            vec![
                vec![
                    inst(&[0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0]),
                    inst(&[0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]),
                ],
                vec![],
            ],
        )
        .unwrap();
        let (first, second) = object_mix(&s1, &s2, MaskMode::Spatial, &m1, &m2).unwrap();

        // Chain the three constituent operations by hand.
        let m1_agg = crate::masks::aggregate_spatial(&m1).unwrap();
        let m2_agg = crate::masks::aggregate_spatial(&m2).unwrap();
        let lam1 = coverage_lambda(&m1_agg, &shape).unwrap();
        let lam2 = coverage_lambda(&m2_agg, &shape).unwrap();
        assert_eq!(lam1, 8.0 / 32.0);
        assert_eq!(lam2, 4.0 / 32.0);
        let (v12, v21) = compose_pair(&s1.clip, &s2.clip, &m1_agg, &m2_agg).unwrap();
        let (y12, y21) = mix_labels(&s1.label, &s2.label, lam1, lam2).unwrap();
        assert_eq!(first.clip.data(), v12.data());
        assert_eq!(second.clip.data(), v21.data());
        assert_eq!(first.label.weights(), y12.weights());
        assert_eq!(second.label.weights(), y21.weights());
        assert_eq!(first.lam, lam1);
        assert_eq!(second.lam, lam2);
    }

    #[test]
    fn spatial_union_lambda_source_uses_per_frame_area() {
        // One instance in frame 0 only: the temporal union doubles coverage,
        // the spatial union keeps it.
        let shape = ClipShape::new(2, 1, 2, 2).unwrap();
        let s1 = sample("a", shape, 0.0, 1);
        let s2 = sample("b", shape, 50.0, 2);
        let m1 = InstanceMaskSet::new(
            ClipShape::new(2, 1, 2, 2).unwrap(),
            vec![
                vec![InstanceMask {
                    mask: mask(2, 2, &[1, 1, 0, 0]),
                    category: None,
                    score: None,
                }],
                vec![],
            ],
        )
        .unwrap();
        let empty = InstanceMaskSet::empty(2, 2, 2).unwrap();
        let (pasted, _) = object_mix_with(
            &s1,
            &s2,
            MaskMode::Spatiotemporal,
            &m1,
            &empty,
            LambdaSource::PastedMask,
        )
        .unwrap();
        let (spatial, _) = object_mix_with(
            &s1,
            &s2,
            MaskMode::Spatiotemporal,
            &m1,
            &empty,
            LambdaSource::SpatialUnion,
        )
        .unwrap();
        assert_eq!(pasted.lam, 0.5);
        assert_eq!(spatial.lam, 0.25);
        // Clips are identical either way; only the label weight moves.
        assert_eq!(pasted.clip.data(), spatial.clip.data());
    }

    proptest! {
        /// Every composed pixel comes from the source m1 dictates.
        #[test]
        fn pixel_conservation(
            bits0 in proptest::collection::vec(0u8..2, 4),
            bits1 in proptest::collection::vec(0u8..2, 4),
        ) {
            let shape = ClipShape::new(2, 2, 2, 2).unwrap();
            let v1 = numbered_clip(shape, 0.0);
            let v2 = numbered_clip(shape, 1000.0);
            let m1 = agg(MaskMode::Spatial, vec![mask(2, 2, &bits0), mask(2, 2, &bits1)]);
            let m2 = agg(MaskMode::Spatial, vec![mask(2, 2, &bits1), mask(2, 2, &bits0)]);
            let (v12, _) = compose_pair(&v1, &v2, &m1, &m2).unwrap();
            for t in 0..2 {
                for c in 0..2 {
                    for h in 0..2 {
                        for w in 0..2 {
                            let got = v12.get(t, c, h, w);
                            let expect = if m1.frame(t).get(h, w) == 1 {
                                v1.get(t, c, h, w)
                            } else {
                                v2.get(t, c, h, w)
                            };
                            prop_assert_eq!(got.to_bits(), expect.to_bits());
                        }
                    }
                }
            }
        }

        /// Mixed labels stay on the segment between the inputs.
        #[test]
        fn label_affinity(lam1 in 0.0f64..=1.0, lam2 in 0.0f64..=1.0) {
            let y1 = Label::new(vec![0.25, 0.5, 0.25]).unwrap();
            let y2 = Label::new(vec![0.7, 0.1, 0.2]).unwrap();
            let (y12, y21) = mix_labels(&y1, &y2, lam1, lam2).unwrap();
            for mixed in [&y12, &y21] {
                prop_assert!((mixed.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                for ((m, a), b) in mixed.weights().iter().zip(y1.weights()).zip(y2.weights()) {
                    prop_assert!(*m >= a.min(*b) - 1e-12);
                    prop_assert!(*m <= a.max(*b) + 1e-12);
                }
            }
        }

        /// Adding set bits never decreases coverage, and the temporal union
        /// never yields a smaller lambda than the spatial one.
        #[test]
        fn lambda_monotonicity(
            bits0 in proptest::collection::vec(0u8..2, 9),
            bits1 in proptest::collection::vec(0u8..2, 9),
            extra in 0usize..9,
        ) {
            let shape = ClipShape::new(2, 1, 3, 3).unwrap();
            let base = agg(MaskMode::Spatial, vec![mask(3, 3, &bits0), mask(3, 3, &bits1)]);
            let mut grown_bits = bits0.clone();
            grown_bits[extra] = 1;
            let grown = agg(MaskMode::Spatial, vec![mask(3, 3, &grown_bits), mask(3, 3, &bits1)]);
            let lam_base = coverage_lambda(&base, &shape).unwrap();
            let lam_grown = coverage_lambda(&grown, &shape).unwrap();
            prop_assert!(lam_grown >= lam_base);

            let temporal = crate::masks::aggregate_temporal(&base).unwrap();
            prop_assert!(coverage_lambda(&temporal, &shape).unwrap() >= lam_base);
        }

        /// The direction-12 output ignores the second mask set entirely.
        #[test]
        fn direction_12_independent_of_m2(
            bits in proptest::collection::vec(0u8..2, 4),
            other in proptest::collection::vec(0u8..2, 4),
        ) {
            let shape = ClipShape::new(1, 1, 2, 2).unwrap();
            let s1 = sample("a", shape, 3.0, 0);
            let s2 = sample("b", shape, 9.0, 1);
            let m1 = InstanceMaskSet::new(
                ClipShape::new(1, 1, 2, 2).unwrap(),
                vec![vec![InstanceMask { mask: mask(2, 2, &bits), category: None, score: None }]],
            ).unwrap();
            let m2a = InstanceMaskSet::empty(1, 2, 2).unwrap();
            let m2b = InstanceMaskSet::new(
                ClipShape::new(1, 1, 2, 2).unwrap(),
                vec![vec![InstanceMask { mask: mask(2, 2, &other), category: None, score: None }]],
            ).unwrap();
            let (first_a, _) = object_mix(&s1, &s2, MaskMode::Spatial, &m1, &m2a).unwrap();
            let (first_b, _) = object_mix(&s1, &s2, MaskMode::Spatial, &m1, &m2b).unwrap();
            prop_assert_eq!(first_a.clip.data(), first_b.clip.data());
            prop_assert_eq!(first_a.label.weights(), first_b.label.weights());
            prop_assert_eq!(first_a.lam, first_b.lam);
        }
    }
}
