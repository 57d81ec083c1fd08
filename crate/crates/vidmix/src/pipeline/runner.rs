//! The augmentation driver: prepares every manifest entry, plans batches,
//! composes output slots, and writes the output tree.
//!
//! Determinism scheme: every unit of work owns a random stream derived from
//! `(run seed, domain, unit index)`, so no draw depends on scheduling. Serial
//! and parallel runs therefore produce identical bytes.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::batch::{plan_batch, BatchMixPlan, MixStrategy};
use crate::clip::{Clip, Label};
use crate::error::{Error, Result};
use crate::masks::{aggregate, aggregate_spatial, InstanceMaskSet, MaskMode};
use crate::objectmix::{
    compose_onto, coverage_lambda, mix_labels, LambdaSource, MixDirection, MixedSample, Provenance,
};
use crate::pipeline::io::{
    load_clip_frames, load_manifest, resolve_entry_paths, sample_dir_name, write_clip_frames,
    write_labels, SampleRecord,
};
use crate::pipeline::transform::{sample_frames, spatial_transform};
use crate::pipeline::{derive_rng, AugConfig, ClipManifestEntry, StreamDomain, TransformMode};
use crate::videomix::{apply_videomix, sample_patch};

/// Everything `run_augment` needs beyond the config.
#[derive(Debug, Clone)]
pub struct AugmentJob {
    pub manifest_path: PathBuf,
    pub out_dir: PathBuf,
    pub mode: TransformMode,
    pub cfg: AugConfig,
    /// Slots per planned batch; the tail batch may be smaller.
    pub batch_size: usize,
    /// Instances scoring below this are dropped at ingestion (0 keeps all).
    pub min_score: f64,
    /// Worker threads; 0 picks the library default.
    pub workers: usize,
    /// Total class count; inferred as `max label + 1` when absent.
    pub num_classes: Option<usize>,
}

impl AugmentJob {
    pub fn new(manifest_path: PathBuf, out_dir: PathBuf) -> Self {
        AugmentJob {
            manifest_path,
            out_dir,
            mode: TransformMode::Train,
            cfg: AugConfig::default(),
            batch_size: 16,
            min_score: 0.0,
            workers: 0,
            num_classes: None,
        }
    }
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AugmentReport {
    pub samples: usize,
    pub batches: usize,
    pub applied_batches: usize,
}

/// One manifest entry after frame sampling and the spatial transform.
struct Prepared {
    id: String,
    clip: Clip,
    masks: InstanceMaskSet,
    label: Label,
}

/// One composed output slot before writing.
struct SlotOut {
    clip: Clip,
    record: SampleRecord,
    /// The slot's own-label weight, for the batch plan.
    own_weight: f64,
}

fn prepare_entry(
    entry: &ClipManifestEntry,
    index: usize,
    cfg: &AugConfig,
    mode: TransformMode,
    min_score: f64,
    num_classes: usize,
) -> Result<Prepared> {
    let mut rng = derive_rng(cfg.seed, StreamDomain::Transform, index as u64);
    let indices = sample_frames(&mut rng, entry.frame_count, cfg.clip_len)
        .map_err(|e| e.in_file(&entry.frames_dir))?;
    let clip = load_clip_frames(&entry.frames_dir, &indices)?;
    let mask_set = InstanceMaskSet::from_json_file(&entry.mask_path)?;
    if mask_set.frame_count() != entry.frame_count {
        return Err(Error::File {
            path: entry.mask_path.clone(),
            message: format!(
                "mask file covers {} frames but the manifest declares {}",
                mask_set.frame_count(),
                entry.frame_count
            ),
        });
    }
    let mut selected = mask_set
        .select_frames(&indices)
        .map_err(|e| e.in_file(&entry.mask_path))?;
    selected.retain_min_score(min_score);
    let (clip, masks) = spatial_transform(&mut rng, &clip, &selected, cfg, mode)
        .map_err(|e| e.in_file(&entry.frames_dir))?;
    Ok(Prepared {
        id: entry.id.clone(),
        clip,
        masks,
        label: Label::one_hot(num_classes, entry.label)?,
    })
}

/// Composes one output slot: `own`'s sample mixed with `partner` under the
/// strategy. Returns the clip, its record fields, and the own-label weight.
fn compose_slot<R: Rng + ?Sized>(
    own: &Prepared,
    partner: &Prepared,
    strategy: MixStrategy,
    lambda_source: LambdaSource,
    alpha: f64,
    rng: &mut R,
) -> Result<(Clip, Label, f64, f64, &'static str)> {
    let shape = own.clip.shape();
    match strategy {
        MixStrategy::None => Ok((own.clip.clone(), own.label.clone(), 1.0, 1.0, "none")),
        MixStrategy::Objectmix | MixStrategy::ObjectmixOr => {
            let mode = if strategy == MixStrategy::Objectmix {
                MaskMode::Spatial
            } else {
                MaskMode::Spatiotemporal
            };
            let pasted = aggregate(&own.masks, mode)?;
            let lam = match lambda_source {
                LambdaSource::PastedMask => coverage_lambda(&pasted, &shape)?,
                LambdaSource::SpatialUnion => {
                    coverage_lambda(&aggregate_spatial(&own.masks)?, &shape)?
                }
            };
            let clip = compose_onto(&own.clip, &partner.clip, &pasted)?;
            let (label, _) = mix_labels(&own.label, &partner.label, lam, lam)?;
            Ok((clip, label, lam, lam, "12"))
        }
        MixStrategy::Videomix => {
            let patch = sample_patch(rng, alpha, shape.width, shape.height)?;
            let (clip, frac) = apply_videomix(&own.clip, &partner.clip, &patch)?;
            let own_weight = 1.0 - frac;
            let (label, _) = mix_labels(&own.label, &partner.label, own_weight, own_weight)?;
            Ok((clip, label, own_weight, frac, "21"))
        }
        MixStrategy::Combined => {
            // Temporal-union object mix in both directions, then a rectangle
            // spliced between the two composed clips.
            let own_agg = aggregate(&own.masks, MaskMode::Spatiotemporal)?;
            let partner_agg = aggregate(&partner.masks, MaskMode::Spatiotemporal)?;
            let (lam1, lam2) = match lambda_source {
                LambdaSource::PastedMask => (
                    coverage_lambda(&own_agg, &shape)?,
                    coverage_lambda(&partner_agg, &shape)?,
                ),
                LambdaSource::SpatialUnion => (
                    coverage_lambda(&aggregate_spatial(&own.masks)?, &shape)?,
                    coverage_lambda(&aggregate_spatial(&partner.masks)?, &shape)?,
                ),
            };
            let v12 = compose_onto(&own.clip, &partner.clip, &own_agg)?;
            let v21 = compose_onto(&partner.clip, &own.clip, &partner_agg)?;
            let (y12, y21) = mix_labels(&own.label, &partner.label, lam1, lam2)?;
            let patch = sample_patch(rng, alpha, shape.width, shape.height)?;
            let (clip, frac) = apply_videomix(&v12, &v21, &patch)?;
            let (label, _) = mix_labels(&y12, &y21, 1.0 - frac, 1.0 - frac)?;
            let own_weight = (1.0 - frac) * lam1 + frac * (1.0 - lam2);
            Ok((clip, label, own_weight, own_weight, "12"))
        }
    }
}

/// Batch index and bounds for every slot chunk.
fn batch_ranges(total: usize, batch_size: usize) -> Vec<(usize, usize)> {
    (0..total)
        .step_by(batch_size)
        .map(|start| (start, (start + batch_size).min(total)))
        .collect()
}

/// Runs the full augmentation pipeline. Output is a pure function of
/// (manifest, config, job options); worker count never changes the bytes.
pub fn run_augment(job: &AugmentJob) -> Result<AugmentReport> {
    job.cfg.validate()?;
    if job.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".to_string(),
        ));
    }
    if !(0.0..=1.0).contains(&job.min_score) {
        return Err(Error::InvalidArgument(format!(
            "minimum score {} outside [0,1]",
            job.min_score
        )));
    }
    let manifest_dir = job
        .manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let entries: Vec<ClipManifestEntry> = load_manifest(&job.manifest_path)?
        .iter()
        .map(|e| resolve_entry_paths(e, &manifest_dir))
        .collect();
    if entries.is_empty() {
        return Err(Error::InvalidArgument(
            "manifest lists no clips".to_string(),
        ));
    }
    let num_classes = match job.num_classes {
        Some(n) => n,
        None => entries.iter().map(|e| e.label).max().unwrap() + 1,
    };
    for entry in &entries {
        if entry.label >= num_classes {
            return Err(Error::InvalidArgument(format!(
                "clip {} has label {} but the run has {} classes",
                entry.id, entry.label, num_classes
            )));
        }
        if entry.frame_count == 0 {
            return Err(Error::InvalidArgument(format!(
                "clip {} declares zero frames",
                entry.id
            )));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;

    pool.install(|| {
        // Stage 1: per-entry load + transform, each on its own stream.
        let prepared: Vec<Prepared> = entries
            .par_iter()
            .enumerate()
            .map(|(k, entry)| {
                prepare_entry(entry, k, &job.cfg, job.mode, job.min_score, num_classes)
            })
            .collect::<Result<_>>()?;

        // Stage 2: one plan per batch of consecutive slots.
        let ranges = batch_ranges(prepared.len(), job.batch_size);
        let plans: Vec<BatchMixPlan> = ranges
            .iter()
            .enumerate()
            .map(|(bi, &(start, end))| {
                let mut rng = derive_rng(job.cfg.seed, StreamDomain::Gate, bi as u64);
                plan_batch(&mut rng, end - start, job.cfg.p, job.cfg.strategy)
            })
            .collect::<Result<_>>()?;

        // Stage 3: compose every slot on its own stream and write its frames.
        std::fs::create_dir_all(&job.out_dir).map_err(|e| Error::Io {
            path: job.out_dir.clone(),
            source: e,
        })?;
        let slots: Vec<(SampleRecord, f64)> = ranges
            .par_iter()
            .zip(&plans)
            .flat_map(|(&(start, end), plan)| {
                (start..end)
                    .into_par_iter()
                    .map(move |slot| (slot, start, plan))
            })
            .map(|(slot, start, plan)| -> Result<(SampleRecord, f64)> {
                let own = &prepared[slot];
                let out = if plan.applied {
                    let partner = &prepared[start + plan.pairing[slot - start]];
                    let mut rng = derive_rng(job.cfg.seed, StreamDomain::Compose, slot as u64);
                    let (clip, label, own_weight, pasted_weight, direction) = compose_slot(
                        own,
                        partner,
                        plan.strategy,
                        job.cfg.lambda_source,
                        job.cfg.alpha,
                        &mut rng,
                    )?;
                    let sources = if direction == "none" {
                        vec![own.id.clone()]
                    } else {
                        vec![own.id.clone(), partner.id.clone()]
                    };
                    SlotOut {
                        clip,
                        record: SampleRecord {
                            clip_id: sample_dir_name(slot),
                            weights: label.weights().to_vec(),
                            lambda: pasted_weight,
                            direction: direction.to_string(),
                            sources,
                        },
                        own_weight,
                    }
                } else {
                    SlotOut {
                        clip: own.clip.clone(),
                        record: SampleRecord {
                            clip_id: sample_dir_name(slot),
                            weights: own.label.weights().to_vec(),
                            lambda: 1.0,
                            direction: "none".to_string(),
                            sources: vec![own.id.clone()],
                        },
                        own_weight: 1.0,
                    }
                };
                write_clip_frames(&job.out_dir, &out.record.clip_id, &out.clip)?;
                Ok((out.record, out.own_weight))
            })
            .collect::<Result<_>>()?;

        // Fill the realized own-label weights back into the plans and check
        // the plan invariants held end to end.
        let mut plans = plans;
        for (bi, &(start, end)) in ranges.iter().enumerate() {
            plans[bi].per_sample_lambda = slots[start..end].iter().map(|(_, w)| *w).collect();
            plans[bi].validate()?;
        }

        let records: Vec<SampleRecord> = slots.into_iter().map(|(r, _)| r).collect();
        write_labels(&job.out_dir, &records)?;
        Ok(AugmentReport {
            samples: records.len(),
            batches: plans.len(),
            applied_batches: plans.iter().filter(|p| p.applied).count(),
        })
    })
}

/// Emits `count` batch plans exactly as `run_augment` would draw them for
/// the same seed, one JSON object per line.
pub fn emit_plans(
    cfg: &AugConfig,
    batch_size: usize,
    count: usize,
    out: &mut dyn std::io::Write,
) -> Result<()> {
    cfg.validate()?;
    if batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".to_string(),
        ));
    }
    for bi in 0..count {
        let mut rng = derive_rng(cfg.seed, StreamDomain::Gate, bi as u64);
        let plan = plan_batch(&mut rng, batch_size, cfg.p, cfg.strategy)?;
        let line = serde_json::to_string(&plan).expect("plan serializes");
        writeln!(out, "{line}").map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })?;
    }
    Ok(())
}

/// Per-clip mask coverage for both aggregation modes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MaskStats {
    pub id: String,
    /// Coverage of the per-frame spatial union.
    pub lambda_spatial: f64,
    /// Coverage of the temporal union (identical across frames).
    pub lambda_temporal: f64,
}

/// Computes coverage stats for every manifest entry's full mask file.
pub fn mask_stats(manifest_path: &Path) -> Result<Vec<MaskStats>> {
    let manifest_dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let entries = load_manifest(manifest_path)?;
    entries
        .iter()
        .map(|raw| {
            let entry = resolve_entry_paths(raw, manifest_dir);
            let set = InstanceMaskSet::from_json_file(&entry.mask_path)?;
            let shape = set.shape();
            let spatial = aggregate(&set, MaskMode::Spatial)?;
            let temporal = aggregate(&set, MaskMode::Spatiotemporal)?;
            Ok(MaskStats {
                id: entry.id,
                lambda_spatial: coverage_lambda(&spatial, &shape)?,
                lambda_temporal: coverage_lambda(&temporal, &shape)?,
            })
        })
        .collect()
}

/// Pair-level augmentation: loads, samples, transforms, and mixes two
/// manifest entries with a single caller-owned stream, returning both
/// directed outputs. `run_augment` is the batch-level driver; this is the
/// one-pair building block.
pub fn augment_pair<R: Rng + ?Sized>(
    entry1: &ClipManifestEntry,
    entry2: &ClipManifestEntry,
    cfg: &AugConfig,
    mode: TransformMode,
    num_classes: usize,
    rng: &mut R,
) -> Result<(MixedSample, MixedSample)> {
    cfg.validate()?;
    let load = |entry: &ClipManifestEntry, rng: &mut R| -> Result<Prepared> {
        let indices = sample_frames(rng, entry.frame_count, cfg.clip_len)
            .map_err(|e| e.in_file(&entry.frames_dir))?;
        let clip = load_clip_frames(&entry.frames_dir, &indices)?;
        let selected = InstanceMaskSet::from_json_file(&entry.mask_path)?
            .select_frames(&indices)
            .map_err(|e| e.in_file(&entry.mask_path))?;
        let (clip, masks) = spatial_transform(rng, &clip, &selected, cfg, mode)
            .map_err(|e| e.in_file(&entry.frames_dir))?;
        Ok(Prepared {
            id: entry.id.clone(),
            clip,
            masks,
            label: Label::one_hot(num_classes, entry.label)?,
        })
    };
    let s1 = load(entry1, rng)?;
    let s2 = load(entry2, rng)?;
    let mask_mode = match cfg.strategy {
        MixStrategy::Objectmix => Some(MaskMode::Spatial),
        MixStrategy::ObjectmixOr | MixStrategy::Combined => Some(MaskMode::Spatiotemporal),
        MixStrategy::None | MixStrategy::Videomix => None,
    };
    let (c1, y1, w1, _, _) =
        compose_slot(&s1, &s2, cfg.strategy, cfg.lambda_source, cfg.alpha, rng)?;
    let (c2, y2, w2, _, _) =
        compose_slot(&s2, &s1, cfg.strategy, cfg.lambda_source, cfg.alpha, rng)?;
    let sources = [s1.id.clone(), s2.id.clone()];
    // The foreground of each directed output is its own side's paste source.
    let (lam1, dir1, lam2, dir2) = match cfg.strategy {
        MixStrategy::Videomix => (
            1.0 - w1,
            MixDirection::TwoOntoOne,
            1.0 - w2,
            MixDirection::OneOntoTwo,
        ),
        _ => (w1, MixDirection::OneOntoTwo, w2, MixDirection::TwoOntoOne),
    };
    Ok((
        MixedSample {
            clip: c1,
            label: y1,
            lam: lam1,
            provenance: Provenance {
                sources: sources.clone(),
                mode: mask_mode,
                direction: dir1,
            },
        },
        MixedSample {
            clip: c2,
            label: y2,
            lam: lam2,
            provenance: Provenance {
                sources: [sources[1].clone(), sources[0].clone()],
                mode: mask_mode,
                direction: dir2,
            },
        },
    ))
}
