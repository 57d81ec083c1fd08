//! Acceptance gate: one test per contract-level guarantee, each checked at
//! its stated tolerance against an oracle computed by an independent route.
//! Every test prints a single PASS line with the measured quantities.

mod common;

use std::fs;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fixture_manifest, tree_bytes};
use vidmix::batch::{
    cross_entropy, fixed_lambda_batch_loss, mixed_batch_loss, BatchMixPlan, MixStrategy,
    Prediction, LOG_EPS,
};
use vidmix::clip::{BinaryMask, Clip, ClipShape, Label};
use vidmix::masks::{
    aggregate_spatial, aggregate_temporal, decode_rle, encode_rle, AggregatedMask, InstanceMask,
    InstanceMaskSet, MaskMode,
};
use vidmix::objectmix::{compose_pair, coverage_lambda, mix_labels};
use vidmix::pipeline::runner::{emit_plans, run_augment, AugmentJob};
use vidmix::pipeline::{AugConfig, TransformMode};
use vidmix::videomix::{apply_videomix, sample_patch};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_shape(rng: &mut ChaCha8Rng) -> ClipShape {
    let t = rng.random_range(1..=4);
    let c = rng.random_range(1..=3);
    let h = rng.random_range(1..=16);
    let w = rng.random_range(1..=16);
    ClipShape::new(t, c, h, w).unwrap()
}

fn random_clip(rng: &mut ChaCha8Rng, shape: ClipShape) -> Clip {
    let data = (0..shape.volume()).map(|_| rng.random::<f32>()).collect();
    Clip::new(shape, data).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize) -> BinaryMask {
    let bits = (0..h * w).map(|_| rng.random_range(0..=1u8)).collect();
    BinaryMask::new(h, w, bits).unwrap()
}

fn random_agg(rng: &mut ChaCha8Rng, shape: &ClipShape) -> AggregatedMask {
    let frames = (0..shape.frames)
        .map(|_| random_mask(rng, shape.height, shape.width))
        .collect();
    AggregatedMask::new(MaskMode::Spatial, frames).unwrap()
}

/// Pixel-level oracle for a directed composition: foreground where the
/// frame's mask bit is set, background elsewhere.
fn brute_force_compose(fg: &Clip, bg: &Clip, mask: &AggregatedMask) -> Vec<f32> {
    let s = fg.shape();
    let mut out = Vec::with_capacity(s.volume());
    for t in 0..s.frames {
        let bits = mask.frame(t).bits();
        for c in 0..s.channels {
            for y in 0..s.height {
                for x in 0..s.width {
                    let idx = ((t * s.channels + c) * s.height + y) * s.width + x;
                    let bit = bits[y * s.width + x];
                    out.push(if bit == 1 {
                        fg.data()[idx]
                    } else {
                        bg.data()[idx]
                    });
                }
            }
        }
    }
    out
}

#[test]
fn acceptance_01_composition_matches_pixel_oracle() {
    let mut r = rng(0xC0);
    let start = Instant::now();
    for _ in 0..1000 {
        let shape = random_shape(&mut r);
        let v1 = random_clip(&mut r, shape);
        let v2 = random_clip(&mut r, shape);
        let m1 = random_agg(&mut r, &shape);
        let m2 = random_agg(&mut r, &shape);
        let (v12, v21) = compose_pair(&v1, &v2, &m1, &m2).unwrap();
        assert_eq!(v12.data(), brute_force_compose(&v1, &v2, &m1).as_slice());
        assert_eq!(v21.data(), brute_force_compose(&v2, &v1, &m2).as_slice());
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("PASS composition: 1000 fixtures pixel-exact both directions in {elapsed:?}");
}

fn random_instance_set(rng: &mut ChaCha8Rng) -> InstanceMaskSet {
    let t = rng.random_range(1..=4);
    let h = rng.random_range(1..=12);
    let w = rng.random_range(1..=12);
    let per_frame = (0..t)
        .map(|_| {
            let n = rng.random_range(0..=3);
            (0..n)
                .map(|_| InstanceMask {
                    mask: random_mask(rng, h, w),
                    category: Some(rng.random_range(0..80)),
                    score: Some(rng.random::<f64>()),
                })
                .collect()
        })
        .collect();
    InstanceMaskSet::new(ClipShape::new(t, 1, h, w).unwrap(), per_frame).unwrap()
}

#[test]
fn acceptance_02_aggregation_matches_or_oracles() {
    let mut r = rng(0xA6);
    let start = Instant::now();
    for _ in 0..1000 {
        let set = random_instance_set(&mut r);
        let (h, w) = (set.height(), set.width());
        let spatial = aggregate_spatial(&set).unwrap();
        let temporal = aggregate_temporal(&spatial).unwrap();

        // Nested-loop OR oracle for the per-frame union.
        let mut all_frames_or = vec![0u8; h * w];
        for (t, instances) in set.per_frame().iter().enumerate() {
            let mut want = vec![0u8; h * w];
            for inst in instances {
                for (o, &b) in want.iter_mut().zip(inst.mask.bits()) {
                    *o |= b;
                }
            }
            assert_eq!(spatial.frame(t).bits(), want.as_slice());
            for (o, &b) in all_frames_or.iter_mut().zip(want.iter()) {
                *o |= b;
            }
        }
        // The temporal union covers every spatial frame, repeats one plane
        // across all frames, and equals the OR over frames.
        for t in 0..set.frame_count() {
            assert_eq!(temporal.frame(t).bits(), all_frames_or.as_slice());
            let covered = spatial
                .frame(t)
                .bits()
                .iter()
                .zip(temporal.frame(t).bits())
                .all(|(&s, &u)| s <= u);
            assert!(covered, "frame {t} union misses spatial pixels");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("PASS aggregation: 1000 mask sets bit-exact vs OR oracles in {elapsed:?}");
}

fn random_soft_label(rng: &mut ChaCha8Rng, classes: usize) -> Label {
    let raw: Vec<f64> = (0..classes).map(|_| rng.random::<f64>() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    Label::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
}

#[test]
fn acceptance_03_lambda_and_label_mixing() {
    let mut r = rng(0x1A);
    for _ in 0..1000 {
        let shape = random_shape(&mut r);
        let mask = random_agg(&mut r, &shape);
        // Independent count of set bits over the whole volume.
        let ones: usize = (0..shape.frames)
            .map(|t| mask.frame(t).bits().iter().filter(|&&b| b == 1).count())
            .sum();
        let volume = shape.frames * shape.height * shape.width;
        let lam = coverage_lambda(&mask, &shape).unwrap();
        assert!(
            (lam - ones as f64 / volume as f64).abs() <= 1e-12,
            "lambda {lam} vs {ones}/{volume}"
        );

        let classes = r.random_range(2..=16);
        let y1 = random_soft_label(&mut r, classes);
        let y2 = random_soft_label(&mut r, classes);
        let lam2: f64 = r.random();
        let (y12, y21) = mix_labels(&y1, &y2, lam, lam2).unwrap();
        let s12: f64 = y12.weights().iter().sum();
        let s21: f64 = y21.weights().iter().sum();
        assert!((s12 - 1.0).abs() <= 1e-9, "mixed sum {s12}");
        assert!((s21 - 1.0).abs() <= 1e-9, "mixed sum {s21}");

        // Degenerate weights reproduce the pure labels bit-for-bit.
        let (full, none) = mix_labels(&y1, &y2, 1.0, 0.0).unwrap();
        assert_eq!(full.weights(), y1.weights());
        assert_eq!(none.weights(), y1.weights());
        let (zero, all) = mix_labels(&y1, &y2, 0.0, 1.0).unwrap();
        assert_eq!(zero.weights(), y2.weights());
        assert_eq!(all.weights(), y2.weights());
    }
    println!("PASS lambda/labels: coverage exact to 1e-12, mixes sum to 1e-9, degenerates exact");
}

fn random_prediction(rng: &mut ChaCha8Rng, classes: usize) -> Prediction {
    // Floor keeps every probability far above the log clamp.
    let raw: Vec<f64> = (0..classes).map(|_| rng.random::<f64>() + 0.01).collect();
    let sum: f64 = raw.iter().sum();
    Prediction::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

#[test]
fn acceptance_04_batch_loss_matches_scalar_expansion() {
    let mut r = rng(0x10);
    for _ in 0..500 {
        let b = r.random_range(1..=8);
        let classes = r.random_range(2..=16);
        let preds: Vec<Prediction> = (0..b).map(|_| random_prediction(&mut r, classes)).collect();
        let labels: Vec<Label> = (0..b).map(|_| random_soft_label(&mut r, classes)).collect();
        let pairing = random_permutation(&mut r, b);
        let lambdas: Vec<f64> = (0..b).map(|_| r.random()).collect();
        let plan = BatchMixPlan {
            batch_size: b,
            applied: true,
            pairing: pairing.clone(),
            per_sample_lambda: lambdas.clone(),
            strategy: MixStrategy::Objectmix,
        };
        let got = mixed_batch_loss(&preds, &labels, &plan).unwrap();

        // Oracle groups the terms differently: blend the two targets into
        // one effective label per sample, then take a single inner product.
        let mut want = 0.0;
        for i in 0..b {
            for k in 0..classes {
                let y = lambdas[i] * labels[i].weights()[k]
                    + (1.0 - lambdas[i]) * labels[pairing[i]].weights()[k];
                want -= y * preds[i].probs()[k].max(LOG_EPS).ln();
            }
        }
        assert!((got - want).abs() <= 1e-12, "loss {got} vs oracle {want}");

        // All-own weighting collapses to plain cross entropy.
        let unit = BatchMixPlan {
            per_sample_lambda: vec![1.0; b],
            ..plan.clone()
        };
        let plain: f64 = (0..b)
            .map(|i| cross_entropy(&preds[i], &labels[i]).unwrap())
            .sum();
        let collapsed = mixed_batch_loss(&preds, &labels, &unit).unwrap();
        assert!((collapsed - plain).abs() <= 1e-12);
        let fixed = fixed_lambda_batch_loss(&preds, &labels, &pairing, 1.0).unwrap();
        assert!((fixed - plain).abs() <= 1e-12);

        // A uniform prediction scores ln(classes) against any one-hot label.
        let uniform = Prediction::new(vec![1.0 / classes as f64; classes]).unwrap();
        let one_hot = Label::one_hot(classes, r.random_range(0..classes)).unwrap();
        let ce = cross_entropy(&uniform, &one_hot).unwrap();
        assert!((ce - (classes as f64).ln()).abs() <= 1e-12);
    }
    println!("PASS batch loss: 500 batches within 1e-12 of the re-grouped expansion");
}

#[test]
fn acceptance_05_patch_sampler_statistics() {
    let (w, h) = (224usize, 224usize);
    let band = (2.0 * (w + h) as f64 + 4.0) / ((w * h) as f64);
    let mut r = rng(0x55);
    let mut sum = 0.0;
    let mut interior = 0usize;
    for _ in 0..10_000 {
        let patch = sample_patch(&mut r, 1.0, w, h).unwrap();
        sum += patch.lam;
        let unclamped =
            patch.w1 > 0.0 && patch.w2 < w as f64 && patch.h1 > 0.0 && patch.h2 < h as f64;
        if unclamped {
            interior += 1;
            let frac = patch.realized_fraction(w, h).unwrap();
            assert!(
                (frac - patch.lam).abs() <= band,
                "interior patch frac {frac} vs lam {} beyond {band}",
                patch.lam
            );
        }
    }
    let mean = sum / 10_000.0;
    assert!((mean - 0.5).abs() <= 0.02, "mean lambda {mean}");
    assert!(interior > 100, "only {interior} interior draws");

    // The pasted rectangle must be the same pixels in every frame.
    let shape = ClipShape::new(4, 3, 16, 16).unwrap();
    let v1 = Clip::new(shape, vec![0.25; shape.volume()]).unwrap();
    let v2 = Clip::new(shape, vec![0.75; shape.volume()]).unwrap();
    for _ in 0..50 {
        let patch = sample_patch(&mut r, 1.0, shape.width, shape.height).unwrap();
        let (out, _) = apply_videomix(&v1, &v2, &patch).unwrap();
        let raster = patch.rasterized(shape.width, shape.height).unwrap();
        for t in 0..shape.frames {
            for c in 0..shape.channels {
                for y in 0..shape.height {
                    for x in 0..shape.width {
                        let idx = ((t * shape.channels + c) * shape.height + y) * shape.width + x;
                        let inside = (raster.row_start..raster.row_end).contains(&y)
                            && (raster.col_start..raster.col_end).contains(&x);
                        let want = if inside { 0.75 } else { 0.25 };
                        assert_eq!(out.data()[idx], want, "frame {t} pixel ({y},{x})");
                    }
                }
            }
        }
    }
    println!(
        "PASS patch sampler: mean lambda {mean:.4}, {interior} interior draws in band, \
         constant patch across frames"
    );
}

fn parse_plans(buf: &[u8]) -> Vec<BatchMixPlan> {
    std::str::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn fixture_job(out_dir: &std::path::Path, cfg: AugConfig) -> AugmentJob {
    AugmentJob {
        manifest_path: fixture_manifest(),
        out_dir: out_dir.to_path_buf(),
        mode: TransformMode::Train,
        cfg,
        batch_size: 4,
        min_score: 0.0,
        workers: 0,
        num_classes: None,
    }
}

#[test]
fn acceptance_06_probability_gate() {
    // p=0 with a mixing strategy writes the same bytes as strategy none.
    let cfg_off = AugConfig {
        strategy: MixStrategy::ObjectmixOr,
        p: 0.0,
        seed: 11,
        ..AugConfig::default()
    };
    let cfg_none = AugConfig {
        strategy: MixStrategy::None,
        p: 1.0,
        seed: 11,
        ..AugConfig::default()
    };
    let dir_off = tempfile::tempdir().unwrap();
    let dir_none = tempfile::tempdir().unwrap();
    run_augment(&fixture_job(dir_off.path(), cfg_off)).unwrap();
    run_augment(&fixture_job(dir_none.path(), cfg_none)).unwrap();
    assert_eq!(tree_bytes(dir_off.path()), tree_bytes(dir_none.path()));

    // p=1 applies every batch.
    let cfg_on = AugConfig {
        strategy: MixStrategy::Objectmix,
        p: 1.0,
        seed: 11,
        ..AugConfig::default()
    };
    let mut buf = Vec::new();
    emit_plans(&cfg_on, 16, 100, &mut buf).unwrap();
    let plans = parse_plans(&buf);
    assert!(plans.iter().all(|p| p.applied));
    let dir_on = tempfile::tempdir().unwrap();
    run_augment(&fixture_job(dir_on.path(), cfg_on)).unwrap();
    let labels = fs::read_to_string(dir_on.path().join("labels.jsonl")).unwrap();
    assert!(labels.lines().all(|l| l.contains("\"direction\":\"12\"")));

    // p=0.5 fires on half the planned batches.
    let cfg_half = AugConfig {
        strategy: MixStrategy::Objectmix,
        p: 0.5,
        seed: 13,
        ..AugConfig::default()
    };
    let mut buf = Vec::new();
    emit_plans(&cfg_half, 8, 10_000, &mut buf).unwrap();
    let plans = parse_plans(&buf);
    let rate = plans.iter().filter(|p| p.applied).count() as f64 / plans.len() as f64;
    assert!((rate - 0.5).abs() <= 0.02, "applied rate {rate}");
    println!("PASS gate: p=0 byte-identical to none, p=1 all applied, p=0.5 rate {rate:.4}");
}

#[test]
fn acceptance_07_deterministic_output_trees() {
    let cfg = AugConfig {
        strategy: MixStrategy::Combined,
        p: 0.6,
        seed: 7,
        ..AugConfig::default()
    };
    let run = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut job = fixture_job(dir.path(), cfg.clone());
        job.workers = workers;
        run_augment(&job).unwrap();
        tree_bytes(dir.path())
    };
    let first = run(0);
    let second = run(0);
    assert_eq!(first, second, "same-seed reruns diverged");
    let serial = run(1);
    let wide = run(8);
    assert_eq!(serial, wide, "worker count changed the bytes");
    assert_eq!(first, serial, "default pool diverged from serial");
    println!(
        "PASS determinism: {} files byte-identical across reruns and 1 vs 8 workers",
        first.len()
    );
}

#[test]
fn acceptance_08_rle_round_trip() {
    let mut r = rng(0x81);
    for _ in 0..1000 {
        let h = r.random_range(1..=16);
        let w = r.random_range(1..=16);
        let total = (h * w) as i64;
        // Canonical counts: first run may be zero, later runs are positive.
        let mut counts = vec![r.random_range(0..=total)];
        let mut remaining = total - counts[0];
        while remaining > 0 {
            let run = r.random_range(1..=remaining);
            counts.push(run);
            remaining -= run;
        }
        let mask = decode_rle(&counts, h, w).unwrap();
        assert_eq!(encode_rle(&mask), counts);
    }
    println!("PASS rle: 1000 canonical run sequences survive decode/encode exactly");
}

#[test]
fn acceptance_09_pair_composition_throughput() {
    let shape = ClipShape::new(16, 3, 224, 224).unwrap();
    let mut r = rng(0x99);
    let v1 = random_clip(&mut r, shape);
    let v2 = random_clip(&mut r, shape);
    let m1 = random_agg(&mut r, &shape);
    let m2 = random_agg(&mut r, &shape);
    compose_pair(&v1, &v2, &m1, &m2).unwrap();
    let start = Instant::now();
    let (v12, v21) = compose_pair(&v1, &v2, &m1, &m2).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(v12.shape(), shape);
    assert_eq!(v21.shape(), shape);
    assert!(
        elapsed.as_millis() < 100,
        "pair composition took {elapsed:?}"
    );
    println!("PASS throughput: 16x3x224x224 pair composed in {elapsed:?}");
}
