//! End-to-end augmentation driver: manifest ingestion, frame sampling, the
//! train/val spatial transform chain, strategy dispatch, and deterministic
//! seeding.

use std::path::PathBuf;

use clap::ValueEnum;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::batch::MixStrategy;
use crate::error::{Error, Result};
use crate::objectmix::LambdaSource;

pub mod cli;
pub mod io;
pub mod runner;
pub mod transform;

pub use cli::run_cli;
pub use runner::{run_augment, AugmentJob, AugmentReport};
pub use transform::{sample_frames, spatial_transform};

/// Train-time or validation-time transform chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformMode {
    Train,
    Val,
}

/// Every knob of the augmentation run.
#[derive(Debug, Clone, PartialEq)]
pub struct AugConfig {
    pub strategy: MixStrategy,
    /// Per-batch application probability.
    pub p: f64,
    /// Frames per sampled clip.
    pub clip_len: usize,
    /// Inclusive short-side range for the train resize draw.
    pub train_resize_range: (usize, usize),
    /// Train crop edge, in pixels.
    pub crop: usize,
    pub hflip_prob: f64,
    /// Fixed short side for the validation resize.
    pub val_resize: usize,
    /// Validation center-crop edge.
    pub val_crop: usize,
    /// Beta parameter for rectangle-patch sampling.
    pub alpha: f64,
    pub seed: u64,
    pub lambda_source: LambdaSource,
}

impl Default for AugConfig {
    fn default() -> Self {
        AugConfig {
            strategy: MixStrategy::None,
            p: 1.0,
            clip_len: 16,
            train_resize_range: (224, 320),
            crop: 224,
            hflip_prob: 0.5,
            val_resize: 256,
            val_crop: 224,
            alpha: 1.0,
            seed: 0,
            lambda_source: LambdaSource::PastedMask,
        }
    }
}

impl AugConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.p.is_finite() || !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!(
                "application probability {} outside [0,1]",
                self.p
            )));
        }
        if self.clip_len == 0 {
            return Err(Error::InvalidArgument(
                "clip length must be at least 1".to_string(),
            ));
        }
        let (lo, hi) = self.train_resize_range;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "train resize range [{lo},{hi}] is not a valid inclusive range"
            )));
        }
        if self.crop == 0 || self.crop > lo {
            return Err(Error::InvalidArgument(format!(
                "train crop {} exceeds the smallest resize outcome {lo}",
                self.crop
            )));
        }
        if self.val_crop == 0 || self.val_crop > self.val_resize {
            return Err(Error::InvalidArgument(format!(
                "val crop {} exceeds the val resize {}",
                self.val_crop, self.val_resize
            )));
        }
        if !self.hflip_prob.is_finite() || !(0.0..=1.0).contains(&self.hflip_prob) {
            return Err(Error::InvalidArgument(format!(
                "horizontal flip probability {} outside [0,1]",
                self.hflip_prob
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// One clip in the input manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipManifestEntry {
    pub id: String,
    /// Directory holding `frame_000001.png`, `frame_000002.png`, ...
    pub frames_dir: PathBuf,
    pub frame_count: usize,
    /// Class index; must stay below the run's class count.
    pub label: usize,
    /// Per-clip mask sidecar JSON.
    pub mask_path: PathBuf,
}

/// Independent random-stream families derived from the run seed. Keeping the
/// families disjoint makes every unit of work replayable on its own, so
/// serial and parallel execution produce identical bytes.
#[derive(Debug, Clone, Copy)]
pub(crate) enum StreamDomain {
    /// One stream per batch: the probability gate and the pairing shuffle.
    Gate = 1,
    /// One stream per manifest entry: frame start, resize, crop, flip.
    Transform = 2,
    /// One stream per output slot: rectangle-patch draws.
    Compose = 3,
}

/// A ChaCha stream unique to `(domain, index)` under this run seed.
pub(crate) fn derive_rng(seed: u64, domain: StreamDomain, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << 32), "stream index exceeds 2^32");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 32) | index);
    rng
}
