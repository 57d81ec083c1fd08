//! Deterministic mask-guided video mix augmentation.
//!
//! The crate composes pairs of video clips three ways: pasting instance-mask
//! regions (per-frame spatial unions or a temporal union held fixed across
//! frames), splicing a Beta-sampled rectangle, or both in sequence. Labels
//! mix by the realized area fraction of the pasted region, and the batch
//! loss weighs each sample's two cross-entropy terms by that fraction.
//!
//! Everything downstream of a `(seed, domain, index)` triple is replayable:
//! the same manifest, config, and seed produce byte-identical outputs at any
//! worker count.
//!
//! Layout:
//! - [`clip`]: dense clip storage, binary masks, soft labels.
//! - [`masks`]: instance-mask sidecars, run-length coding, aggregation.
//! - [`objectmix`]: mask-region composition and label mixing.
//! - [`videomix`]: rectangle-patch sampling and splicing.
//! - [`batch`]: batch planning, the probability gate, the weighted loss.
//! - [`pipeline`]: manifests, frame sampling, spatial transforms, the
//!   augment driver, and the command-line interface.

pub mod batch;
pub mod clip;
pub mod error;
pub mod masks;
pub mod objectmix;
pub mod pipeline;
pub mod videomix;

pub use error::{Error, Result};
