//! Command-line front end over the augmentation pipeline.
//!
//! Runtime failures print one JSON object (`{"error": ...}`) on stderr and
//! exit with status 1; argument errors keep clap's usage text and status 2.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::batch::{HarnessBatch, MixStrategy};
use crate::error::{Error, Result};
use crate::masks::InstanceMaskSet;
use crate::objectmix::LambdaSource;
use crate::pipeline::runner::{emit_plans, mask_stats, run_augment, AugmentJob};
use crate::pipeline::{AugConfig, TransformMode};

#[derive(Debug, Parser)]
#[command(
    name = "vidmix",
    version,
    about = "Deterministic mask-guided video mix augmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compose mixed clips from a manifest into an output directory.
    Augment(AugmentArgs),
    /// Print batch mix plans as JSON lines.
    Plan(PlanArgs),
    /// Evaluate the weighted batch loss for harness JSONL input.
    SimulateLoss(SimulateLossArgs),
    /// Report per-clip mask coverage for both aggregation modes.
    MaskStats(MaskStatsArgs),
    /// Validate mask sidecar files (RLE decode plus canonical round trip).
    DecodeCheck(DecodeCheckArgs),
}

/// Flags shared by every command that draws from the run seed.
#[derive(Debug, Args)]
struct SeedArgs {
    /// Run seed; the VIDMIX_SEED environment variable overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Input manifest: a JSON array of clip entries.
    manifest: PathBuf,
    /// Output directory for composed samples and labels.jsonl.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = MixStrategy::None)]
    strategy: MixStrategy,
    /// Per-batch application probability.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Beta concentration for rectangle-patch draws.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[command(flatten)]
    seed: SeedArgs,
    /// Frames per output clip.
    #[arg(long, default_value_t = 16)]
    clip_len: usize,
    #[arg(long, value_enum, default_value_t = TransformMode::Train)]
    mode: TransformMode,
    /// Disable the horizontal flip draw.
    #[arg(long)]
    no_hflip: bool,
    /// Which aggregated mask feeds the label weights.
    #[arg(long, value_enum, default_value_t = LambdaSource::PastedMask)]
    lambda_source: LambdaSource,
    /// Worker threads; 0 picks the library default.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Slots per planned batch.
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Drop mask instances scoring below this.
    #[arg(long, default_value_t = 0.0)]
    min_score: f64,
    /// Total class count; inferred as max manifest label + 1 when absent.
    #[arg(long)]
    num_classes: Option<usize>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// How many batch plans to draw.
    #[arg(long, default_value_t = 1)]
    batches: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, value_enum, default_value_t = MixStrategy::None)]
    strategy: MixStrategy,
    /// Per-batch application probability.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Debug, Args)]
struct SimulateLossArgs {
    /// Harness JSONL file; omit or pass '-' to read standard input.
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MaskStatsArgs {
    /// Input manifest: a JSON array of clip entries.
    manifest: PathBuf,
    /// Histogram bin count over [0,1].
    #[arg(long, default_value_t = 10)]
    bins: usize,
}

#[derive(Debug, Args)]
struct DecodeCheckArgs {
    /// Mask sidecar JSON files to validate.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

/// Parses `args` and runs the selected command against the process
/// environment and standard streams, returning the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_seed = std::env::var("VIDMIX_SEED").ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_io(
        args,
        env_seed.as_deref(),
        &mut stdout.lock(),
        &mut stderr.lock(),
    )
}

/// The testable core of `run_cli`: explicit environment and streams.
pub(crate) fn run_cli_io<I, T>(
    args: I,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let result = dispatch(cli.command, env_seed, out);
    match result {
        Ok(()) => 0,
        // A reader hanging up mid-stream (e.g. `| head`) is not a failure.
        Err(Error::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let line = json!({ "error": e.to_string() });
            let _ = writeln!(err, "{line}");
            1
        }
    }
}

/// The effective seed: VIDMIX_SEED when set (and parseable), else the flag.
fn effective_seed(env_seed: Option<&str>, flag: u64) -> Result<u64> {
    match env_seed {
        None => Ok(flag),
        Some(text) => text.trim().parse::<u64>().map_err(|_| {
            Error::InvalidArgument(format!(
                "VIDMIX_SEED must be an unsigned integer, got {text:?}"
            ))
        }),
    }
}

fn dispatch(command: Command, env_seed: Option<&str>, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Augment(args) => cmd_augment(args, env_seed, out),
        Command::Plan(args) => cmd_plan(args, env_seed, out),
        Command::SimulateLoss(args) => match &args.input {
            Some(path) if path.as_os_str() != "-" => {
                let file = File::open(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                cmd_simulate_loss(&mut BufReader::new(file), out)
            }
            _ => cmd_simulate_loss(&mut std::io::stdin().lock(), out),
        },
        Command::MaskStats(args) => cmd_mask_stats(args, out),
        Command::DecodeCheck(args) => cmd_decode_check(args, out),
    }
}

fn emit(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    })
}

fn cmd_augment(args: AugmentArgs, env_seed: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let cfg = AugConfig {
        strategy: args.strategy,
        p: args.p,
        clip_len: args.clip_len,
        alpha: args.alpha,
        seed: effective_seed(env_seed, args.seed.seed)?,
        lambda_source: args.lambda_source,
        hflip_prob: if args.no_hflip {
            0.0
        } else {
            AugConfig::default().hflip_prob
        },
        ..AugConfig::default()
    };
    let job = AugmentJob {
        manifest_path: args.manifest,
        out_dir: args.out,
        mode: args.mode,
        cfg,
        batch_size: args.batch_size,
        min_score: args.min_score,
        workers: args.workers,
        num_classes: args.num_classes,
    };
    let report = run_augment(&job)?;
    emit(
        out,
        &serde_json::to_string(&report).expect("report serializes"),
    )
}

fn cmd_plan(args: PlanArgs, env_seed: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let cfg = AugConfig {
        strategy: args.strategy,
        p: args.p,
        seed: effective_seed(env_seed, args.seed.seed)?,
        ..AugConfig::default()
    };
    emit_plans(&cfg, args.batch_size, args.batches, out)
}

fn cmd_simulate_loss(input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Io {
            path: PathBuf::from("<input>"),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let batch: HarnessBatch = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
        let loss = batch
            .loss()
            .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
        emit(out, &format!("{loss}"))?;
    }
    Ok(())
}

fn cmd_mask_stats(args: MaskStatsArgs, out: &mut dyn Write) -> Result<()> {
    if args.bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".to_string(),
        ));
    }
    let stats = mask_stats(&args.manifest)?;
    let mut hist_spatial = vec![0usize; args.bins];
    let mut hist_temporal = vec![0usize; args.bins];
    let bin_of = |v: f64| ((v * args.bins as f64) as usize).min(args.bins - 1);
    for s in &stats {
        hist_spatial[bin_of(s.lambda_spatial)] += 1;
        hist_temporal[bin_of(s.lambda_temporal)] += 1;
        emit(out, &serde_json::to_string(s).expect("stats serialize"))?;
    }
    let summary = json!({
        "clips": stats.len(),
        "bins": args.bins,
        "histogram_spatial": hist_spatial,
        "histogram_temporal": hist_temporal,
    });
    emit(out, &summary.to_string())
}

/// Parses one mask file and round-trips it through the canonical encoder.
fn check_mask_file(path: &Path) -> Result<(usize, usize)> {
    let set = InstanceMaskSet::from_json_file(path)?;
    let encoded = set.to_json_string();
    let reparsed = InstanceMaskSet::from_json_str(&encoded).map_err(|e| Error::File {
        path: path.to_path_buf(),
        message: format!("canonical re-encode failed to parse: {e}"),
    })?;
    if reparsed.to_json_string() != encoded {
        return Err(Error::File {
            path: path.to_path_buf(),
            message: "canonical encoding is not a fixed point".to_string(),
        });
    }
    let instances = set.per_frame().iter().map(Vec::len).sum();
    Ok((set.frame_count(), instances))
}

fn cmd_decode_check(args: DecodeCheckArgs, out: &mut dyn Write) -> Result<()> {
    let mut failures = 0usize;
    for path in &args.files {
        let line = match check_mask_file(path) {
            Ok((frames, instances)) => json!({
                "path": path,
                "ok": true,
                "frames": frames,
                "instances": instances,
            }),
            Err(e) => {
                failures += 1;
                json!({ "path": path, "ok": false, "error": e.to_string() })
            }
        };
        emit(out, &line.to_string())?;
    }
    if failures > 0 {
        return Err(Error::InvalidArgument(format!(
            "{failures} of {} mask files failed validation",
            args.files.len()
        )));
    }
    Ok(())
}
