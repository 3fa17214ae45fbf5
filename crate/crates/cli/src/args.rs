use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Per-frame segmentation of motion capture with a dilated temporal CNN.
#[derive(Debug, Parser)]
#[command(name = "mocap-tcn", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a motion file (and optional labels) as PPM images.
    Encode(EncodeArgs),
    /// Train on a whole manifest and write a checkpoint.
    Train(TrainArgs),
    /// Non-randomized k-fold cross-validation, optionally with label noise.
    Crossval(CrossvalArgs),
    /// Label a motion file with a trained checkpoint.
    Predict(PredictArgs),
    /// Print the receptive field and parameter count for a network width.
    Rfs(RfsArgs),
    /// Write a synthetic labeled dataset in manifest format.
    Synth(SynthArgs),
}

fn odd_width(s: &str) -> Result<usize, String> {
    let w: usize = s
        .parse()
        .map_err(|_| format!("`{s}` is not a positive integer"))?;
    if w % 2 == 1 {
        Ok(w)
    } else {
        Err(format!("width must be odd and >= 1, got {w}"))
    }
}

fn at_least<const N: usize>(s: &str) -> Result<usize, String> {
    let v: usize = s
        .parse()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))?;
    if v >= N {
        Ok(v)
    } else {
        Err(format!("must be >= {N}, got {v}"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a positive finite number, got {v}"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a finite number >= 0, got {v}"))
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must be in [0, 1], got {v}"))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NetFlags {
    /// Convolution width shared by all temporal layers (odd).
    #[arg(long, default_value_t = 3, value_parser = odd_width)]
    pub width: usize,
    /// Hidden channels per convolution layer.
    #[arg(long, default_value_t = 64, value_parser = at_least::<1>)]
    pub channels: usize,
    /// Class count; must agree with the dataset's class map when given.
    #[arg(long, value_parser = at_least::<2>)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    /// BVH or raw-positions motion file.
    pub motion: PathBuf,
    /// Label file, one class id per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output prefix; writes <prefix>.motion.ppm and <prefix>.labels.ppm.
    #[arg(long)]
    pub out: PathBuf,
    /// Pixel replication factor.
    #[arg(long, default_value_t = 1, value_parser = at_least::<1>)]
    pub scale: usize,
    #[arg(long, default_value_t = 8, value_parser = at_least::<1>)]
    pub strip_height: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    pub manifest: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Report file (JSON lines); defaults to <out>.report.jsonl.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Continue from a checkpoint that carries optimizer state.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub net: NetFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossvalArgs {
    pub manifest: PathBuf,
    /// Report file (JSON lines).
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 7, value_parser = at_least::<1>)]
    pub folds: usize,
    /// Per-frame training-label corruption probability.
    #[arg(long, value_parser = probability)]
    pub noise: Option<f64>,
    /// Seed for label noise; defaults to --seed.
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[command(flatten)]
    pub net: NetFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    pub checkpoint: PathBuf,
    pub motion: PathBuf,
    /// Output prefix; writes <prefix>.labels, <prefix>.pred.ppm, <prefix>.motion.ppm.
    #[arg(long)]
    pub out: PathBuf,
    /// True labels; adds <prefix>.truth.ppm and prints frame accuracy.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = at_least::<1>)]
    pub scale: usize,
    #[arg(long, default_value_t = 8, value_parser = at_least::<1>)]
    pub strip_height: usize,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RfsArgs {
    #[arg(long, default_value_t = 3, value_parser = odd_width)]
    pub width: usize,
    #[arg(long, default_value_t = 19, value_parser = at_least::<1>)]
    pub joints: usize,
    #[arg(long, default_value_t = 64, value_parser = at_least::<1>)]
    pub channels: usize,
    #[arg(long, default_value_t = 10, value_parser = at_least::<2>)]
    pub classes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output directory for the manifest, class map, motion and label files.
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 30, value_parser = at_least::<1>)]
    pub sequences: usize,
    #[arg(long, default_value_t = 180, value_parser = at_least::<1>)]
    pub min_frames: usize,
    #[arg(long, default_value_t = 220, value_parser = at_least::<1>)]
    pub max_frames: usize,
    #[arg(long, default_value_t = 8, value_parser = at_least::<1>)]
    pub joints: usize,
    #[arg(long, default_value_t = 5, value_parser = at_least::<2>)]
    pub classes: usize,
    #[arg(long, default_value_t = 20, value_parser = at_least::<1>)]
    pub min_segment: usize,
    #[arg(long, default_value_t = 60, value_parser = at_least::<1>)]
    pub max_segment: usize,
    #[arg(long, default_value_t = 0.02, value_parser = non_negative)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
