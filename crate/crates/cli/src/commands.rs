use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mocap_tcn::checkpoint::{sha256_hex, Checkpoint, OptimizerCheckpoint};
use mocap_tcn::image::{default_palette, encode, fit_scaling, render_image, render_label_strip};
use mocap_tcn::ingest::{
    load_dataset, load_labels, load_motion, write_dataset, write_labels, Dataset,
};
use mocap_tcn::network::{count_params, predict, receptive_field, NetworkConfig};
use mocap_tcn::optim::AdamHyper;
use mocap_tcn::synth::{generate, SynthSpec};
use mocap_tcn::trainer::{self, encode_all, make_folds, pooled, CrossValidation, NoiseSpec};
use mocap_tcn::{par, Error};
use serde::Serialize;
use serde_json::json;

use crate::args::*;

const REPORT_SCHEMA: u32 = 1;

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

struct Report {
    lines: Vec<String>,
}

impl Report {
    fn new(command: &str, flags: &impl Serialize) -> Self {
        let header = json!({
            "record": "run",
            "schema": REPORT_SCHEMA,
            "command": command,
            "flags": flags,
            "parallel": par::is_parallel(),
        });
        Self {
            lines: vec![header.to_string()],
        }
    }

    fn push(&mut self, record: serde_json::Value) {
        self.lines.push(record.to_string());
    }

    fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        write_file(path, text)
    }
}

fn network_config(net: &NetFlags, dataset: &Dataset) -> Result<NetworkConfig> {
    let classes = dataset.classes();
    if let Some(k) = net.classes {
        if k != classes {
            bail!("--classes {k} disagrees with the class map, which lists {classes} classes");
        }
    }
    let joints = dataset
        .sequences
        .first()
        .map(|s| s.motion.joints())
        .ok_or(Error::Empty("manifest lists no sequences"))?;
    if let Some(s) = dataset
        .sequences
        .iter()
        .find(|s| s.motion.joints() != joints)
    {
        bail!(
            "{} has {} joints; the first sequence has {joints}",
            s.source_id,
            s.motion.joints()
        );
    }
    let config = NetworkConfig::new(net.width, joints, classes).with_channels(net.channels);
    config.validate()?;
    Ok(config)
}

pub fn encode_cmd(args: &EncodeArgs) -> Result<()> {
    let motion = load_motion(&args.motion)?;
    let scaling = fit_scaling([&motion])?;
    let image = encode(&motion, &scaling);
    let labels = match &args.labels {
        Some(path) => {
            let labels = load_labels(path, usize::MAX)?;
            if labels.len() != motion.frames() {
                return Err(Error::LabelLength {
                    path: path.clone(),
                    labels: labels.len(),
                    frames: motion.frames(),
                }
                .into());
            }
            Some(labels)
        }
        None => None,
    };

    write_file(
        &with_suffix(&args.out, ".motion.ppm"),
        render_image(&image, args.scale),
    )?;
    if let Some(labels) = &labels {
        let classes = labels.iter().max().map_or(1, |m| m + 1);
        let strip = render_label_strip(labels, &default_palette(classes), args.strip_height)?;
        write_file(&with_suffix(&args.out, ".labels.ppm"), strip)?;
    }
    println!("joints: {}", motion.joints());
    println!("frames: {}", motion.frames());
    for (axis, name) in ["x", "y", "z"].iter().enumerate() {
        println!(
            "{name} range: [{}, {}]",
            scaling.min[axis], scaling.max[axis]
        );
    }
    Ok(())
}

pub fn train_cmd(args: &TrainArgs) -> Result<()> {
    let dataset = load_dataset(&args.manifest)?;
    let resume = args.resume.as_deref().map(Checkpoint::load).transpose()?;
    let (config, scaling) = match &resume {
        Some(ck) => (ck.config, ck.scaling),
        None => {
            let config = network_config(&args.net, &dataset)?;
            (
                config,
                fit_scaling(dataset.sequences.iter().map(|s| &s.motion))?,
            )
        }
    };
    let seqs: Vec<_> = dataset.sequences.iter().collect();
    let examples = encode_all(&seqs, &scaling);

    let outcome = par::with_threads(args.net.threads, || match &resume {
        Some(ck) => {
            let opt = ck
                .optimizer
                .as_ref()
                .context("checkpoint has no optimizer state to resume from")?;
            Ok(trainer::resume_training(
                &config,
                &opt.hyper,
                &examples,
                ck.params.clone(),
                opt.state.clone(),
                opt.epochs_done,
                args.net.epochs,
                opt.seed,
            )?)
        }
        None => Ok::<_, anyhow::Error>(trainer::train_one(
            &config,
            &AdamHyper::with_lr(args.net.lr),
            &examples,
            args.net.epochs,
            args.net.seed,
        )?),
    })?;

    let (hyper, epochs_done, seed) = match resume.as_ref().and_then(|c| c.optimizer.as_ref()) {
        Some(opt) => (opt.hyper, opt.epochs_done + args.net.epochs, opt.seed),
        None => (
            AdamHyper::with_lr(args.net.lr),
            args.net.epochs,
            args.net.seed,
        ),
    };
    let checkpoint =
        Checkpoint::new(config, scaling, outcome.params).with_optimizer(OptimizerCheckpoint {
            hyper,
            state: outcome.optimizer,
            epochs_done,
            seed,
        });
    let json = checkpoint.to_json()?;
    write_file(&args.out, &json)?;

    let mut report = Report::new("train", args);
    report.push(json!({
        "record": "train",
        "sequences": examples.len(),
        "config": config,
        "epochs_done": epochs_done,
        "loss_trace": outcome.loss_trace,
        "checkpoint_digest": sha256_hex(json.as_bytes()),
    }));
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".report.jsonl"));
    report.save(&report_path)?;

    if let Some(last) = outcome.loss_trace.last() {
        println!("final epoch mean loss: {last}");
    }
    println!("checkpoint: {}", args.out.display());
    println!("report: {}", report_path.display());
    Ok(())
}

pub fn crossval_cmd(args: &CrossvalArgs) -> Result<()> {
    let dataset = load_dataset(&args.manifest)?;
    let config = network_config(&args.net, &dataset)?;
    let folds = make_folds(dataset.sequences.len(), args.folds)?;
    let cv = CrossValidation {
        config,
        hyper: AdamHyper::with_lr(args.net.lr),
        epochs: args.net.epochs,
        seed: args.net.seed,
        noise: args.noise.map(|p| NoiseSpec {
            p,
            seed: args.noise_seed.unwrap_or(args.net.seed),
        }),
    };
    let reports = par::with_threads(args.net.threads, || cv.run(&dataset.sequences, &folds))?;

    let mut report = Report::new("crossval", args);
    for r in &reports {
        report.push(json!({
            "record": "fold",
            "fold": r.fold,
            "train_accuracy": r.train_accuracy,
            "test_accuracy": r.test_accuracy,
            "train_frames": r.train.total,
            "test_frames": r.test.total,
            "loss_trace": r.loss_trace,
            "seed": r.seed,
            "config_digest": r.config_digest,
            "checkpoint_digest": r.checkpoint_digest,
        }));
        println!(
            "fold {}: train {:.4} test {:.4} ({} test frames)",
            r.fold, r.train_accuracy, r.test_accuracy, r.test.total
        );
    }
    let (train, test) = pooled(&reports);
    report.push(json!({
        "record": "pooled",
        "train_accuracy": train.accuracy(),
        "test_accuracy": test.accuracy(),
        "train_frames": train.total,
        "test_frames": test.total,
    }));
    report.save(&args.report)?;
    println!("pooled train accuracy: {:.4}", train.accuracy());
    println!("pooled test accuracy: {:.4}", test.accuracy());
    Ok(())
}

pub fn predict_cmd(args: &PredictArgs) -> Result<()> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let motion = load_motion(&args.motion)?;
    if motion.joints() != ck.config.joints {
        bail!(
            "{} has {} joints but the checkpoint network expects {}",
            args.motion.display(),
            motion.joints(),
            ck.config.joints
        );
    }
    let truth = args
        .labels
        .as_deref()
        .map(|p| -> Result<_> {
            let labels = load_labels(p, ck.config.classes)?;
            if labels.len() != motion.frames() {
                return Err(Error::LabelLength {
                    path: p.to_path_buf(),
                    labels: labels.len(),
                    frames: motion.frames(),
                }
                .into());
            }
            Ok(labels)
        })
        .transpose()?;

    let image = encode(&motion, &ck.scaling);
    let pred = par::with_threads(args.threads, || predict(&ck.params, &image, &ck.config))?;
    let palette = default_palette(ck.config.classes);
    write_file(&with_suffix(&args.out, ".labels"), write_labels(&pred))?;
    write_file(
        &with_suffix(&args.out, ".pred.ppm"),
        render_label_strip(&pred, &palette, args.strip_height)?,
    )?;
    write_file(
        &with_suffix(&args.out, ".motion.ppm"),
        render_image(&image, args.scale),
    )?;
    println!("frames: {}", pred.len());
    if let Some(truth) = truth {
        write_file(
            &with_suffix(&args.out, ".truth.ppm"),
            render_label_strip(&truth, &palette, args.strip_height)?,
        )?;
        let tally = trainer::frame_tally(&[&pred], &[&truth])?;
        println!("correct frames: {}/{}", tally.correct, tally.total);
        println!("frame accuracy: {}", tally.accuracy());
    }
    Ok(())
}

pub fn rfs_cmd(args: &RfsArgs) -> Result<()> {
    let config =
        NetworkConfig::new(args.width, args.joints, args.classes).with_channels(args.channels);
    config.validate()?;
    let rfs = receptive_field(args.width, config.conv_layers());
    println!("RFS: {rfs}");
    println!(
        "parameters: {} (J={}, C={}, K={})",
        count_params(&config),
        args.joints,
        args.channels,
        args.classes
    );
    if args.width == 3 {
        println!("note: 342 is sometimes quoted for w=3; five layers with dilations 1, 3, 9, 27, 81 cover 3^5 = 243 frames");
    }
    Ok(())
}

pub fn synth_cmd(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n_sequences: args.sequences,
        min_frames: args.min_frames,
        max_frames: args.max_frames,
        joints: args.joints,
        classes: args.classes,
        min_segment: args.min_segment,
        max_segment: args.max_segment,
        noise_std: args.noise_std,
        seed: args.seed,
    };
    spec.validate()?;
    let data = generate(&spec)?;
    let manifest = write_dataset(&args.out_dir, &data, &spec.class_names())?;
    let frames: usize = data.iter().map(|s| s.labels.len()).sum();
    let mut out = std::io::stdout().lock();
    writeln!(out, "sequences: {}", data.len())?;
    writeln!(out, "frames: {frames}")?;
    writeln!(out, "manifest: {}", manifest.display())?;
    Ok(())
}
