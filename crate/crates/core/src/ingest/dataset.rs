//! Labeled dataset files.
//!
//! A manifest lists one `motion_path<TAB>label_path` pair per line, with paths
//! relative to the manifest's directory. A class map named [`CLASS_MAP_FILE`]
//! sits next to the manifest and lists `id<TAB>name`, ids `0..K` in order.
//! Label files hold one class id per line, one line per frame.
//!
//! Motion files are either BVH or a raw-positions sidecar:
//!
//! ```text
//! POSITIONS <J> <T>
//! JOINTS <name_0> ... <name_{J-1}>
//! <x_0 y_0 z_0 ... x_{J-1} y_{J-1} z_{J-1}>   (T lines)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{forward_kinematics, parse_bvh, LabelSequence, LabeledSequence, MotionSequence};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const CLASS_MAP_FILE: &str = "classes.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<LabeledSequence>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn classes(&self) -> usize {
        self.class_names.len()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads a motion file, dispatching on its first keyword.
pub fn load_motion(path: &Path) -> Result<MotionSequence> {
    let text = read(path)?;
    let parsed = match text.split_whitespace().next() {
        Some("HIERARCHY") => parse_bvh(&text).and_then(|(sk, data)| forward_kinematics(&sk, &data)),
        Some("POSITIONS") => parse_positions(&text),
        _ => Err(Error::syntax(1, "expected `HIERARCHY` or `POSITIONS`")),
    };
    parsed.map_err(|e| Error::in_file(path, e))
}

pub fn parse_positions(text: &str) -> Result<MotionSequence> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n, header) = lines
        .next()
        .ok_or_else(|| Error::syntax(1, "empty positions file"))?;
    let dims: Vec<usize> = header
        .strip_prefix("POSITIONS")
        .map(|rest| {
            rest.split_whitespace()
                .filter_map(|t| t.parse().ok())
                .collect()
        })
        .unwrap_or_default();
    let [joints, frames] = dims[..] else {
        return Err(Error::syntax(n, "expected `POSITIONS <J> <T>`"));
    };
    let (n, names) = lines
        .next()
        .ok_or_else(|| Error::syntax(n + 1, "missing `JOINTS` line"))?;
    let names: Vec<String> = names
        .strip_prefix("JOINTS")
        .ok_or_else(|| Error::syntax(n, "expected `JOINTS`"))?
        .split_whitespace()
        .map(String::from)
        .collect();
    if names.len() != joints {
        return Err(Error::syntax(
            n,
            format!("{} joint names for J={joints}", names.len()),
        ));
    }
    let mut values = Vec::with_capacity(frames * joints * 3);
    let mut found = 0;
    for (n, line) in lines {
        let start = values.len();
        for tok in line.split_whitespace() {
            values.push(
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::syntax(n, format!("invalid position `{tok}`")))?,
            );
        }
        if values.len() - start != joints * 3 {
            return Err(Error::RowWidth {
                line: n,
                expected: joints * 3,
                found: values.len() - start,
            });
        }
        found += 1;
    }
    if found != frames {
        return Err(Error::FrameCount {
            declared: frames,
            found,
        });
    }
    MotionSequence::new(names, frames, values)
}

pub fn write_positions(motion: &MotionSequence) -> String {
    let mut out = format!(
        "POSITIONS {} {}\nJOINTS {}\n",
        motion.joints(),
        motion.frames(),
        motion.joint_names().join(" ")
    );
    for row in motion.positions().chunks(motion.joints() * 3) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            // `{}` on f64 prints the shortest exact round-trip form.
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Reads a label file; ids must lie in `[0, classes)`.
pub fn load_labels(path: &Path, classes: usize) -> Result<LabelSequence> {
    let text = read(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id: usize = line.parse().map_err(|_| {
            Error::in_file(
                path,
                Error::syntax(i + 1, format!("invalid class id `{line}`")),
            )
        })?;
        if id >= classes {
            return Err(Error::in_file(path, Error::ClassOutOfRange { id, classes }));
        }
        labels.push(id);
    }
    Ok(labels)
}

pub fn write_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

pub fn read_class_map(path: &Path) -> Result<Vec<String>> {
    let text = read(path)?;
    let mut names = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::in_file(path, Error::syntax(i + 1, "expected `id<TAB>name`"));
        let (id, name) = line.split_once('\t').ok_or_else(bad)?;
        let id: usize = id.trim().parse().map_err(|_| bad())?;
        if id != names.len() {
            return Err(Error::in_file(
                path,
                Error::syntax(
                    i + 1,
                    format!("class ids must be listed as 0..K in order; found {id}"),
                ),
            ));
        }
        names.push(name.trim().to_string());
    }
    if names.len() < 2 {
        return Err(Error::in_file(
            path,
            Error::Config("class map needs at least 2 classes".into()),
        ));
    }
    Ok(names)
}

/// Loads every manifest entry, in manifest order.
pub fn load_dataset(manifest: &Path) -> Result<Dataset> {
    let dir = manifest.parent().unwrap_or(Path::new(""));
    let class_names = read_class_map(&dir.join(CLASS_MAP_FILE))?;
    let text = read(manifest)?;
    let mut sequences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (motion_rel, label_rel) = line.split_once('\t').ok_or_else(|| {
            Error::in_file(
                manifest,
                Error::syntax(i + 1, "expected `motion_path<TAB>label_path`"),
            )
        })?;
        let motion = load_motion(&dir.join(motion_rel.trim()))?;
        let label_path = dir.join(label_rel.trim());
        let labels = load_labels(&label_path, class_names.len())?;
        if labels.len() != motion.frames() {
            return Err(Error::LabelLength {
                path: label_path,
                labels: labels.len(),
                frames: motion.frames(),
            });
        }
        sequences.push(LabeledSequence::new(motion, labels, motion_rel.trim())?);
    }
    Ok(Dataset {
        sequences,
        class_names,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes sequences as position sidecars plus manifest and class map.
/// Returns the manifest path.
pub fn write_dataset(
    dir: &Path,
    sequences: &[LabeledSequence],
    class_names: &[String],
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (i, seq) in sequences.iter().enumerate() {
        let motion = format!("seq_{i:03}.pos");
        let labels = format!("seq_{i:03}.labels");
        write(&dir.join(&motion), &write_positions(&seq.motion))?;
        write(&dir.join(&labels), &write_labels(&seq.labels))?;
        let _ = writeln!(manifest, "{motion}\t{labels}");
    }
    let classes: String = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{i}\t{n}\n"))
        .collect();
    write(&dir.join(CLASS_MAP_FILE), &classes)?;
    let path = dir.join(MANIFEST_FILE);
    write(&path, &manifest)?;
    Ok(path)
}
