//! Motion images: rows are joints, columns are frames, and the three colour
//! channels carry min-max scaled X, Y, Z coordinates.

use serde::{Deserialize, Serialize};

use crate::ingest::MotionSequence;
use crate::{Error, Result};

/// Per-axis coordinate range used to map positions into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl ScalingSpec {
    pub fn is_degenerate(&self, axis: usize) -> bool {
        self.max[axis] == self.min[axis]
    }

    fn scale(&self, axis: usize, v: f64) -> f64 {
        if self.is_degenerate(axis) {
            0.5
        } else {
            ((v - self.min[axis]) / (self.max[axis] - self.min[axis])).clamp(0.0, 1.0)
        }
    }

    fn unscale(&self, axis: usize, v: f64) -> f64 {
        if self.is_degenerate(axis) {
            self.min[axis]
        } else {
            self.min[axis] + v * (self.max[axis] - self.min[axis])
        }
    }
}

/// Fits per-axis min/max over every joint and frame of every sequence.
pub fn fit_scaling<'a, I>(sequences: I) -> Result<ScalingSpec>
where
    I: IntoIterator<Item = &'a MotionSequence>,
{
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for seq in sequences {
        any = true;
        for p in seq.positions().chunks_exact(3) {
            for axis in 0..3 {
                min[axis] = min[axis].min(p[axis]);
                max[axis] = max[axis].max(p[axis]);
            }
        }
    }
    if !any {
        return Err(Error::Empty("scaling needs at least one sequence"));
    }
    Ok(ScalingSpec { min, max })
}

/// `3 × J × T` image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionImage {
    joints: usize,
    frames: usize,
    values: Vec<f64>,
    joint_names: Vec<String>,
}

impl MotionImage {
    pub fn from_values(joint_names: Vec<String>, frames: usize, values: Vec<f64>) -> Result<Self> {
        let joints = joint_names.len();
        if values.len() != 3 * joints * frames {
            return Err(Error::Shape(format!(
                "image of J={joints}, T={frames} needs {} values, got {}",
                3 * joints * frames,
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Shape("image values must lie in [0, 1]".into()));
        }
        Ok(Self {
            joints,
            frames,
            values,
            joint_names,
        })
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    /// Channel-major values, `[axis][joint][frame]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, axis: usize, joint: usize, frame: usize) -> f64 {
        self.values[(axis * self.joints + joint) * self.frames + frame]
    }

    /// Rows `J` of the `axis` channel, each `T` long.
    pub fn channel(&self, axis: usize) -> &[f64] {
        let n = self.joints * self.frames;
        &self.values[axis * n..(axis + 1) * n]
    }
}

pub fn encode(seq: &MotionSequence, spec: &ScalingSpec) -> MotionImage {
    let (joints, frames) = (seq.joints(), seq.frames());
    let mut values = vec![0.0; 3 * joints * frames];
    for t in 0..frames {
        for j in 0..joints {
            let p = seq.position(t, j);
            for axis in 0..3 {
                values[(axis * joints + j) * frames + t] = spec.scale(axis, p[axis]);
            }
        }
    }
    MotionImage {
        joints,
        frames,
        values,
        joint_names: seq.joint_names().to_vec(),
    }
}

pub fn decode(img: &MotionImage, spec: &ScalingSpec) -> MotionSequence {
    let mut positions = vec![0.0; img.frames * img.joints * 3];
    for t in 0..img.frames {
        for j in 0..img.joints {
            for axis in 0..3 {
                positions[(t * img.joints + j) * 3 + axis] =
                    spec.unscale(axis, img.value(axis, j, t));
            }
        }
    }
    MotionSequence::new(img.joint_names.clone(), img.frames, positions)
        .expect("image dimensions are validated at construction")
}

fn quantize(v: f64) -> u8 {
    // f64::round rounds half away from zero.
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn ppm_header(width: usize, height: usize) -> Vec<u8> {
    format!("P6\n{width} {height}\n255\n").into_bytes()
}

/// Binary PPM of the image, each cell replicated into a `scale × scale` block.
pub fn render_image(img: &MotionImage, scale: usize) -> Vec<u8> {
    let scale = scale.max(1);
    let (width, height) = (img.frames * scale, img.joints * scale);
    let mut out = ppm_header(width, height);
    out.reserve(3 * width * height);
    for y in 0..height {
        let j = y / scale;
        for x in 0..width {
            let t = x / scale;
            for axis in 0..3 {
                out.push(quantize(img.value(axis, j, t)));
            }
        }
    }
    out
}

pub type Rgb = [u8; 3];

/// Binary PPM strip, one column per frame coloured by its label.
pub fn render_label_strip(labels: &[usize], palette: &[Rgb], height: usize) -> Result<Vec<u8>> {
    if let Some(&id) = labels.iter().find(|&&l| l >= palette.len()) {
        return Err(Error::ClassOutOfRange {
            id,
            classes: palette.len(),
        });
    }
    let mut out = ppm_header(labels.len(), height);
    out.reserve(3 * labels.len() * height);
    for _ in 0..height {
        for &l in labels {
            out.extend_from_slice(&palette[l]);
        }
    }
    Ok(out)
}

const BASE_PALETTE: [Rgb; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

/// A palette of `n` colours; the first ten are fixed, later ones are spread in hue.
pub fn default_palette(n: usize) -> Vec<Rgb> {
    (0..n)
        .map(|i| {
            if i < BASE_PALETTE.len() {
                return BASE_PALETTE[i];
            }
            let h = (i as f64 * 0.618_033_988_749_895).fract() * 6.0;
            let x = 1.0 - ((h % 2.0) - 1.0).abs();
            let (r, g, b) = match h as u32 {
                0 => (1.0, x, 0.0),
                1 => (x, 1.0, 0.0),
                2 => (0.0, 1.0, x),
                3 => (0.0, x, 1.0),
                4 => (x, 0.0, 1.0),
                _ => (1.0, 0.0, x),
            };
            [quantize(r * 0.85), quantize(g * 0.85), quantize(b * 0.85)]
        })
        .collect()
}
