//! Deterministic synthetic labeled motion.
//!
//! Each sequence is a run of segments; inside a segment of class `c`, every
//! joint coordinate follows `A[c][j][axis]·sin(2π·f_c·t + φ[c][j][axis])`
//! plus a per-sequence constant drift and clipped Gaussian noise. Classes
//! differ in frequency, so telling them apart needs temporal context rather
//! than a single frame.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{LabeledSequence, MotionSequence};
use crate::trainer::derive_seed;
use crate::{Error, Result};

const MIN_FREQUENCY: f64 = 1.0 / 40.0;
const MAX_FREQUENCY: f64 = 1.0 / 6.0;
const MIN_AMPLITUDE: f64 = 0.5;
const MAX_AMPLITUDE: f64 = 1.5;
pub const DRIFT_BOUND: f64 = 0.5;
const MAX_RETRIES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_sequences: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    pub joints: usize,
    pub classes: usize,
    pub min_segment: usize,
    pub max_segment: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_sequences: 30,
            min_frames: 180,
            max_frames: 220,
            joints: 8,
            classes: 5,
            min_segment: 20,
            max_segment: 60,
            noise_std: 0.02,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic spec: {m}")));
        if self.n_sequences == 0 {
            return bad("n_sequences must be >= 1");
        }
        if self.classes < 2 {
            return bad("classes must be >= 2");
        }
        if self.joints == 0 {
            return bad("joints must be >= 1");
        }
        if self.min_frames == 0 || self.min_frames > self.max_frames {
            return bad("frame range must satisfy 1 <= min <= max");
        }
        if self.min_segment == 0 || self.min_segment > self.max_segment {
            return bad("segment range must satisfy 1 <= min <= max");
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad("noise_std must be finite and >= 0");
        }
        Ok(())
    }

    /// Class frequencies in cycles per frame, evenly spaced and distinct.
    pub fn frequencies(&self) -> Vec<f64> {
        let k = self.classes.max(2);
        (0..self.classes)
            .map(|c| MIN_FREQUENCY + (MAX_FREQUENCY - MIN_FREQUENCY) * c as f64 / (k - 1) as f64)
            .collect()
    }

    /// Upper bound on any generated coordinate's magnitude.
    pub fn coordinate_bound(&self) -> f64 {
        MAX_AMPLITUDE + DRIFT_BOUND + 6.0 * self.noise_std
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.classes).map(|c| format!("class_{c}")).collect()
    }
}

struct ClassTables {
    frequency: Vec<f64>,
    /// `[class][joint][axis]`
    amplitude: Vec<Vec<[f64; 3]>>,
    phase: Vec<Vec<[f64; 3]>>,
}

impl ClassTables {
    fn draw(spec: &SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[0x7461_626c]));
        let mut table = |lo: f64, hi: f64| -> Vec<Vec<[f64; 3]>> {
            (0..spec.classes)
                .map(|_| {
                    (0..spec.joints)
                        .map(|_| std::array::from_fn(|_| rng.random_range(lo..hi)))
                        .collect()
                })
                .collect()
        };
        let amplitude = table(MIN_AMPLITUDE, MAX_AMPLITUDE);
        let phase = table(0.0, TAU);
        Self {
            frequency: spec.frequencies(),
            amplitude,
            phase,
        }
    }
}

fn generate_sequence(
    spec: &SynthSpec,
    tables: &ClassTables,
    rng: &mut ChaCha8Rng,
    index: usize,
) -> Result<LabeledSequence> {
    let frames = rng.random_range(spec.min_frames..=spec.max_frames);
    let drift: Vec<[f64; 3]> = (0..spec.joints)
        .map(|_| std::array::from_fn(|_| rng.random_range(-DRIFT_BOUND..=DRIFT_BOUND)))
        .collect();
    let mut labels = Vec::with_capacity(frames);
    let mut previous = None;
    while labels.len() < frames {
        let len = rng
            .random_range(spec.min_segment..=spec.max_segment)
            .min(frames - labels.len());
        let class = loop {
            let c = rng.random_range(0..spec.classes);
            if Some(c) != previous {
                break c;
            }
        };
        previous = Some(class);
        labels.extend(std::iter::repeat_n(class, len));
    }

    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Synth(e.to_string()))?;
    let clip = 6.0 * spec.noise_std;
    let mut positions = Vec::with_capacity(frames * spec.joints * 3);
    for (t, &c) in labels.iter().enumerate() {
        let arg = TAU * tables.frequency[c] * t as f64;
        for (j, joint_drift) in drift.iter().enumerate() {
            for (axis, d) in joint_drift.iter().enumerate() {
                let wave = tables.amplitude[c][j][axis] * (arg + tables.phase[c][j][axis]).sin();
                let n = if spec.noise_std > 0.0 {
                    noise.sample(rng).clamp(-clip, clip)
                } else {
                    0.0
                };
                positions.push(wave + d + n);
            }
        }
    }
    let names = (0..spec.joints).map(|j| format!("joint_{j}")).collect();
    let motion = MotionSequence::new(names, frames, positions)?;
    LabeledSequence::new(motion, labels, format!("synth_{index:03}"))
}

/// Generates `n_sequences` labeled sequences covering every class.
pub fn generate(spec: &SynthSpec) -> Result<Vec<LabeledSequence>> {
    spec.validate()?;
    let tables = ClassTables::draw(spec);
    for attempt in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[0x7365_7173, attempt]));
        let data = (0..spec.n_sequences)
            .map(|i| generate_sequence(spec, &tables, &mut rng, i))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = vec![false; spec.classes];
        data.iter()
            .flat_map(|s| &s.labels)
            .for_each(|&l| seen[l] = true);
        if seen.iter().all(|&s| s) {
            return Ok(data);
        }
    }
    Err(Error::Synth(format!(
        "not every class appeared within {MAX_RETRIES} attempts; increase n_sequences or frames"
    )))
}
