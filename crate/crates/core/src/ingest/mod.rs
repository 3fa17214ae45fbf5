//! Motion-capture ingestion: BVH parsing, forward kinematics, and labeled
//! dataset loading.

mod bvh;
mod dataset;
mod kinematics;

pub use bvh::{parse_bvh, Channel, ChannelData, Joint, Skeleton};
pub use dataset::{
    load_dataset, load_labels, load_motion, parse_positions, read_class_map, write_dataset,
    write_labels, write_positions, Dataset, CLASS_MAP_FILE, MANIFEST_FILE,
};
pub use kinematics::forward_kinematics;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-frame class ids in `[0, K)`.
pub type LabelSequence = Vec<usize>;

/// Global XYZ joint positions, `frames × joints × 3`, frame-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSequence {
    frames: usize,
    joint_names: Vec<String>,
    positions: Vec<f64>,
}

impl MotionSequence {
    pub fn new(joint_names: Vec<String>, frames: usize, positions: Vec<f64>) -> Result<Self> {
        let joints = joint_names.len();
        if joints == 0 || frames == 0 {
            return Err(Error::Shape(format!(
                "motion needs at least one joint and one frame (got J={joints}, T={frames})"
            )));
        }
        if positions.len() != frames * joints * 3 {
            return Err(Error::Shape(format!(
                "expected {} position values for T={frames}, J={joints}; got {}",
                frames * joints * 3,
                positions.len()
            )));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite joint position".into()));
        }
        Ok(Self {
            frames,
            joint_names,
            positions,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, frame: usize, joint: usize) -> [f64; 3] {
        let i = (frame * self.joints() + joint) * 3;
        [
            self.positions[i],
            self.positions[i + 1],
            self.positions[i + 2],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub motion: MotionSequence,
    pub labels: LabelSequence,
    pub source_id: String,
}

impl LabeledSequence {
    pub fn new(
        motion: MotionSequence,
        labels: LabelSequence,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if labels.len() != motion.frames() {
            return Err(Error::Shape(format!(
                "{} labels for {} frames",
                labels.len(),
                motion.frames()
            )));
        }
        Ok(Self {
            motion,
            labels,
            source_id: source_id.into(),
        })
    }
}
