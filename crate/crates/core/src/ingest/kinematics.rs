use super::{ChannelData, MotionSequence, Skeleton};
use crate::{Error, Result};

type Mat3 = [[f64; 3]; 3];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn apply(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

fn axis_rotation(axis: usize, degrees: f64) -> Mat3 {
    let (s, c) = degrees.to_radians().sin_cos();
    match axis {
        0 => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        1 => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        _ => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
    }
}

/// Computes global joint positions for every frame.
///
/// Rotation channels compose intrinsically in declared order; position
/// channels add to the joint offset before the parent transform is applied.
pub fn forward_kinematics(skeleton: &Skeleton, data: &ChannelData) -> Result<MotionSequence> {
    let width = skeleton.channel_count();
    if data.width != width || data.values.len() != data.frame_count * width {
        return Err(Error::Shape(format!(
            "channel data width {} does not match skeleton channel count {width}",
            data.width
        )));
    }
    for (i, j) in skeleton.joints.iter().enumerate() {
        match j.parent {
            None if i == 0 => {}
            Some(p) if p < i => {}
            _ => {
                return Err(Error::Shape(format!(
                    "joint `{}` is out of topological order",
                    j.name
                )))
            }
        }
    }

    let joints = skeleton.joints.len();
    let mut positions = Vec::with_capacity(data.frame_count * joints * 3);
    let mut rotations = vec![IDENTITY; joints];
    let mut globals = vec![[0.0; 3]; joints];
    for frame in 0..data.frame_count {
        let mut values = data.row(frame).iter();
        for (i, joint) in skeleton.joints.iter().enumerate() {
            let mut local_rot = IDENTITY;
            let mut translation = joint.offset;
            for (&ch, &v) in joint.channels.iter().zip(values.by_ref()) {
                if ch.is_rotation() {
                    local_rot = mul(&local_rot, &axis_rotation(ch.axis(), v));
                } else {
                    translation[ch.axis()] += v;
                }
            }
            let (rot, pos) = match joint.parent {
                Some(p) => {
                    let moved = apply(&rotations[p], translation);
                    let parent = globals[p];
                    (
                        mul(&rotations[p], &local_rot),
                        [
                            moved[0] + parent[0],
                            moved[1] + parent[1],
                            moved[2] + parent[2],
                        ],
                    )
                }
                None => (local_rot, translation),
            };
            rotations[i] = rot;
            globals[i] = pos;
            positions.extend_from_slice(&pos);
        }
    }
    MotionSequence::new(skeleton.joint_names(), data.frame_count, positions)
}
