use std::fs;

use mocap_tcn::ingest::{
    forward_kinematics, load_dataset, parse_bvh, write_dataset, Channel, ChannelData, Joint,
    Skeleton, CLASS_MAP_FILE, MANIFEST_FILE,
};
use mocap_tcn::synth::{generate, SynthSpec};
use proptest::prelude::*;

#[test]
fn two_joint_fixture() {
    let (sk, data) = parse_bvh(include_str!("fixtures/two_joint.bvh")).unwrap();
    assert_eq!(sk.joints.len(), 2);
    assert_eq!(sk.joints[1].parent, Some(0));
    assert_eq!(sk.joints[1].offset, [0.0, 1.0, 0.0]);
    assert_eq!(
        sk.joints[1].channels,
        vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation]
    );
    assert_eq!(data.width, 9);
    assert_eq!(data.frame_count, 2);
    let m = forward_kinematics(&sk, &data).unwrap();
    assert_eq!(m.joints(), 2);
    assert_eq!(m.frames(), 2);
    // Frame 0 is the rest pose.
    assert_eq!(m.position(0, 1), [0.0, 1.0, 0.0]);
}

#[test]
fn parse_and_fk_are_deterministic() {
    let text = include_str!("fixtures/three_joint.bvh");
    let run = || {
        let (sk, d) = parse_bvh(text).unwrap();
        forward_kinematics(&sk, &d)
            .unwrap()
            .positions()
            .iter()
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn seventy_entries_load_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        n_sequences: 70,
        min_frames: 30,
        max_frames: 40,
        classes: 10,
        min_segment: 5,
        max_segment: 15,
        joints: 3,
        seed: 70,
        ..SynthSpec::default()
    };
    let data = generate(&spec).unwrap();
    let manifest = write_dataset(dir.path(), &data, &spec.class_names()).unwrap();
    let loaded = load_dataset(&manifest).unwrap();
    assert_eq!(loaded.sequences.len(), 70);
    assert_eq!(loaded.classes(), 10);
    for (i, (a, b)) in loaded.sequences.iter().zip(&data).enumerate() {
        assert_eq!(a.source_id, format!("seq_{i:03}.pos"));
        assert_eq!(a.motion, b.motion);
        assert_eq!(a.labels, b.labels);
    }
}

#[test]
fn bvh_entries_load_through_kinematics() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("a.bvh"),
        include_str!("fixtures/three_joint.bvh"),
    )
    .unwrap();
    fs::write(dir.path().join("a.labels"), "0\n1\n1\n").unwrap();
    fs::write(dir.path().join(CLASS_MAP_FILE), "0\tstand\n1\tturn\n").unwrap();
    fs::write(
        dir.path().join(MANIFEST_FILE),
        "# motion\tlabels\na.bvh\ta.labels\n",
    )
    .unwrap();
    let ds = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(
        ds.sequences[0].motion.joint_names(),
        ["root", "spine", "head"]
    );
    assert_eq!(ds.sequences[0].labels, vec![0, 1, 1]);
}

fn chain_strategy() -> impl Strategy<Value = (Skeleton, ChannelData)> {
    let joint = (prop::array::uniform3(-2.0f64..2.0), any::<bool>());
    (proptest::collection::vec(joint, 1..6), 1usize..4).prop_flat_map(|(specs, frames)| {
        let joints: Vec<Joint> = specs
            .iter()
            .enumerate()
            .map(|(i, (offset, xyz))| Joint {
                name: format!("j{i}"),
                parent: if i == 0 { None } else { Some(i / 2) },
                offset: *offset,
                channels: match (i, xyz) {
                    (0, _) => vec![
                        Channel::Xposition,
                        Channel::Yposition,
                        Channel::Zposition,
                        Channel::Zrotation,
                        Channel::Xrotation,
                        Channel::Yrotation,
                    ],
                    (_, true) => vec![Channel::Xrotation, Channel::Yrotation, Channel::Zrotation],
                    (_, false) => vec![Channel::Zrotation, Channel::Yrotation, Channel::Xrotation],
                },
            })
            .collect();
        let width: usize = joints.iter().map(|j| j.channels.len()).sum();
        let skeleton = Skeleton { joints };
        proptest::collection::vec(-360.0f64..360.0, width * frames).prop_map(move |values| {
            (
                skeleton.clone(),
                ChannelData {
                    frame_count: frames,
                    frame_time: 0.01,
                    values,
                    width,
                },
            )
        })
    })
}

proptest! {
    #[test]
    fn bones_keep_their_length((sk, data) in chain_strategy()) {
        let m = forward_kinematics(&sk, &data).unwrap();
        for t in 0..data.frame_count {
            for (i, j) in sk.joints.iter().enumerate().skip(1) {
                let p = m.position(t, i);
                let q = m.position(t, j.parent.unwrap());
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                let o = j.offset.iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!((d - o).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn zero_channels_give_cumulative_offsets((sk, mut data) in chain_strategy()) {
        data.values.iter_mut().for_each(|v| *v = 0.0);
        let m = forward_kinematics(&sk, &data).unwrap();
        for (i, _) in sk.joints.iter().enumerate() {
            let mut expect = [0.0; 3];
            let mut cur = Some(i);
            while let Some(c) = cur {
                for (e, o) in expect.iter_mut().zip(sk.joints[c].offset) {
                    *e += o;
                }
                cur = sk.joints[c].parent;
            }
            let got = m.position(0, i);
            for a in 0..3 {
                prop_assert!((got[a] - expect[a]).abs() <= 1e-12);
            }
        }
    }
}
