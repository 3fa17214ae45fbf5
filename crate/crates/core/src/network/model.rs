//! Forward pass, per-frame softmax cross-entropy, and backpropagation.
//!
//! Pipeline: full-height conv (dilation 1) → ReLU → dilated convs with
//! dilations `w, w², …` (ReLU after each but the last) → normalized ReLU →
//! 1×1 head → logits.

use super::conv::{conv_temporal, conv_temporal_backward, Signal};
use super::{Gradients, NetworkConfig, Parameters};
use crate::image::MotionImage;
use crate::{Error, Result};

/// Flattens a motion image to `3·J` channels, channel index `3·joint + axis`.
pub fn flatten_image(img: &MotionImage) -> Signal {
    let (joints, frames) = (img.joints(), img.frames());
    let mut data = Vec::with_capacity(3 * joints * frames);
    for j in 0..joints {
        for axis in 0..3 {
            let row = &img.channel(axis)[j * frames..(j + 1) * frames];
            data.extend_from_slice(row);
        }
    }
    Signal {
        channels: 3 * joints,
        frames,
        data,
    }
}

fn check_image(img: &MotionImage, config: &NetworkConfig) -> Result<()> {
    if img.joints() != config.joints {
        return Err(Error::Shape(format!(
            "image has {} joints, network expects {}",
            img.joints(),
            config.joints
        )));
    }
    Ok(())
}

fn relu(x: &Signal) -> Signal {
    Signal {
        channels: x.channels,
        frames: x.frames,
        data: x.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

/// First layer: the full-height kernel collapses joints and axes, then ReLU.
pub fn layer1_forward(
    img: &MotionImage,
    params: &Parameters,
    config: &NetworkConfig,
) -> Result<Signal> {
    check_image(img, config)?;
    let z = conv_temporal(&flatten_image(img), &params.layer1, 1)?;
    Ok(relu(&z))
}

struct NormStats {
    max: Vec<f64>,
    argmax: Vec<usize>,
}

fn normalized_relu_impl(x: &Signal, epsilon: f64) -> (Signal, NormStats) {
    let (channels, frames) = (x.channels, x.frames);
    let mut max = vec![0.0; frames];
    let mut argmax = vec![0; frames];
    for c in 0..channels {
        for (t, &v) in x.row(c).iter().enumerate() {
            if v.max(0.0) > max[t] {
                max[t] = v;
                argmax[t] = c;
            }
        }
    }
    let mut out = Signal::zeros(channels, frames);
    for c in 0..channels {
        for (t, m) in max.iter().enumerate() {
            out.data[c * frames + t] = x.get(c, t).max(0.0) / (m + epsilon);
        }
    }
    (out, NormStats { max, argmax })
}

/// Per frame: `relu(x) / (max_c relu(x_c) + epsilon)`.
pub fn normalized_relu(x: &Signal, epsilon: f64) -> Signal {
    normalized_relu_impl(x, epsilon).0
}

/// Intermediate values retained for the backward pass.
pub struct Cache {
    input: Signal,
    /// Pre-activations of every conv layer, in order.
    pre: Vec<Signal>,
    /// Post-activations of every conv layer; the last is normalized.
    post: Vec<Signal>,
    norm: NormStats,
}

pub fn forward(
    params: &Parameters,
    img: &MotionImage,
    config: &NetworkConfig,
) -> Result<(Signal, Cache)> {
    check_image(img, config)?;
    params.check_matches(config)?;
    let input = flatten_image(img);
    let layers = config.conv_layers();
    let mut pre = Vec::with_capacity(layers);
    let mut post: Vec<Signal> = Vec::with_capacity(layers);
    let mut norm = None;
    for (i, kernel) in params.conv_layers().enumerate() {
        let x = post.last().unwrap_or(&input);
        let z = conv_temporal(x, kernel, config.dilation(i))?;
        let a = if i + 1 == layers {
            let (a, stats) = normalized_relu_impl(&z, config.epsilon);
            norm = Some(stats);
            a
        } else {
            relu(&z)
        };
        pre.push(z);
        post.push(a);
    }
    let logits = conv_temporal(
        post.last().expect("at least one conv layer"),
        &params.head,
        1,
    )?;
    let cache = Cache {
        input,
        pre,
        post,
        norm: norm.expect("last layer is normalized"),
    };
    Ok((logits, cache))
}

pub fn logits(params: &Parameters, img: &MotionImage, config: &NetworkConfig) -> Result<Signal> {
    forward(params, img, config).map(|(l, _)| l)
}

/// Max-subtracted softmax over classes, independently for each frame.
pub fn softmax_per_frame(logits: &Signal) -> Signal {
    let (classes, frames) = (logits.channels, logits.frames);
    let mut out = Signal::zeros(classes, frames);
    for t in 0..frames {
        let m = (0..classes)
            .map(|c| logits.get(c, t))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for c in 0..classes {
            let e = (logits.get(c, t) - m).exp();
            out.data[c * frames + t] = e;
            sum += e;
        }
        for c in 0..classes {
            out.data[c * frames + t] /= sum;
        }
    }
    out
}

fn check_labels(labels: &[usize], frames: usize, classes: usize) -> Result<()> {
    if labels.len() != frames {
        return Err(Error::Shape(format!(
            "{} labels for {frames} frames",
            labels.len()
        )));
    }
    if let Some(&id) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::ClassOutOfRange { id, classes });
    }
    Ok(())
}

/// Mean per-frame cross-entropy.
pub fn loss(
    params: &Parameters,
    img: &MotionImage,
    labels: &[usize],
    config: &NetworkConfig,
) -> Result<f64> {
    check_labels(labels, img.frames(), config.classes)?;
    let logits = logits(params, img, config)?;
    Ok(cross_entropy(&logits, labels))
}

fn cross_entropy(logits: &Signal, labels: &[usize]) -> f64 {
    let (classes, frames) = (logits.channels, logits.frames);
    let mut total = 0.0;
    for (t, &y) in labels.iter().enumerate() {
        let m = (0..classes)
            .map(|c| logits.get(c, t))
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = (0..classes)
            .map(|c| (logits.get(c, t) - m).exp())
            .sum::<f64>()
            .ln()
            + m;
        total += lse - logits.get(y, t);
    }
    total / frames as f64
}

pub fn loss_and_gradients(
    params: &Parameters,
    img: &MotionImage,
    labels: &[usize],
    config: &NetworkConfig,
) -> Result<(f64, Gradients)> {
    check_labels(labels, img.frames(), config.classes)?;
    let (logits, cache) = forward(params, img, config)?;
    let loss = cross_entropy(&logits, labels);
    let frames = img.frames();

    let mut grad_logits = softmax_per_frame(&logits);
    for (t, &y) in labels.iter().enumerate() {
        grad_logits.data[y * frames + t] -= 1.0;
    }
    grad_logits
        .data
        .iter_mut()
        .for_each(|g| *g /= frames as f64);

    let last = config.conv_layers() - 1;
    let head = conv_temporal_backward(&cache.post[last], &params.head, 1, &grad_logits, true)?;
    let mut grad_post = head.input.expect("requested");

    // Normalized ReLU: out_c = r_c / (m + ε), m = max_c r_c, r = relu(z).
    let mut grad_pre = Signal::zeros(grad_post.channels, frames);
    {
        let z = &cache.pre[last];
        let stats = &cache.norm;
        for t in 0..frames {
            let denom = stats.max[t] + config.epsilon;
            let mut dmax = 0.0;
            for c in 0..z.channels {
                let r = z.get(c, t).max(0.0);
                dmax -= grad_post.get(c, t) * r / (denom * denom);
            }
            for c in 0..z.channels {
                let mut dr = grad_post.get(c, t) / denom;
                if c == stats.argmax[t] {
                    dr += dmax;
                }
                if z.get(c, t) > 0.0 {
                    grad_pre.data[c * frames + t] = dr;
                }
            }
        }
    }

    let mut grads = Parameters::zeros(config);
    grads.head = head.kernel;
    for i in (0..=last).rev() {
        let input = if i == 0 {
            &cache.input
        } else {
            &cache.post[i - 1]
        };
        let kernel = if i == 0 {
            &params.layer1
        } else {
            &params.dilated[i - 1]
        };
        let back = conv_temporal_backward(input, kernel, config.dilation(i), &grad_pre, i > 0)?;
        if i == 0 {
            grads.layer1 = back.kernel;
        } else {
            grads.dilated[i - 1] = back.kernel;
            grad_post = back.input.expect("requested");
            let z = &cache.pre[i - 1];
            grad_pre = Signal {
                channels: z.channels,
                frames,
                data: grad_post
                    .data
                    .iter()
                    .zip(&z.data)
                    .map(|(&g, &zv)| if zv > 0.0 { g } else { 0.0 })
                    .collect(),
            };
        }
    }
    Ok((loss, grads))
}

/// Per-frame argmax of the logits; ties go to the lowest class id.
pub fn predict(
    params: &Parameters,
    img: &MotionImage,
    config: &NetworkConfig,
) -> Result<Vec<usize>> {
    Ok(argmax_per_frame(&logits(params, img, config)?))
}

pub fn argmax_per_frame(scores: &Signal) -> Vec<usize> {
    (0..scores.frames)
        .map(|t| {
            let mut best = 0;
            for c in 1..scores.channels {
                if scores.get(c, t) > scores.get(best, t) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    fn img(joints: usize, frames: usize, seed: u64) -> MotionImage {
        let mut s = seed;
        let values = (0..3 * joints * frames)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        MotionImage::from_values(
            (0..joints).map(|j| format!("j{j}")).collect(),
            frames,
            values,
        )
        .unwrap()
    }

    #[test]
    fn normalized_relu_examples() {
        let x = Signal::from_vec(3, 2, vec![2.0, -1.0, 1.0, -2.0, 0.0, -3.0]).unwrap();
        let y = normalized_relu(&x, 1e-5);
        assert_eq!(y.get(0, 0), 2.0 / (2.0 + 1e-5));
        assert_eq!(y.get(1, 0), 1.0 / (2.0 + 1e-5));
        assert_eq!(y.get(2, 0), 0.0);
        assert!((0..3).all(|c| y.get(c, 1) == 0.0));
        assert!(y.data.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn softmax_examples() {
        let l = Signal::from_vec(3, 1, vec![1f64.ln(), 2f64.ln(), 3f64.ln()]).unwrap();
        let p = softmax_per_frame(&l);
        for (a, b) in p.data.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let eq = softmax_per_frame(&Signal::from_vec(4, 2, vec![3.0; 8]).unwrap());
        assert!(eq.data.iter().all(|&v| v == 0.25));
        let shifted = softmax_per_frame(
            &Signal::from_vec(
                3,
                1,
                vec![1f64.ln() + 40.0, 2f64.ln() + 40.0, 3f64.ln() + 40.0],
            )
            .unwrap(),
        );
        for (a, b) in shifted.data.iter().zip(&p.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_params_give_uniform_and_ln_k() {
        let cfg = NetworkConfig::new(3, 2, 4).with_channels(3);
        let p = Parameters::zeros(&cfg);
        let im = img(2, 9, 1);
        let (l, _) = forward(&p, &im, &cfg).unwrap();
        assert!(l.data.iter().all(|&v| v == 0.0));
        let (loss, _) = loss_and_gradients(&p, &im, &[0, 1, 2, 3, 0, 1, 2, 3, 0], &cfg).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert_eq!(predict(&p, &im, &cfg).unwrap(), vec![0; 9]);
    }

    #[test]
    fn output_width_matches_input() {
        let cfg = NetworkConfig::new(3, 2, 3).with_channels(4);
        let p = init_params(&cfg, 3);
        for t in [1, 10, 1500] {
            let (l, _) = forward(&p, &img(2, t, t as u64), &cfg).unwrap();
            assert_eq!((l.channels, l.frames), (3, t));
            assert_eq!(predict(&p, &img(2, t, 1), &cfg).unwrap().len(), t);
        }
    }

    #[test]
    fn argmax_ties_and_monotone_invariance() {
        let s = Signal::from_vec(3, 3, vec![1.0, 0.0, 5.0, 1.0, 2.0, 5.0, 0.0, 2.0, 1.0]).unwrap();
        assert_eq!(argmax_per_frame(&s), vec![0, 1, 0]);
        let t = Signal {
            data: s.data.iter().map(|v| (v * 3.0).exp() + 7.0).collect(),
            ..s.clone()
        };
        assert_eq!(argmax_per_frame(&t), argmax_per_frame(&s));
    }

    #[test]
    fn joint_mismatch_and_bad_labels() {
        let cfg = NetworkConfig::new(3, 2, 3).with_channels(2);
        let p = Parameters::zeros(&cfg);
        assert!(forward(&p, &img(3, 5, 1), &cfg).is_err());
        assert!(loss_and_gradients(&p, &img(2, 3, 1), &[0, 1, 3], &cfg).is_err());
        assert!(loss_and_gradients(&p, &img(2, 3, 1), &[0, 1], &cfg).is_err());
    }
}
