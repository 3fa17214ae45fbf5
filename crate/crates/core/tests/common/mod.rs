//! Reference oracles shared by integration tests. Written independently of
//! the library's convolution and backpropagation code paths.
#![allow(dead_code)]

use mocap_tcn::image::MotionImage;
use mocap_tcn::network::{loss, ConvKernel, NetworkConfig, Parameters, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct triple loop over output channel, frame, input channel and tap.
pub fn naive_conv(input: &Signal, kernel: &ConvKernel, dilation: usize) -> Vec<f64> {
    let half = (kernel.width / 2) as i64;
    let mut out = vec![0.0; kernel.out_channels * input.frames];
    for o in 0..kernel.out_channels {
        for t in 0..input.frames as i64 {
            let mut acc = kernel.bias[o];
            for c in 0..kernel.in_channels {
                for k in 0..kernel.width as i64 {
                    let src = t + (k - half) * dilation as i64;
                    if src >= 0 && src < input.frames as i64 {
                        acc += input.data[c * input.frames + src as usize]
                            * kernel.weight
                                [(o * kernel.in_channels + c) * kernel.width + k as usize];
                    }
                }
            }
            out[o * input.frames + t as usize] = acc;
        }
    }
    out
}

/// 2D convolution of a `3 × J × T` image with `C` kernels of shape
/// `3 × J × w` (kernel height equal to the image height), applied along time
/// only, followed by ReLU. `kernel2d[o][axis][joint][k]`.
pub fn conv2d_full_height(
    img: &MotionImage,
    kernel2d: &[Vec<Vec<Vec<f64>>>],
    bias: &[f64],
) -> Vec<f64> {
    let (joints, frames) = (img.joints(), img.frames());
    let width = kernel2d[0][0][0].len();
    let half = (width / 2) as i64;
    let mut out = vec![0.0; kernel2d.len() * frames];
    for (o, ko) in kernel2d.iter().enumerate() {
        for t in 0..frames as i64 {
            let mut acc = bias[o];
            for (axis, ka) in ko.iter().enumerate() {
                for (row, kr) in ka.iter().enumerate().take(joints) {
                    for (k, &wv) in kr.iter().enumerate() {
                        let src = t + k as i64 - half;
                        if src >= 0 && src < frames as i64 {
                            acc += img.value(axis, row, src as usize) * wv;
                        }
                    }
                }
            }
            out[o * frames + t as usize] = acc.max(0.0);
        }
    }
    out
}

pub fn random_kernel(rng: &mut ChaCha8Rng, out: usize, inp: usize, width: usize) -> ConvKernel {
    ConvKernel {
        out_channels: out,
        in_channels: inp,
        width,
        weight: (0..out * inp * width)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
        bias: (0..out).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

pub fn random_signal(rng: &mut ChaCha8Rng, channels: usize, frames: usize) -> Signal {
    Signal::from_vec(
        channels,
        frames,
        (0..channels * frames)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

pub fn random_image(rng: &mut ChaCha8Rng, joints: usize, frames: usize) -> MotionImage {
    MotionImage::from_values(
        (0..joints).map(|j| format!("j{j}")).collect(),
        frames,
        (0..3 * joints * frames)
            .map(|_| rng.random_range(0.0..=1.0))
            .collect(),
    )
    .unwrap()
}

/// Random parameters with biases too, so every ReLU sees both signs.
pub fn random_params(rng: &mut ChaCha8Rng, config: &NetworkConfig) -> Parameters {
    let mut p = Parameters::zeros(config);
    for t in p.tensors_mut() {
        t.iter_mut().for_each(|v| *v = rng.random_range(-0.8..0.8));
    }
    p
}

/// Locates flat coordinate `index` as (tensor, offset).
pub fn coordinate(params: &Parameters, mut index: usize) -> (usize, usize) {
    for (ti, t) in params.tensors().enumerate() {
        if index < t.len() {
            return (ti, index);
        }
        index -= t.len();
    }
    panic!("coordinate out of range");
}

pub fn get(params: &Parameters, (ti, off): (usize, usize)) -> f64 {
    params.tensors().nth(ti).unwrap()[off]
}

pub fn set(params: &mut Parameters, (ti, off): (usize, usize), v: f64) {
    params.tensors_mut().nth(ti).unwrap()[off] = v;
}

/// Central finite difference of the loss with respect to one coordinate.
pub fn numeric_gradient(
    params: &Parameters,
    coord: (usize, usize),
    img: &MotionImage,
    labels: &[usize],
    config: &NetworkConfig,
    step: f64,
) -> f64 {
    let mut p = params.clone();
    let x = get(params, coord);
    set(&mut p, coord, x + step);
    let up = loss(&p, img, labels, config).unwrap();
    set(&mut p, coord, x - step);
    let down = loss(&p, img, labels, config).unwrap();
    (up - down) / (2.0 * step)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}
