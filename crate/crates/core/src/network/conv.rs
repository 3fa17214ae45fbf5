//! Dilated acausal temporal convolution with zero same-padding.

use super::ConvKernel;
use crate::{par, Error, Result};

/// Channel-major `channels × frames` activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub channels: usize,
    pub frames: usize,
    pub data: Vec<f64>,
}

impl Signal {
    pub fn zeros(channels: usize, frames: usize) -> Self {
        Self {
            channels,
            frames,
            data: vec![0.0; channels * frames],
        }
    }

    pub fn from_vec(channels: usize, frames: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * frames {
            return Err(Error::Shape(format!(
                "{} values for a {channels}×{frames} signal",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            frames,
            data,
        })
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.frames..(c + 1) * self.frames]
    }

    pub fn get(&self, c: usize, t: usize) -> f64 {
        self.data[c * self.frames + t]
    }
}

// Below this many multiply-adds a layer runs on the calling thread.
const PAR_MIN_WORK: usize = 1 << 15;

fn check(input: &Signal, kernel: &ConvKernel, dilation: usize) -> Result<()> {
    if kernel.in_channels != input.channels {
        return Err(Error::Shape(format!(
            "kernel expects {} input channels, signal has {}",
            kernel.in_channels, input.channels
        )));
    }
    if kernel.width.is_multiple_of(2) || dilation == 0 {
        return Err(Error::Shape(format!(
            "kernel width must be odd and dilation >= 1 (width {}, dilation {dilation})",
            kernel.width
        )));
    }
    if kernel.weight.len() != kernel.out_channels * kernel.in_channels * kernel.width
        || kernel.bias.len() != kernel.out_channels
    {
        return Err(Error::Shape(
            "kernel storage does not match its declared shape".into(),
        ));
    }
    Ok(())
}

/// Output frames `t` for which `t + shift` indexes the input, as `[lo, hi)`.
#[inline]
fn valid_range(shift: isize, frames: usize) -> Option<(usize, usize)> {
    let lo = (-shift).max(0);
    let hi = (frames as isize - shift).min(frames as isize);
    (lo < hi).then_some((lo as usize, hi as usize))
}

#[inline]
fn tap_shift(k: usize, width: usize, dilation: usize) -> isize {
    (k as isize - (width / 2) as isize) * dilation as isize
}

fn output_channel(input: &Signal, kernel: &ConvKernel, dilation: usize, o: usize, out: &mut [f64]) {
    out.fill(kernel.bias[o]);
    let frames = input.frames;
    for c in 0..input.channels {
        let x = input.row(c);
        for k in 0..kernel.width {
            let w = kernel.at(o, c, k);
            let shift = tap_shift(k, kernel.width, dilation);
            let Some((lo, hi)) = valid_range(shift, frames) else {
                continue;
            };
            let src = &x[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
            for (y, &xv) in out[lo..hi].iter_mut().zip(src) {
                *y += w * xv;
            }
        }
    }
}

/// `out[o][t] = bias[o] + Σ_{c,k} input[c][t + (k − w/2)·d] · kernel[o][c][k]`,
/// with out-of-range input frames read as zero. Output length equals input length.
pub fn conv_temporal(input: &Signal, kernel: &ConvKernel, dilation: usize) -> Result<Signal> {
    check(input, kernel, dilation)?;
    let mut out = Signal::zeros(kernel.out_channels, input.frames);
    let work = kernel.weight.len() * input.frames;
    let body = |o: usize, row: &mut [f64]| output_channel(input, kernel, dilation, o, row);
    if work >= PAR_MIN_WORK {
        par::for_each_chunk_mut(&mut out.data, input.frames, body);
    } else {
        out.data
            .chunks_mut(input.frames.max(1))
            .enumerate()
            .for_each(|(o, r)| body(o, r));
    }
    Ok(out)
}

/// Same result as [`conv_temporal`], always on the calling thread.
pub fn conv_temporal_sequential(
    input: &Signal,
    kernel: &ConvKernel,
    dilation: usize,
) -> Result<Signal> {
    check(input, kernel, dilation)?;
    let mut out = Signal::zeros(kernel.out_channels, input.frames);
    if input.frames > 0 {
        for (o, row) in out.data.chunks_mut(input.frames).enumerate() {
            output_channel(input, kernel, dilation, o, row);
        }
    }
    Ok(out)
}

/// Parameter gradients of one convolution, plus the input gradient when requested.
pub struct ConvBackward {
    pub kernel: ConvKernel,
    pub input: Option<Signal>,
}

pub fn conv_temporal_backward(
    input: &Signal,
    kernel: &ConvKernel,
    dilation: usize,
    grad_out: &Signal,
    want_input_grad: bool,
) -> Result<ConvBackward> {
    check(input, kernel, dilation)?;
    if grad_out.channels != kernel.out_channels || grad_out.frames != input.frames {
        return Err(Error::Shape(
            "output gradient does not match convolution output".into(),
        ));
    }
    let frames = input.frames;
    let (width, in_ch) = (kernel.width, kernel.in_channels);
    let mut grad = ConvKernel::zeros(kernel.out_channels, in_ch, width);
    for (o, b) in grad.bias.iter_mut().enumerate() {
        *b = grad_out.row(o).iter().sum();
    }

    let parallel = kernel.weight.len() * frames >= PAR_MIN_WORK;
    let weight_body = |o: usize, wg: &mut [f64]| {
        let g = grad_out.row(o);
        for c in 0..in_ch {
            let x = input.row(c);
            for k in 0..width {
                let shift = tap_shift(k, width, dilation);
                let Some((lo, hi)) = valid_range(shift, frames) else {
                    continue;
                };
                let src = &x[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                wg[c * width + k] = g[lo..hi].iter().zip(src).map(|(a, b)| a * b).sum();
            }
        }
    };
    let chunk = in_ch * width;
    if parallel {
        par::for_each_chunk_mut(&mut grad.weight, chunk, weight_body);
    } else {
        grad.weight
            .chunks_mut(chunk)
            .enumerate()
            .for_each(|(o, w)| weight_body(o, w));
    }

    let input_grad = want_input_grad.then(|| {
        let mut gin = Signal::zeros(in_ch, frames);
        // Input frame t' receives from output frame t' − shift.
        let input_body = |c: usize, row: &mut [f64]| {
            for o in 0..kernel.out_channels {
                let g = grad_out.row(o);
                for k in 0..width {
                    let w = kernel.at(o, c, k);
                    let shift = tap_shift(k, width, dilation);
                    let Some((lo, hi)) = valid_range(-shift, frames) else {
                        continue;
                    };
                    let src = &g[(lo as isize - shift) as usize..(hi as isize - shift) as usize];
                    for (y, &gv) in row[lo..hi].iter_mut().zip(src) {
                        *y += w * gv;
                    }
                }
            }
        };
        if frames > 0 {
            if parallel {
                par::for_each_chunk_mut(&mut gin.data, frames, input_body);
            } else {
                gin.data
                    .chunks_mut(frames)
                    .enumerate()
                    .for_each(|(c, r)| input_body(c, r));
            }
        }
        gin
    });

    Ok(ConvBackward {
        kernel: grad,
        input: input_grad,
    })
}
