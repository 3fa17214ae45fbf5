use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NetworkConfig;
use crate::{Error, Result};

/// Kernel `out × in × width` (row-major) plus one bias per output channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvKernel {
    pub out_channels: usize,
    pub in_channels: usize,
    pub width: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvKernel {
    pub fn zeros(out_channels: usize, in_channels: usize, width: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            width,
            weight: vec![0.0; out_channels * in_channels * width],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn at(&self, o: usize, c: usize, k: usize) -> f64 {
        self.weight[(o * self.in_channels + c) * self.width + k]
    }

    pub fn same_shape(&self, other: &ConvKernel) -> bool {
        self.out_channels == other.out_channels
            && self.in_channels == other.in_channels
            && self.width == other.width
            && self.weight.len() == other.weight.len()
            && self.bias.len() == other.bias.len()
    }
}

/// Learnable weights: the full-height first layer, the dilated stack, and
/// the per-frame classifier head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub layer1: ConvKernel,
    pub dilated: Vec<ConvKernel>,
    pub head: ConvKernel,
}

/// Gradients share the parameter layout.
pub type Gradients = Parameters;

impl Parameters {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let (c, w) = (config.channels, config.width);
        Self {
            layer1: ConvKernel::zeros(c, config.input_channels(), w),
            dilated: (0..config.dilated_layers)
                .map(|_| ConvKernel::zeros(c, c, w))
                .collect(),
            head: ConvKernel::zeros(config.classes, c, 1),
        }
    }

    /// Conv layers in forward order, excluding the head.
    pub fn conv_layers(&self) -> impl Iterator<Item = &ConvKernel> {
        std::iter::once(&self.layer1).chain(&self.dilated)
    }

    pub fn kernels(&self) -> impl Iterator<Item = &ConvKernel> {
        self.conv_layers().chain(std::iter::once(&self.head))
    }

    pub fn kernels_mut(&mut self) -> impl Iterator<Item = &mut ConvKernel> {
        std::iter::once(&mut self.layer1)
            .chain(self.dilated.iter_mut())
            .chain(std::iter::once(&mut self.head))
    }

    /// Every tensor as a flat slice, in a fixed order.
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.kernels()
            .flat_map(|k| [k.weight.as_slice(), k.bias.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.kernels_mut()
            .flat_map(|k| [k.weight.as_mut_slice(), k.bias.as_mut_slice()])
    }

    pub fn len(&self) -> usize {
        self.tensors().map(<[f64]>::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_shape(&self, other: &Parameters) -> bool {
        self.dilated.len() == other.dilated.len()
            && self
                .kernels()
                .zip(other.kernels())
                .all(|(a, b)| a.same_shape(b))
    }

    pub fn check_matches(&self, config: &NetworkConfig) -> Result<()> {
        if self.same_shape(&Parameters::zeros(config)) {
            Ok(())
        } else {
            Err(Error::Shape(
                "parameter shapes do not match network configuration".into(),
            ))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().flatten().all(|v| v.is_finite())
    }
}

fn fill_uniform(values: &mut [f64], bound: f64, rng: &mut ChaCha8Rng) {
    let dist = Uniform::new_inclusive(-bound, bound).expect("bound is finite and positive");
    values.iter_mut().for_each(|v| *v = dist.sample(rng));
}

/// He-uniform conv kernels, Glorot-uniform head, zero biases.
pub fn init_params(config: &NetworkConfig, seed: u64) -> Parameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Parameters::zeros(config);
    let (c, w) = (config.channels, config.width);
    let fan_in = (config.input_channels() * w) as f64;
    fill_uniform(&mut params.layer1.weight, (6.0 / fan_in).sqrt(), &mut rng);
    for k in &mut params.dilated {
        fill_uniform(&mut k.weight, (6.0 / (c * w) as f64).sqrt(), &mut rng);
    }
    let head_bound = (6.0 / (c + config.classes) as f64).sqrt();
    fill_uniform(&mut params.head.weight, head_bound, &mut rng);
    params
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::count_params;

    #[test]
    fn deterministic_with_zero_bias() {
        let cfg = NetworkConfig::new(3, 4, 5).with_channels(8);
        let a = init_params(&cfg, 7);
        assert_eq!(a, init_params(&cfg, 7));
        assert_ne!(a, init_params(&cfg, 8));
        assert!(a.kernels().all(|k| k.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(a.len(), count_params(&cfg));
    }

    #[test]
    fn layer1_mean_is_near_zero() {
        let cfg = NetworkConfig::new(3, 19, 10);
        let p = init_params(&cfg, 1);
        let w = &p.layer1.weight;
        assert!(w.len() >= 10_000);
        let bound = (6.0f64 / (57.0 * 3.0)).sqrt();
        assert!(w.iter().all(|v| v.abs() <= bound));
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        // Uniform(−b, b) has variance b²/3.
        let se = (bound * bound / 3.0 / n).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
    }
}
