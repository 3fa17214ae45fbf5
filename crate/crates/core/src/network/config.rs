use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Convolution width shared by every temporal layer (odd).
    pub width: usize,
    pub joints: usize,
    pub classes: usize,
    /// Hidden channels per convolution layer.
    pub channels: usize,
    /// Dilated layers after the first, full-height layer.
    pub dilated_layers: usize,
    /// Stabilizer in the normalized ReLU denominator.
    pub epsilon: f64,
}

impl NetworkConfig {
    pub const DEFAULT_CHANNELS: usize = 64;
    pub const DEFAULT_DILATED_LAYERS: usize = 4;
    pub const DEFAULT_EPSILON: f64 = 1e-5;

    pub fn new(width: usize, joints: usize, classes: usize) -> Self {
        Self {
            width,
            joints,
            classes,
            channels: Self::DEFAULT_CHANNELS,
            dilated_layers: Self::DEFAULT_DILATED_LAYERS,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn with_channels(mut self, channels: usize) -> Self {
        self.channels = channels;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.width == 0 || self.width.is_multiple_of(2) {
            return bad(format!(
                "convolution width must be odd and >= 1, got {}",
                self.width
            ));
        }
        if self.joints == 0 {
            return bad("joint count must be >= 1".into());
        }
        if self.classes < 2 {
            return bad(format!("class count must be >= 2, got {}", self.classes));
        }
        if self.channels == 0 {
            return bad("channel count must be >= 1".into());
        }
        if self.width.checked_pow(self.conv_layers() as u32).is_none() {
            return bad(format!(
                "receptive field {}^{} overflows",
                self.width,
                self.conv_layers()
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!(
                "normalizing epsilon must be positive, got {}",
                self.epsilon
            ));
        }
        Ok(())
    }

    /// Temporal convolution layers, including the full-height first layer.
    pub fn conv_layers(&self) -> usize {
        self.dilated_layers + 1
    }

    /// Dilation of the zero-based conv layer `index`: `width^index`.
    pub fn dilation(&self, index: usize) -> usize {
        self.width.pow(index as u32)
    }

    pub fn input_channels(&self) -> usize {
        3 * self.joints
    }

    pub fn receptive_field(&self) -> usize {
        receptive_field(self.width, self.conv_layers())
    }
}

/// Frames seen by one output of `layers` stacked width-`w` convolutions whose
/// dilations grow as `1, w, w², …`.
pub fn receptive_field(w: usize, layers: usize) -> usize {
    // 1 + (w − 1)·Σ w^k telescopes to w^layers.
    let span: usize = (0..layers).map(|k| w.pow(k as u32)).sum();
    1 + (w - 1) * span
}

pub fn count_params(config: &NetworkConfig) -> usize {
    let c = config.channels;
    let first = c * config.input_channels() * config.width + c;
    let dilated = config.dilated_layers * (c * c * config.width + c);
    let head = config.classes * c + config.classes;
    first + dilated + head
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfs_values() {
        assert_eq!(receptive_field(5, 5), 3125);
        assert_eq!(receptive_field(3, 5), 243);
        assert_eq!(receptive_field(1, 5), 1);
        for w in [1, 3, 5, 7] {
            for l in 1..6 {
                assert_eq!(receptive_field(w, l), w.pow(l as u32));
            }
        }
    }

    #[test]
    fn param_counts() {
        let cfg = NetworkConfig::new(3, 19, 10);
        assert_eq!(count_params(&cfg), 61066);
        let tiny = NetworkConfig::new(1, 1, 2).with_channels(1);
        assert_eq!(count_params(&tiny), 16);
        for c in [1, 8, 64, 230] {
            let a = NetworkConfig::new(3, 19, 10).with_channels(c);
            let b = NetworkConfig::new(5, 19, 10).with_channels(c);
            assert_eq!(
                count_params(&b) - count_params(&a),
                c * 3 * 19 * 2 + 4 * c * c * 2
            );
        }
    }

    #[test]
    fn validation() {
        assert!(NetworkConfig::new(3, 19, 10).validate().is_ok());
        assert!(NetworkConfig::new(4, 19, 10).validate().is_err());
        assert!(NetworkConfig::new(3, 19, 1).validate().is_err());
        assert!(NetworkConfig::new(3, 0, 10).validate().is_err());
        assert!(NetworkConfig::new(3, 19, 10)
            .with_channels(0)
            .validate()
            .is_err());
    }
}
