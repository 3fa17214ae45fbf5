//! Per-frame semantic segmentation of motion capture with a dilated acausal
//! temporal fully-convolutional network.
//!
//! Sequences of global joint positions (from BVH via forward kinematics, or
//! raw position files) are encoded as motion images: one row per joint, one
//! column per frame, XYZ scaled into RGB. The network collapses the image
//! height with its first convolution and then widens its temporal receptive
//! field exponentially with four dilated layers, ending in a per-frame
//! softmax classifier. Training uses Adam with hand-written backpropagation;
//! the [`trainer`] module provides non-randomized k-fold cross-validation
//! and label-noise experiments.
//!
//! With the default `parallel` feature, convolutions split work by channel
//! and cross-validation folds run concurrently on rayon. Every reduction has
//! a fixed order, so results are bit-identical for any thread count and
//! without the feature.

pub mod checkpoint;
mod error;
pub mod image;
pub mod ingest;
pub mod network;
pub mod optim;
pub mod par;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
