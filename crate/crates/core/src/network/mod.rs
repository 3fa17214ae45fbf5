//! Five-layer dilated acausal temporal fully-convolutional network.

mod config;
pub mod conv;
mod model;
mod params;

pub use config::{count_params, receptive_field, NetworkConfig};
pub use conv::{conv_temporal, conv_temporal_backward, conv_temporal_sequential, Signal};
pub use model::{
    argmax_per_frame, flatten_image, forward, layer1_forward, logits, loss, loss_and_gradients,
    normalized_relu, predict, softmax_per_frame, Cache,
};
pub use params::{init_params, ConvKernel, Gradients, Parameters};
