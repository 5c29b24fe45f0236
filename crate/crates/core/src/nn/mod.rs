//! Dense-tensor convolutional autoencoder engine.

pub mod activation;
pub mod layer;
pub mod network;
pub mod optim;
pub mod ssim;
pub mod tensor;
pub mod train;
pub mod weights;

pub use activation::Activation;
pub use layer::{
    conv2d_backward, conv2d_forward, conv_transpose2d_backward, conv_transpose2d_forward, LayerGrads, LayerKind,
    LayerSpec, Padding,
};
pub use network::{build_autoencoder, build_color_net, build_text_net, Gradients, LayerParams, Network, NetworkSpec};
pub use optim::{Adam, AdamConfig};
pub use ssim::{dssim, dssim_backward, dssim_with_grad, ssim, ssim_per_sample, SsimConfig};
pub use tensor::Tensor;
pub use train::{evaluate, train, train_with_progress, LossCurve, TrainConfig, TrainingSet, DEFAULT_LEARNING_RATE};
pub use weights::{decode_weights, encode_weights, load_weights, save_weights};
