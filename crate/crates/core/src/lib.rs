//! Document image restoration: ground-truth generation, GMM background
//! modelling, morphology, a small convolutional autoencoder engine and
//! evaluation metrics.

pub mod error;
pub mod gmm;
pub mod image;
pub mod metrics;
pub mod morpho;
pub mod nn;
pub mod pipeline;
pub mod pnm;
pub mod scalar;

pub use error::{Error, Result};
pub use image::{BinaryMask, ColorImage, GrayImage};
pub use scalar::Scalar;

pub type Tensor32 = nn::Tensor<f32>;
pub type Tensor64 = nn::Tensor<f64>;
pub type Network32 = nn::Network<f32>;
pub type Network64 = nn::Network<f64>;
