//! A small convolutional regressor for cylinder diameter, written from
//! scratch: layer kernels with hand-derived backward passes, Huber and MSE
//! losses, Adam, and early stopping.
//!
//! Two variants exist. `small` takes 60×60 RGB input through convolutions of
//! 32, 64, 64 channels (kernels 5, 3, 4), each followed by ReLU and 2×2 max
//! pooling, then a 64-wide embedding and a scalar output, 189,057 parameters
//! in all. `large` takes 64×64 input with 32, 64, 128 channels (kernels
//! 5, 3, 3) and a 128-wide embedding, 684,865 parameters. All convolutions
//! use valid padding.

mod codec;
mod layers;
mod loss;
mod net;
mod preprocess;
mod tensor;
mod train;

use thiserror::Error;

pub use codec::{decode_model, encode_model, MODEL_MAGIC};
pub use layers::{
    conv2d_backward, conv2d_forward, fc_backward, fc_forward, maxpool2x2_backward, maxpool2x2_forward, relu_backward,
    relu_forward, LayerGrads,
};
pub use loss::{huber_loss, mse_loss, Loss};
pub use net::{build_net, parameter_count, CurvNet, NetConfig, Variant, INPUT_CHANNELS};
pub use preprocess::{predict_curvature, prepare_input, CROP_CONTEXT};
pub use tensor::Tensor;
pub use train::{
    evaluate_losses, train, Adam, EarlyStopping, EpochStats, Sample, TrainConfig, TrainHistory, REPORT_HUBER_DELTA,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvNetError {
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("invalid network config: {0}")]
    Config(&'static str),
    #[error("non-finite value")]
    NonFinite,
    #[error("training or validation set is empty")]
    EmptySet,
    #[error("loss diverged in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("bounding box is empty")]
    EmptyBBox,
    #[error("malformed model data: {0}")]
    Format(&'static str),
}
