//! Minimal reverse-mode differentiation for fixed feed-forward architectures.
//!
//! Networks are built by composing the layer functions in [`layers`] and
//! replaying the matching `*_backward` functions in reverse order. All
//! arithmetic is `f64`.

pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod params;
pub mod tensor;

pub use layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, maxpool2d_backward,
    maxpool2d_forward, relu_backward, relu_forward, tanh_backward, tanh_forward, PoolIndex,
};
pub use loss::{mse_loss, softmax, softmax_cross_entropy};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState};
pub use params::{read_container, soft_update, write_container, ParamSet};
pub use tensor::Tensor;
