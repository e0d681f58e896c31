//! Dense/conv layers, reverse-mode gradients, cross-entropy, SGD and training.
//!
//! Everything runs single-threaded; gradient sums accumulate in a fixed order
//! so runs are bit-reproducible for a given seed.

pub mod checkpoint;
mod gradcheck;
mod layer;
mod loss;
mod model;
mod optim;
mod scalar;
mod tensor;
mod train;

pub use gradcheck::{
    grad_check, grad_check_report, GradCheckFixture, GradCheckOptions, GradCheckReport, TensorCheck,
};
pub use layer::Layer;
pub use loss::{argmax_rows, cross_entropy};
pub use model::{Cache, DerivativeFn, Gradients, Model};
pub use optim::{lr_at_epoch, sgd_step, Sgd, TrainConfig};
pub use scalar::Scalar;
pub use tensor::Tensor;
pub use train::{evaluate, train, train_with, Metrics};
