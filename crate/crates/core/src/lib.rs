//! Saturated non-monotonic activation functions.
//!
//! GELU, SiLU and Mish are gated products `x * s(x)`. Their saturated variants
//! SGELU, SSiLU and SMish keep that shape for negative inputs and act as the
//! identity for `x >= 0`, so positive activations pass through undistorted with
//! a constant unit gradient.
//!
//! The crate has three parts:
//!
//! - [`activations`]: scalar forward values, derivatives, pass rates, curve tables.
//! - [`nn`]: a small dense/conv training stack that accepts any activation.
//! - [`data`]: CIFAR and IDX loaders, normalization, batching, synthetic blobs.

pub mod activations;
pub mod data;
pub mod error;
pub mod nn;

pub use activations::{ActivationKind, ActivationSpec};
pub use error::{Error, Result};
