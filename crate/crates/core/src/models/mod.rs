//! Gaussian process families: covariances, Volterra kernels and the
//! structural conditions (two-sided variance envelopes, increment signs).

pub mod conditions;
pub mod kernel;
pub mod model;
mod volterra;

pub use conditions::*;
pub use kernel::{B3Variant, Kernel, KernelConstants, KernelForm, Phi};
pub use model::{covariance, incremental_covariance, incremental_variance, ProcessModel, TOL_PSD, TOL_SIGN};
