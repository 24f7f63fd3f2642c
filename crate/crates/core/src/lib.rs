//! Standard and robust Bayesian inference for structural VARs identified by
//! narrative and traditional sign restrictions.

pub mod bivariate_lab;
pub mod error;
pub mod sampling;
pub mod scalar;
pub mod stats;
pub mod pipeline;
pub mod restrictions;
pub mod robust;
pub mod var_core;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ReducedFormParamsF64 = var_core::ReducedFormParams<f64>;
pub type ReducedFormParamsF32 = var_core::ReducedFormParams<f32>;
pub type OrthonormalMatrixF64 = var_core::OrthonormalMatrix<f64>;
pub type OrthonormalMatrixF32 = var_core::OrthonormalMatrix<f32>;
pub type PipelineOutputF64 = pipeline::PipelineOutput<f64>;
pub type PipelineOutputF32 = pipeline::PipelineOutput<f32>;
