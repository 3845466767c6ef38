//! Exact densities, CDFs and samplers for mean functionals M_{α,θ}(η) of
//! two-parameter Poisson-Dirichlet random probability measures.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_forms;
pub mod dist;
pub mod error;
pub mod exec;
pub mod kernel;
pub mod measure;
pub mod quadrature;
pub mod sampler;
pub mod special;
pub mod validate;

pub use dist::{eval_grid, DistGrid, MeanLaw, PointFlag};
pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{KernelEval, PDParams, Regime};
pub use measure::{AcPart, Atom, BaseMeasure, MeasureSpec, SupportHull};
pub use sampler::{Method, SampleBatch, SamplerConfig};
