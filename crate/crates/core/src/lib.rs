//! Eignet-based function approximation on concrete data spaces.
//!
//! The crate provides localized kernels and summability operators on the
//! torus, the 2-sphere and the Hermite line, quadrature construction from
//! scattered nodes, prefabricated eignet networks, and sample-driven
//! estimators for local recovery, density estimation and smoothness
//! profiling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eignets;
pub mod error;
pub mod experiments;
pub mod filters;
pub mod kernels;
pub mod learn;
pub mod quadrature;
pub mod systems;

pub use error::{Error, Result};
pub use filters::Filter;
pub use kernels::KernelHandle;
pub use quadrature::QuadratureRule;
pub use systems::{GridMeasure, Point, System};
