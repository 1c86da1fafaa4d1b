//! Dyadic systems, tents and Bekollé–Bonami-type weights on model domains
//! (the unit ball and the complex egg), with a discretized Bergman
//! projection and the experiments built on top of them.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar type.

pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod scalar;
pub mod dyadic;
pub mod tents;
pub mod weights;
pub mod operators;
pub mod experiments;

pub use error::{Error, Result};

pub type Domain = geometry::ModelDomain<f64>;
pub type Cloud = geometry::SampleCloud<f64>;
pub type WeightF64 = weights::Weight<f64>;
pub type PairF64 = weights::WeightPair<f64>;
pub type Kernel = operators::KernelMatrix<f64>;

pub type Domain32 = geometry::ModelDomain<f32>;
pub type Cloud32 = geometry::SampleCloud<f32>;
pub type WeightF32 = weights::Weight<f32>;
pub type PairF32 = weights::WeightPair<f32>;
pub type Kernel32 = operators::KernelMatrix<f32>;
