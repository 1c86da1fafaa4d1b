//! Model-domain geometry and quadrature clouds.

mod cloud;
mod domain;

pub use cloud::{tent_volume_mc, GradedDiscParams, SampleCloud};
pub use domain::{
    BoundaryFrame, BoundaryPoint, DomainKind, InteriorPoint, ModelDomain, Projection, Tolerances,
};
