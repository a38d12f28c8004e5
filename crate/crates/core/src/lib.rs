//! Binormal flow of non-lightlike curves in Minkowski 3-space.

pub mod convergence;
pub mod curve;
pub mod error;
pub mod frames;
pub mod flow;
pub mod frenet;
pub mod io;
pub mod lorentz;
pub mod pde;
pub mod seeds;
pub mod tolerance;

pub use curve::{DiscreteCurve, ScrewMap, Topology};
pub use error::{Result, VfeError};
pub use frames::{CausalCase, FrameCoefficientMatrix, ParallelFrameField};
pub use frenet::FrenetApparatus;
pub use lorentz::{CausalClass, MVector, MetricSign};
pub use tolerance::Tolerances;
