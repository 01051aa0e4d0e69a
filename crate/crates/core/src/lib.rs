//! Discrete weighted one-dimensional geometries, their heat flows, the
//! Boltzmann, Nash and W entropies, Harnack quantities, the optimal
//! log-Sobolev constant and a numerical verification battery.
//!
//! Every numerical routine is generic over the scalar type (`f32` or `f64`)
//! through [`Real`]; the aliases at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod entropy;
pub mod error;
pub mod flows;
pub mod harnack;
pub mod heat;
pub mod linalg;
pub mod logsobolev;
pub mod scalar;
pub mod space;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Dim, Real};

pub type Geometry = space::WeightedGeometry<f64>;
pub type Flow = flows::FlowFamily<f64>;
pub type Trajectory = heat::Trajectory<f64>;
pub type HeatState = heat::HeatState<f64>;
pub type CheckResult = verify::CheckResult<f64>;
pub type CheckParams = verify::CheckParams<f64>;
