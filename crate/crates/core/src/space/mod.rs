//! Discrete weighted geometries and their operator calculus.

mod curvature;
mod distortion;
mod geometry;
mod grid;
mod operators;

pub use curvature::{
    bakry_emery_ricci, bochner_defect, chart_d1, chart_d2, curvature_panel, grad_sq, hessian_field,
    potential_is_constant, potential_slope, unit_ricci, CurvaturePanel,
};
pub use distortion::{c_kappa, distortion_coefficient, s_kappa};
pub use geometry::WeightedGeometry;
pub use grid::{Boundary, Grid1D, Topology};
pub use operators::{build_operators, carre_du_champ, cheeger_energy, gamma2, OperatorSet};
