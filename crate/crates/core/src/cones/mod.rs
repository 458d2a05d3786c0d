//! Polyhedral convex cones in inequality form `{y : Ay ≥ 0}` ([`HCone`]) and generator form
//! `cone(R)` ([`VCone`]), conversion between the two, dual cones, and tangent and normal cones of
//! convex polyhedra.

mod dd;
mod hcone;
mod polyhedron;
mod vcone;

pub use dd::{dd_convert, dd_convert_back, DD_DIMENSION_CAP};
pub use hcone::{dual_calculus_sum, interior_point, is_pointed, preimage_cone, HCone, InteriorPoint};
pub use polyhedron::Polyhedron;
pub use vcone::{PolyCone, VCone};
