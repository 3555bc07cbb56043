//! Body representations and the geometric kernel.

mod affine;
mod asymmetry;
mod body;
mod contain;
pub mod hull;
mod json;

pub use affine::{AffineMap, AffineMapJson};
pub use asymmetry::{asymmetry_constant, Asymmetry};
pub use body::{vertex_matrix, ConvexBody, HPolytope, Shape, VPolytope, POLAR_MIN_RADIUS};
pub use contain::{contains, support_excess, Containment};
pub use hull::Facets;
pub use json::BodyJson;
