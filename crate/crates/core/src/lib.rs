pub mod acceptance;
pub mod bodies;
pub mod distance;
pub mod error;
pub mod instances;
pub mod john;
pub mod linalg;
pub mod moduli;
pub mod lp;
pub mod nnls;
pub mod optim;
pub mod stability;

pub use bodies::{AffineMap, ConvexBody};
pub use error::{Error, Result};
