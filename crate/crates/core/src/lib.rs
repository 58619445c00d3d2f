pub mod algebra;
pub mod classgroup;
pub mod curve;
pub mod error;
pub mod invariantmap;
pub mod isogeny;
pub mod products;
pub mod protocols;
pub mod thetacount;

pub use error::{Error, Result};
