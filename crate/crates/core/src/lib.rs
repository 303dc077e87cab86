pub mod error;
pub mod vec3;
pub mod linalg;
pub mod interp;
pub mod geometry;
pub mod strayfield;
pub mod limit_model;
pub mod full_model;
pub mod layer_internal;
pub mod layer_boundary;
pub mod expansion;
pub mod config;
pub mod csvio;
pub mod plot;
pub mod cli;

pub use error::{Error, Result};
pub use vec3::Vec3;
