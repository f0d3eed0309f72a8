//! Solid-on-solid (SOS) random surfaces above a wall.
//!
//! Exact small-box thermodynamics, the level-line (cylinder) calculus,
//! heat-bath sampling and strip transfer operators for the 2D SOS model
//! with a pinning reward at height zero.

pub mod contours;
pub mod error;
pub mod exact;
pub mod formulas;
pub mod freeenergy;
pub mod lattice;
pub mod sampler;

mod numeric;

pub use error::{Error, Result};
pub use formulas::ModelParams;
pub use lattice::{HeightField, Region, Site};
