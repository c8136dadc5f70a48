//! Numerical tools for torus diffeomorphisms homotopic to Dehn twists:
//! vertical rotation intervals, mode-locking certificates, periodic orbits
//! and invariant manifolds.

pub mod error;
pub mod geometry;
pub mod map_model;
pub mod lecalvez;
pub mod manifolds;
pub mod periodic;
pub mod pseudoorbit;
pub mod rotation;
pub mod svg;

pub use error::{Error, Result};
pub use geometry::{Mat2, Point};
pub use map_model::{parse_lift, AnnulusMap, LiftSpec, TwistConstants};
