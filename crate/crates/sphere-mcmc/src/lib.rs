//! Markov chain Monte Carlo on unit spheres with angular central Gaussian
//! (ACG) reference measures.
//!
//! The crate provides the sphere/ACG primitives, ambient-space pCN and
//! elliptical slice samplers together with their reprojected push-forwards
//! onto the sphere, two manifold random-walk baselines, chain diagnostics,
//! and the level-set inversion benchmark problem the samplers are tested on.

pub mod arrayfile;
pub mod diagnostics;
pub mod error;
pub mod gaussian;
pub mod kernels;
pub mod levelset;
pub mod sphere;

pub use error::{Error, Result};
