//! Weighted geometry of hypersurfaces in Euclidean space with a density
//! `e^{-f}`: curvature of weighted ambients, hypersurface geometry on
//! parametrized patches and triangle meshes, conformal-change identities,
//! and the weighted stability spectrum.

pub mod ambient;
pub mod catalog;
pub mod conformal;
pub mod error;
pub mod hypersurface;
pub mod jet;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
