//! Block-decomposed SALE hydrodynamics.
//!
//! The kernel layer ([`grid`], [`geometry`], [`halo`]) owns block-local
//! storage and ghost exchange. The application layer ([`eos`], [`hydro`],
//! [`remap`], [`problems`]) advances the multi-material Lagrangian cycle and
//! the optional Eulerian remap. [`oracles`] holds the reference solutions and
//! audits used for verification.

pub mod eos;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod halo;
pub mod hydro;
pub mod oracles;
pub mod problems;
pub mod remap;

pub use error::{Result, SaleError};
