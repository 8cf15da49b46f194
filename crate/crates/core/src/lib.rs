//! Random unitary band operators `U = D S` on periodic lattices.

pub mod band;
pub mod banded_lu;
pub mod constants;
pub mod disorder;
pub mod distribution;
pub mod error;
pub mod fit;
pub mod kernel_lemma;
pub mod lattice;
pub mod localization;
pub mod moments;
pub mod operator;
pub mod parallel;
pub mod params;
pub mod quadrature;
pub mod resolvent;
pub mod seed;
pub mod spectral;

pub use error::{Error, Result};
