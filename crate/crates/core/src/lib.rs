pub mod band_model;
pub mod banded;
pub mod chebyshev;
pub mod diagrams;
pub mod error;
pub mod fourier_emb;
pub mod path_oracle;
pub mod quadrature;
pub mod regularizer;
pub mod rng;
pub mod spectral_estimator;
pub mod stats;

pub use error::{Error, Result};
