pub mod bounds;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod extension;
pub mod io;
pub mod kernel;
pub mod params;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use params::{FractionalOperator, ModelParams};
pub use spectral::{Grid, RealField, SpectralField};
