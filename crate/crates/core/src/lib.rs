//! Sound transmission loss of simply supported rectangular plates, with
//! dataset generation and machine-learning surrogates on top.
//!
//! The crate is organised bottom-up:
//!
//! - [`physics`]: plate and fluid types and closed-form plate quantities
//! - [`models`]: infinite-plate, finite-size correction and modal-summation simulators
//! - [`spectrum`], [`quadrature`]: frequency axes, band averaging, integration rules
//! - [`dataset`], [`preprocess`]: Latin hypercube designs, feature recipes, scalers
//! - [`surrogates`], [`sensitivity`], [`evaluation`]: regressors, importance maps, benchmarks

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod physics;
pub mod preprocess;
pub mod quadrature;
pub mod sensitivity;
pub mod spectrum;
pub mod surrogates;

pub use error::{Error, Result};
pub use models::{Simulator, StlModel};
pub use physics::{FluidSpec, PlateFile, PlateSpec, WaveIncidence};
pub use spectrum::{BandScheme, FrequencyGrid, StlCurve};
