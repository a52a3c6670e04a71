//! Pseudo-differential calculus for a non-self-adjoint boundary problem:
//! `-i d/dx` on (0, 1) with the condition `f(1) = h f(0)`.
//!
//! The eigenfunctions `u_j` and the adjoint family `v_j` form a
//! biorthogonal Riesz basis. Symbols are quantized against that basis
//! instead of the Fourier exponentials.

pub mod analysis;
pub mod calculus;
pub mod error;
pub mod fft;
pub mod io;
pub mod model;
pub mod numeric;
pub mod symbols;
pub mod transform;
pub mod weights;

pub use analysis::{SobolevConvention, SobolevMode, SolveMethod};
pub use calculus::{OperatorMatrix, ParametrixOptions, ParametrixResult};
pub use error::{Error, Result};
pub use model::{EigenData, FrequencyWindow, ModelSpec, ModelSystem, SpatialGrid};
pub use symbols::{SpatialFactor, SpatialRegularity, SymbolFamily, SymbolGrid};
pub use transform::{CoefficientVector, GridFunction, Transform, TransformKind};
pub use weights::{WeightFunction, WeightKind};
