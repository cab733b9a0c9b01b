//! Spectra of one-dimensional continuum Fibonacci Schrödinger operators.
//!
//! The toolkit computes finite-level spectral approximants through the
//! Fibonacci trace map, forms Minkowski sums to model separable
//! multidimensional spectra, and checks two structural properties on
//! truncations: a gap-free tail of `Σ + Σ` at high energy, certified by a
//! thickness argument for sums of Cantor sets, and thin, small-dimensional
//! structure at low energy for strong coupling.

pub mod bethe;
pub mod cantor;
pub mod error;
pub mod exec;
pub mod interval;
pub mod low_energy;
pub mod serde_ext;
pub mod spectrum;
pub mod trace;
pub mod transfer;

pub use bethe::{BSCertificate, WindowFamily};
pub use cantor::{DimensionEstimate, ThicknessReport};
pub use error::{Error, Result};
pub use interval::{Interval, IntervalSet};
pub use low_energy::LowEnergyReport;
pub use spectrum::{SpectrumApproximant, Variable};
pub use trace::{TracePoint, TraceSequence};
pub use transfer::{Mat2, Model, Piece, Segment};
