//! Truncated matrix realizations of the Schiffer comparison operators on a
//! genus-zero cap complex: Grunsky matrices, the scattering matrix and its
//! unitarity diagnostics, overfare of harmonic data, harmonic measures, and
//! the holomorphic boundary value problem.

pub mod capmap;
pub mod corpus;
pub mod error;
pub mod grunsky;
pub mod hbvp;
pub mod scattering;
pub mod schiffer;
pub mod series;
pub mod spaces;

pub use capmap::{build_complex, CapComplex, ComplexSpec};
pub use series::TruncatedSeries;
