//! Propagators of a damped quantum harmonic oscillator coupled to a Drude
//! reservoir, represented as Gaussian phase-space channels, with brute-force
//! Fock-space and finite-bath oracles to check them.

pub mod error;
pub mod mat2;
pub mod params;
pub mod phase_space;
pub mod quadrature;
pub mod exact;
pub mod inner;
pub mod outer;
pub mod wei_norman;
pub mod sampling;
pub mod oracles;

pub use error::{Error, Result};
pub use mat2::{Mat2, Sym2};
pub use params::PhysParams;
pub use phase_space::{GaussianChannel, GaussianState, GeneratorCoeffs};

/// Crate version, recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
