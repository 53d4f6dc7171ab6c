//! Squeezed-state dynamics of a periodically driven generalized harmonic
//! oscillator, its cyclic-state geometric phases and the nonadiabatic Hannay
//! angle.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod hannay;
pub mod integrator;
pub mod monodromy;
pub mod orbits;
pub mod params;

pub use error::{Error, Result};
