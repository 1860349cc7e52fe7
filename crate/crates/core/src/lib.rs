//! Numerical study of a single bosonic mode with pair injection and a
//! Kerr-type interaction, `H = a†a − (ε/2)(a†² + a²) + a†²a²/(2L)`.

pub mod error;
pub mod exec;
pub mod fock;
pub mod gaussian;
pub mod model;
pub mod observables;
pub mod operator;
pub mod positive_p;
pub mod scaling;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
