//! Joint probability distributions viewed as pure states.
//!
//! A distribution `π` on `X × Y` becomes the unit vector `ψ = Σ √π(x,y) |x⟩⊗|y⟩`.
//! Its reduced densities carry the classical marginals on the diagonal and
//! co-occurrence structure off it. The crate builds those densities several
//! ways, decodes their spectra, relates them to formal concepts and Loewner
//! entailment, and trains matrix product states on bitstring samples.

pub mod error;
pub mod linalg;
pub mod qprob;
pub mod empirical;
pub mod fca;
pub mod entailment;
pub mod mps;
pub mod io;

pub use error::{Error, Result};
pub use linalg::{Layout, Matrix, Svd, SymEigen};
