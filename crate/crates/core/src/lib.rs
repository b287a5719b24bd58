//! Exact discrete-Laplace sampling, privacy-credit accounting, a set of
//! differentially private mechanisms, and an exhaustive verifier that
//! checks their privacy claims on small universes.

pub mod budget;
pub mod dist;
pub mod mechanisms;
pub mod rational;
pub mod sampler;
pub mod verifier;
