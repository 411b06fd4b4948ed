#![no_std]
// `Float` is needed without std; with std linked (dev-dependencies) it shadows inherent methods.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod gibbs;
pub mod hamiltonian;
pub mod landscape;
pub mod linalg;
pub mod minimize;
pub mod parisi;
pub mod mixture;
pub mod optimizer;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use hamiltonian::{overlap, Realization, SpherePoint, SphericalHessian};
pub use mixture::{e_infinity, BandMixture, ConcavityReport, Covariance, Mixture};
