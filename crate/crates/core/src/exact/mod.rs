//! Exact quantum dynamics: collective spins at infinite range and full evolution of
//! small ladders. Both serve as oracles for the trajectory ensemble.

pub mod collective;
pub mod krylov;
pub mod small;

pub use collective::{
    build_hamiltonian, covariance, covariance_scan, evolve, minimal_variance, tms_reference, AnisotropicHamiltonian,
    CollectiveState, CovarianceReport, MinimalVariance,
};
pub use krylov::{Krylov, KrylovOptions, SparseSymmetric};
pub use small::{exact_small_system, small_system_hamiltonian};
