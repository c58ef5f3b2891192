//! Two-mode squeezing dynamics in power-law interacting spin-1/2 bilayers.
//!
//! The crate bundles four independent routes into the same physics:
//!
//! * [`dtwa`]: discrete truncated Wigner sampling and classical spin trajectories,
//!   with ensemble estimates of the squeezed and anti-squeezed quadrature variances,
//!   layer polarization, collective spin length and phase sensitivity.
//! * [`bogoliubov`]: the quadratic (Holstein-Primakoff) spectrum on a periodic lattice,
//!   unstable-mode classification and the collective-to-multimode boundary.
//! * [`exact`]: exact collective-spin dynamics at infinite range (with XY anisotropy)
//!   and full Schrodinger evolution of small ladders.
//! * [`scaling`]: finite-size scaling collapse with an interpolation cost function and
//!   critical-exponent extraction.
//!
//! [`harness`] ties these together into reproducible, cached experiment runs.

pub mod bogoliubov;
pub mod dtwa;
pub mod error;
pub mod exact;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod scaling;

pub use error::{Error, Result};
pub use lattice::{build_lattice, coupling_matrix, Boundary, CouplingSet, Geometry, LatticeSpec, SitePositions};
