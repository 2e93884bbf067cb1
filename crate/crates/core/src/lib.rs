//! Executable level-tests for the classical Ergodic Hierarchy and its quantum
//! counterpart: ergodic, mixing, Kolmogorov and Bernoulli.
//!
//! The crate is organised by level of description:
//!
//! - [`classical`]: exact measure-preserving maps on the circle and the torus,
//!   set and density correlations, and the four classical level-tests.
//! - [`hilbert`]: finite-dimensional states, observables and unitary steps.
//! - [`hierarchy`]: the four quantum level-tests on a stroboscopic trajectory.
//! - [`rotator`]: the quantum kicked rotator.
//! - [`dephasing`]: Cesaro cancellation of interference terms for a discrete
//!   spectrum, and Riemann-Lebesgue suppression for a quasi-continuous one.
//! - [`wigner`]: discrete Weyl-Wigner symbols on an odd-dimensional torus.
//! - [`harness`]: configuration, seeded runs and CSV/report emission.
//! - [`verdict`]: the per-level outcome shared by both hierarchies.

pub mod classical;
pub mod dephasing;
pub mod error;
pub mod harness;
pub mod hierarchy;
pub mod hilbert;
pub mod rotator;
pub mod wigner;
pub mod stats;
pub mod verdict;

pub use error::{Error, Result};
