//! Particle solver for the two-dimensional mean-field kinetic equation with a
//! bounded, finite-range, non-Lipschitz interaction force.
//!
//! The crate is organised around the cut-off characteristic flow:
//!
//! * [`force`] evaluates the interaction force, its cut-off near the origin,
//!   the mollified drive and the constants that bound them.
//! * [`flow`] samples initial data, integrates the particle system with RK4
//!   and tracks per-particle log-Jacobians.
//! * [`density`] reconstructs the phase-space density on a 4-d grid.
//! * [`transport`] computes exact Wasserstein-1 distances between empirical
//!   measures.
//! * [`diagnostics`] records the conserved and bounded functionals and checks
//!   them against certified envelopes.

pub mod density;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod force;
pub mod quadrature;
pub mod summation;
pub mod transport;
mod vec2;

pub use density::{DensityEstimate, PhaseGrid4D};
pub use diagnostics::{BoundCertificates, CertificateOutcome, DiagnosticRecord};
pub use error::{KinflowError, Result};
pub use flow::{
    InitialDensity, MeanFieldDynamics, NeighborGrid, ParticleEnsemble, PhasePoint, Snapshot,
};
pub use force::{BumpProfile, CutoffForce, DEFAULT_THETA, DriveField, ForceModel, MollifiedDrive, ProfileKind};
pub use transport::{CouplingPlan, DiscreteMeasure};
pub use vec2::{Mat2, Vec2};
