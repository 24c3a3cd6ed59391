//! Mean-field characteristic flow for an ensemble of equally weighted particles.

mod dynamics;
mod ensemble;
mod grid;
mod initial;
mod snapshot;
mod stability;

pub use dynamics::{MeanFieldDynamics, PhaseRate};
pub use ensemble::{ParticleEnsemble, PhasePoint};
pub use grid::{CellEntry, NeighborGrid};
pub use initial::{DensityKind, InitialDensity, PhaseBox};
pub use snapshot::{Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use stability::{dobrushin_pair_run, kernel_lipschitz, StabilityReport};
