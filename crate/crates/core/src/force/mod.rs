//! Interaction force, its cut-off near the origin, and the mollified drive.

mod bump;
mod cutoff;
mod drive;
mod model;

pub use bump::BumpProfile;
pub use cutoff::{CutoffForce, DEFAULT_THETA};
pub use drive::{DriveField, MollifiedDrive, DEFAULT_QUADRATURE_ORDER};
pub use model::{ForceModel, ProfileKind};

use crate::flow::PhasePoint;
use crate::Vec2;

/// Velocity divergence of the full mean-field acceleration at `points[i]`,
/// `div_v(F^N * mu + G^N)`, for uniform particle weight `weight`.
///
/// Every `j` is visited in ascending order; pairs outside the force support
/// contribute exact zeros.
pub fn div_v_field(
    cf: &CutoffForce,
    md: &MollifiedDrive,
    points: &[PhasePoint],
    weight: f64,
    i: usize,
) -> f64 {
    let zi = points[i];
    let mut trace = 0.0;
    for zj in points {
        trace += cf.trace_grad_v(zi.x - zj.x, zi.v - zj.v);
    }
    weight * trace + md.div_v()
}

/// Direction factor of the cut-off force: `x/|x|` outside `r_cut`,
/// `N^theta x` inside.
#[inline]
pub(crate) fn branch_direction(x: Vec2, r: f64, r_cut: f64, scale: f64) -> Vec2 {
    if r >= r_cut {
        x * (1.0 / r)
    } else {
        x * scale
    }
}
