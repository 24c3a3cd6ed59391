use serde::{Deserialize, Serialize};

use super::dynamics::MeanFieldDynamics;
use super::initial::InitialDensity;
use crate::force::{CutoffForce, MollifiedDrive};
use crate::transport::{w1_exact, DiscreteMeasure};
use crate::Result;

/// Outcome of a paired run started from two nearby initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n: usize,
    pub t_final: f64,
    pub w1_initial: f64,
    pub w1_final: f64,
    /// Lipschitz constant `L_K` of the kernel `K^N(z, z')`.
    pub lipschitz: f64,
    /// `exp(2 L_K t) W1(0)`.
    pub bound: f64,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.w1_final <= self.bound
    }
}

/// Over-estimate of the Lipschitz constant of
/// `K^N(z, z') = (v, F^N(x - x', v - v') + G^N(x, v))` integrated against a
/// measure of mass `mass`:
/// `1` (from `v`) `+ M0 sup q^N + M0 grad_v_bound + 1` (from `-v`) `+ Lip(g)`.
pub fn kernel_lipschitz(cf: &CutoffForce, md: &MollifiedDrive, mass: f64) -> f64 {
    1.0 + mass * cf.lipschitz_sup() + mass * cf.model.grad_v_bound() + 1.0 + md.field.lipschitz()
}

/// Runs ensembles drawn from `density_a` and `density_b` with the same seed
/// (so the draws are coupled) and compares them in W1 at `t = 0` and
/// `t = t_final`.
#[allow(clippy::too_many_arguments)]
pub fn dobrushin_pair_run(
    density_a: &InitialDensity,
    density_b: &InitialDensity,
    n: usize,
    seed: u64,
    cf: &CutoffForce,
    md: &MollifiedDrive,
    t_final: f64,
    dt: f64,
) -> Result<StabilityReport> {
    let mut a = density_a.sample(n, seed)?;
    let mut b = density_b.sample(n, seed)?;
    let w1_initial = w1_exact(
        &DiscreteMeasure::new(a.phase_vectors())?,
        &DiscreteMeasure::new(b.phase_vectors())?,
    )?
    .0;
    let dynamics = MeanFieldDynamics::new(*cf, md.clone());
    let stride = usize::MAX;
    dynamics.advance(&mut a, t_final, dt, stride, |_, _| Ok(()))?;
    dynamics.advance(&mut b, t_final, dt, stride, |_, _| Ok(()))?;
    let w1_final = w1_exact(
        &DiscreteMeasure::new(a.phase_vectors())?,
        &DiscreteMeasure::new(b.phase_vectors())?,
    )?
    .0;
    let lipschitz = kernel_lipschitz(cf, md, density_a.mass);
    Ok(StabilityReport {
        n,
        t_final,
        w1_initial,
        w1_final,
        lipschitz,
        bound: (2.0 * lipschitz * t_final).exp() * w1_initial,
    })
}
