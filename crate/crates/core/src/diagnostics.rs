//! Per-record functionals (mass, kinetic energy, second moment, density
//! growth exponent) and the derived envelopes they must respect.
//!
//! With `a_i = w sum_j F^N + (j * g)(x_i)` and `|a_i| <= f_inf M0 + sup|g|`,
//! Cauchy-Schwarz gives `dE/dt = w sum v_i.a_i - 2E <= A sqrt(E) - 2E` where
//! `A = (f_inf M0 + sup|g|) sqrt(2 M0)`. The right side is negative above
//! `(A/2)^2`, so `E(t) <= max(E0, (A/2)^2)`. Likewise
//! `dm2/dt = 2 w sum x_i.v_i <= m2 + 2E` gives `m2(t) <= (m2(0) + 2 E_cap) e^t`,
//! and `dL_i/dt >= -(grad_v_bound M0 + 2)` bounds the density growth exponent
//! `-L_i(t)` by `C_max t`.

use serde::{Deserialize, Serialize};

use crate::flow::ParticleEnsemble;
use crate::force::{CutoffForce, MollifiedDrive};
use crate::summation::pairwise_sum_by;

/// Relative slack on the energy and second-moment envelopes.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-2;
/// Absolute slack on the maximum-principle exponent.
pub const EXPONENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub second_moment: f64,
    /// `max_i (-L_i(t))`.
    pub sup_log_growth: f64,
    pub sup_density: Option<f64>,
}

/// Functionals of the current ensemble, summed pairwise.
pub fn record(e: &ParticleEnsemble) -> DiagnosticRecord {
    let pts = e.points();
    let w = e.weight();
    let kinetic = w * pairwise_sum_by(pts.len(), &|i| 0.5 * pts[i].v.norm_sq());
    let second_moment = w * pairwise_sum_by(pts.len(), &|i| pts[i].x.norm_sq());
    let sup_log_growth = e
        .log_jacobian()
        .iter()
        .fold(f64::NEG_INFINITY, |m, &l| m.max(-l));
    DiagnosticRecord {
        t: e.time(),
        mass: e.total_mass(),
        kinetic,
        second_moment,
        sup_log_growth,
        sup_density: None,
    }
}

/// Envelope constants for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificates {
    pub mass: f64,
    pub f_inf_bound: f64,
    pub grad_v_bound: f64,
    pub sup_g: f64,
    pub initial_energy: f64,
    pub initial_second_moment: f64,
    /// Energy forcing constant `A`.
    pub energy_forcing: f64,
    /// `max(E0, (A/2)^2)`.
    pub energy_cap: f64,
    /// `grad_v_bound M0 + 2`.
    pub growth_exponent: f64,
}

impl BoundCertificates {
    pub fn from_constants(
        mass: f64,
        f_inf_bound: f64,
        grad_v_bound: f64,
        sup_g: f64,
        initial_energy: f64,
        initial_second_moment: f64,
    ) -> Self {
        let energy_forcing = (f_inf_bound * mass + sup_g) * (2.0 * mass).sqrt();
        let half = energy_forcing / 2.0;
        BoundCertificates {
            mass,
            f_inf_bound,
            grad_v_bound,
            sup_g,
            initial_energy,
            initial_second_moment,
            energy_forcing,
            energy_cap: initial_energy.max(half * half),
            growth_exponent: grad_v_bound * mass + 2.0,
        }
    }

    /// Constants for a run with the given kernels, starting from `initial`.
    pub fn for_run(cf: &CutoffForce, md: &MollifiedDrive, initial: &DiagnosticRecord) -> Self {
        Self::from_constants(
            initial.mass,
            cf.model.f_inf_bound(),
            cf.model.grad_v_bound(),
            md.sup_g(),
            initial.kinetic,
            initial.second_moment,
        )
    }

    /// Overrides `E_cap` (debugging the failure path).
    pub fn with_energy_cap(mut self, cap: f64) -> Self {
        self.energy_cap = cap;
        self
    }

    pub fn second_moment_envelope(&self, t: f64) -> f64 {
        (self.initial_second_moment + 2.0 * self.energy_cap) * t.exp()
    }

    pub fn growth_envelope(&self, t: f64) -> f64 {
        self.growth_exponent * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateOutcome {
    pub name: String,
    pub passed: bool,
    /// Largest `measured / envelope` (ratio certificates) or
    /// `measured - envelope` (exponent certificate) over the trajectory.
    pub worst: f64,
    pub worst_t: f64,
}

fn ratio_check<F: Fn(&DiagnosticRecord) -> (f64, f64)>(
    name: &str,
    trajectory: &[DiagnosticRecord],
    f: F,
) -> CertificateOutcome {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_t = f64::NAN;
    let mut passed = !trajectory.is_empty();
    for r in trajectory {
        let (value, envelope) = f(r);
        let ratio = if envelope > 0.0 {
            value / envelope
        } else if value <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if !(ratio <= 1.0 + CERTIFICATE_TOLERANCE) {
            passed = false;
        }
        if ratio > worst || worst_t.is_nan() {
            worst = ratio;
            worst_t = r.t;
        }
    }
    CertificateOutcome {
        name: name.to_string(),
        passed,
        worst,
        worst_t,
    }
}

/// `E(t) <= E_cap (1 + 1e-2)` at every record.
pub fn certify_energy(trajectory: &[DiagnosticRecord], certs: &BoundCertificates) -> CertificateOutcome {
    ratio_check("energy", trajectory, |r| (r.kinetic, certs.energy_cap))
}

/// `m2(t) <= (m2(0) + 2 E_cap) e^t (1 + 1e-2)` at every record.
pub fn certify_second_moment(trajectory: &[DiagnosticRecord], certs: &BoundCertificates) -> CertificateOutcome {
    ratio_check("second_moment", trajectory, |r| {
        (r.second_moment, certs.second_moment_envelope(r.t))
    })
}

/// `max_i(-L_i(t)) <= C_max t + 1e-6` at every record.
pub fn certify_maximum_principle(trajectory: &[DiagnosticRecord], certs: &BoundCertificates) -> CertificateOutcome {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_t = f64::NAN;
    let mut passed = !trajectory.is_empty();
    for r in trajectory {
        let excess = r.sup_log_growth - certs.growth_envelope(r.t);
        if !(excess <= EXPONENT_TOLERANCE) {
            passed = false;
        }
        if excess > worst || worst_t.is_nan() {
            worst = excess;
            worst_t = r.t;
        }
    }
    CertificateOutcome {
        name: "maximum_principle".into(),
        passed,
        worst,
        worst_t,
    }
}

/// Mass bit-identical to the first record everywhere.
pub fn certify_mass(trajectory: &[DiagnosticRecord]) -> CertificateOutcome {
    let m0 = trajectory.first().map(|r| r.mass);
    let mut passed = m0.is_some();
    let mut worst = 0.0f64;
    let mut worst_t = trajectory.first().map_or(f64::NAN, |r| r.t);
    if let Some(m0) = m0 {
        for r in trajectory {
            if r.mass.to_bits() != m0.to_bits() {
                passed = false;
                let d = (r.mass - m0).abs();
                if d > worst {
                    worst = d;
                    worst_t = r.t;
                }
            }
        }
    }
    CertificateOutcome {
        name: "mass".into(),
        passed,
        worst,
        worst_t,
    }
}

/// Runs all four certificates.
pub fn certify_all(trajectory: &[DiagnosticRecord], certs: &BoundCertificates) -> Vec<CertificateOutcome> {
    vec![
        certify_mass(trajectory),
        certify_energy(trajectory, certs),
        certify_second_moment(trajectory, certs),
        certify_maximum_principle(trajectory, certs),
    ]
}

/// Envelope of `dE/dt = A sqrt(E) - 2E` from `E(0) = e0`, by RK4 with `steps`
/// steps up to `t`. Used as a reference curve in tests and reports.
pub fn energy_envelope(a: f64, e0: f64, t: f64, steps: usize) -> f64 {
    let f = |e: f64| a * e.max(0.0).sqrt() - 2.0 * e;
    let h = t / steps as f64;
    let mut e = e0;
    for _ in 0..steps {
        let k1 = f(e);
        let k2 = f(e + 0.5 * h * k1);
        let k3 = f(e + 0.5 * h * k2);
        let k4 = f(e + h * k3);
        e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{ParticleEnsemble, PhasePoint};
    use crate::Vec2;

    fn rec(t: f64, kinetic: f64, m2: f64, growth: f64) -> DiagnosticRecord {
        DiagnosticRecord {
            t,
            mass: 1.0,
            kinetic,
            second_moment: m2,
            sup_log_growth: growth,
            sup_density: None,
        }
    }

    #[test]
    fn kinetic_energy_of_a_single_particle() {
        let p = PhasePoint::new(Vec2::ZERO, Vec2::new(3.0, 4.0));
        let e = ParticleEnsemble::new(vec![p], 1.0).unwrap();
        assert_eq!(record(&e).kinetic, 12.5);
    }

    #[test]
    fn resting_particles_have_zero_energy() {
        let pts = vec![PhasePoint::new(Vec2::new(1.0, 2.0), Vec2::ZERO); 5];
        let e = ParticleEnsemble::new(pts, 2.0).unwrap();
        let r = record(&e);
        assert_eq!(r.kinetic, 0.0);
        assert_eq!(r.second_moment, 10.0);
        assert_eq!(r.sup_log_growth, 0.0);
    }

    #[test]
    fn decoupled_constants() {
        let c = BoundCertificates::from_constants(1.0, 0.0, 0.0, 0.0, 0.7, 0.2);
        assert_eq!(c.energy_forcing, 0.0);
        assert_eq!(c.energy_cap, 0.7);
        assert_eq!(c.growth_exponent, 2.0);
    }

    #[test]
    fn energy_envelope_decays_toward_the_fixed_point_from_above() {
        // E0 > (A/2)^2: the envelope decreases monotonically to (A/2)^2.
        let a = 1.0;
        let e0 = 2.0;
        let mut prev = e0;
        for k in 1..=20 {
            let e = energy_envelope(a, e0, 0.25 * k as f64, 200 * k);
            assert!(e < prev);
            assert!(e > 0.25);
            prev = e;
        }
        assert!((energy_envelope(a, e0, 20.0, 20_000) - 0.25).abs() < 1e-6);
        let c = BoundCertificates::from_constants(1.0, 0.5, 0.0, 0.2, e0, 0.0);
        assert_eq!(c.energy_cap, e0);
    }

    #[test]
    fn certificates_detect_violations() {
        let c = BoundCertificates::from_constants(1.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        let good = [rec(0.0, 1.0, 1.0, 0.0), rec(1.0, 0.5, 2.0, 2.0)];
        assert!(certify_energy(&good, &c).passed);
        assert!(certify_second_moment(&good, &c).passed);
        assert!(certify_maximum_principle(&good, &c).passed);
        assert!(certify_mass(&good).passed);

        let bad = [rec(0.0, 1.0, 1.0, 0.0), rec(1.0, 1.2, 9.0, 2.1)];
        assert!(!certify_energy(&bad, &c).passed);
        assert!(!certify_second_moment(&bad, &c).passed);
        assert!(!certify_maximum_principle(&bad, &c).passed);
        let mut drift = good;
        drift[1].mass = 1.0 + f64::EPSILON;
        assert!(!certify_mass(&drift).passed);
        assert!(!certify_energy(&[], &c).passed);
    }

    #[test]
    fn loosening_constants_keeps_passing_runs_passing() {
        let traj = [rec(0.0, 1.0, 1.0, 0.0), rec(0.5, 1.005, 1.5, 0.9), rec(1.0, 0.9, 2.5, 1.8)];
        let tight = BoundCertificates::from_constants(1.0, 0.1, 0.0, 0.1, 1.0, 1.0);
        let loose = BoundCertificates::from_constants(1.0, 0.5, 0.3, 0.4, 1.0, 1.0);
        for (t, l) in certify_all(&traj, &tight).iter().zip(certify_all(&traj, &loose)) {
            assert!(t.passed, "{t:?}");
            assert!(l.passed, "{l:?}");
            assert!(l.worst <= t.worst);
        }
    }
}
