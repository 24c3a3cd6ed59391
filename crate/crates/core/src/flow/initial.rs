use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use libm::erf;

use super::ensemble::{ParticleEnsemble, PhasePoint};
use crate::{KinflowError, Result};

/// Axis-aligned box in phase space, coordinates ordered `(x1, x2, v1, v2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl PhaseBox {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Result<Self> {
        for k in 0..4 {
            if !(lo[k].is_finite() && hi[k].is_finite() && hi[k] > lo[k]) {
                return Err(KinflowError::invalid("density.box", format!("axis {k}: need lo < hi, both finite")));
            }
        }
        Ok(PhaseBox { lo, hi })
    }

    pub fn volume(&self) -> f64 {
        (0..4).map(|k| self.hi[k] - self.lo[k]).product()
    }

    pub fn contains(&self, z: &[f64; 4]) -> bool {
        (0..4).all(|k| z[k] >= self.lo[k] && z[k] <= self.hi[k])
    }

    fn intersects(&self, other: &PhaseBox) -> bool {
        (0..4).all(|k| self.lo[k] < other.hi[k] && other.lo[k] < self.hi[k])
    }

    fn union(&self, other: &PhaseBox) -> PhaseBox {
        let mut b = *self;
        for k in 0..4 {
            b.lo[k] = b.lo[k].min(other.lo[k]);
            b.hi[k] = b.hi[k].max(other.hi[k]);
        }
        b
    }

    fn translated(&self, shift: [f64; 4]) -> PhaseBox {
        let mut b = *self;
        for k in 0..4 {
            b.lo[k] += shift[k];
            b.hi[k] += shift[k];
        }
        b
    }

    /// `int_box z_k^2 dz / vol` for axis `k`.
    fn mean_square(&self, k: usize) -> f64 {
        let (a, b) = (self.lo[k], self.hi[k]);
        (a * a + a * b + b * b) / 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityKind {
    /// Constant density on a box.
    Uniform { region: PhaseBox },
    /// Product of normals, each truncated to `mean +- truncation * sigma`.
    TruncatedGaussian {
        mean: [f64; 4],
        x_sigma: f64,
        v_sigma: f64,
        truncation: f64,
    },
    /// Mixture of two uniform boxes; `fraction` of the mass sits in `first`.
    TwoBump {
        first: PhaseBox,
        second: PhaseBox,
        fraction: f64,
    },
}

/// Nonnegative, bounded, compactly supported initial datum `f0` with its
/// analytic mass, sup, kinetic energy and second moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDensity {
    pub kind: DensityKind,
    pub mass: f64,
}

impl InitialDensity {
    pub fn new(kind: DensityKind, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(KinflowError::invalid("density.mass", "must be positive and finite"));
        }
        match kind {
            DensityKind::Uniform { region } => {
                PhaseBox::new(region.lo, region.hi)?;
            }
            DensityKind::TruncatedGaussian {
                mean,
                x_sigma,
                v_sigma,
                truncation,
            } => {
                if !mean.iter().all(|m| m.is_finite()) {
                    return Err(KinflowError::invalid("density.mean", "must be finite"));
                }
                for (name, s) in [("density.x_sigma", x_sigma), ("density.v_sigma", v_sigma)] {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(KinflowError::invalid(name, "must be positive"));
                    }
                }
                // An untruncated Gaussian has no compact support and no
                // usable rejection envelope.
                if !(truncation > 0.0 && truncation.is_finite()) {
                    return Err(KinflowError::invalid(
                        "density.truncation",
                        "must be positive and finite (density must be compactly supported)",
                    ));
                }
            }
            DensityKind::TwoBump {
                first,
                second,
                fraction,
            } => {
                PhaseBox::new(first.lo, first.hi)?;
                PhaseBox::new(second.lo, second.hi)?;
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(KinflowError::invalid("density.fraction", "must lie in (0, 1)"));
                }
            }
        }
        Ok(InitialDensity { kind, mass })
    }

    pub fn uniform(region: PhaseBox, mass: f64) -> Result<Self> {
        Self::new(DensityKind::Uniform { region }, mass)
    }

    pub fn truncated_gaussian(mean: [f64; 4], x_sigma: f64, v_sigma: f64, truncation: f64, mass: f64) -> Result<Self> {
        Self::new(
            DensityKind::TruncatedGaussian {
                mean,
                x_sigma,
                v_sigma,
                truncation,
            },
            mass,
        )
    }

    pub fn two_bump(first: PhaseBox, second: PhaseBox, fraction: f64, mass: f64) -> Result<Self> {
        Self::new(
            DensityKind::TwoBump {
                first,
                second,
                fraction,
            },
            mass,
        )
    }

    /// Bounding box of the support.
    pub fn support(&self) -> PhaseBox {
        match self.kind {
            DensityKind::Uniform { region } => region,
            DensityKind::TruncatedGaussian {
                mean,
                x_sigma,
                v_sigma,
                truncation,
            } => {
                let mut b = PhaseBox { lo: mean, hi: mean };
                for k in 0..4 {
                    let s = if k < 2 { x_sigma } else { v_sigma };
                    b.lo[k] -= truncation * s;
                    b.hi[k] += truncation * s;
                }
                b
            }
            DensityKind::TwoBump { first, second, .. } => first.union(&second),
        }
    }

    /// `f0(z)`, normalised to total mass `M0`.
    pub fn pdf(&self, z: PhasePoint) -> f64 {
        let z = z.to_array();
        match self.kind {
            DensityKind::Uniform { region } => {
                if region.contains(&z) {
                    self.mass / region.volume()
                } else {
                    0.0
                }
            }
            DensityKind::TruncatedGaussian {
                mean,
                x_sigma,
                v_sigma,
                truncation,
            } => {
                let norm = truncated_normal_mass(truncation);
                let mut p = self.mass;
                for k in 0..4 {
                    let s = if k < 2 { x_sigma } else { v_sigma };
                    let t = (z[k] - mean[k]) / s;
                    if t.abs() > truncation {
                        return 0.0;
                    }
                    p *= (-0.5 * t * t).exp() / (s * (2.0 * PI).sqrt() * norm);
                }
                p
            }
            DensityKind::TwoBump {
                first,
                second,
                fraction,
            } => {
                let mut p = 0.0;
                if first.contains(&z) {
                    p += fraction * self.mass / first.volume();
                }
                if second.contains(&z) {
                    p += (1.0 - fraction) * self.mass / second.volume();
                }
                p
            }
        }
    }

    /// `||f0||_inf`.
    pub fn sup(&self) -> f64 {
        match self.kind {
            DensityKind::Uniform { region } => self.mass / region.volume(),
            DensityKind::TruncatedGaussian {
                x_sigma,
                v_sigma,
                truncation,
                ..
            } => {
                let norm = truncated_normal_mass(truncation);
                let c = (2.0 * PI).sqrt() * norm;
                self.mass / (c * x_sigma).powi(2) / (c * v_sigma).powi(2)
            }
            DensityKind::TwoBump {
                first,
                second,
                fraction,
            } => {
                let a = fraction * self.mass / first.volume();
                let b = (1.0 - fraction) * self.mass / second.volume();
                if first.intersects(&second) {
                    a + b
                } else {
                    a.max(b)
                }
            }
        }
    }

    /// Per-axis `int z_k^2 f0 / M0`.
    fn axis_second_moment(&self, k: usize) -> f64 {
        match self.kind {
            DensityKind::Uniform { region } => region.mean_square(k),
            DensityKind::TruncatedGaussian {
                mean,
                x_sigma,
                v_sigma,
                truncation,
            } => {
                let s = if k < 2 { x_sigma } else { v_sigma };
                mean[k] * mean[k] + s * s * truncated_normal_variance_factor(truncation)
            }
            DensityKind::TwoBump {
                first,
                second,
                fraction,
            } => fraction * first.mean_square(k) + (1.0 - fraction) * second.mean_square(k),
        }
    }

    /// Kinetic energy `E0 = int |v|^2/2 f0`.
    pub fn energy(&self) -> f64 {
        0.5 * self.mass * (self.axis_second_moment(2) + self.axis_second_moment(3))
    }

    /// Second moment `m2(0) = int |x|^2 f0`.
    pub fn second_moment(&self) -> f64 {
        self.mass * (self.axis_second_moment(0) + self.axis_second_moment(1))
    }

    /// Mean of `z / M0`.
    pub fn mean(&self) -> [f64; 4] {
        match self.kind {
            DensityKind::Uniform { region } => {
                std::array::from_fn(|k| 0.5 * (region.lo[k] + region.hi[k]))
            }
            DensityKind::TruncatedGaussian { mean, .. } => mean,
            DensityKind::TwoBump {
                first,
                second,
                fraction,
            } => std::array::from_fn(|k| {
                fraction * 0.5 * (first.lo[k] + first.hi[k])
                    + (1.0 - fraction) * 0.5 * (second.lo[k] + second.hi[k])
            }),
        }
    }

    /// The same density translated by `shift` in phase space.
    pub fn shifted(&self, shift: [f64; 4]) -> InitialDensity {
        let kind = match self.kind {
            DensityKind::Uniform { region } => DensityKind::Uniform {
                region: region.translated(shift),
            },
            DensityKind::TruncatedGaussian {
                mean,
                x_sigma,
                v_sigma,
                truncation,
            } => DensityKind::TruncatedGaussian {
                mean: std::array::from_fn(|k| mean[k] + shift[k]),
                x_sigma,
                v_sigma,
                truncation,
            },
            DensityKind::TwoBump {
                first,
                second,
                fraction,
            } => DensityKind::TwoBump {
                first: first.translated(shift),
                second: second.translated(shift),
                fraction,
            },
        };
        InitialDensity { kind, mass: self.mass }
    }

    /// Draws `n` i.i.d. points from `f0 / M0` by rejection against the sup
    /// on the support box. The returned ensemble retains its initial points.
    pub fn sample(&self, n: usize, seed: u64) -> Result<ParticleEnsemble> {
        if n == 0 {
            return Err(KinflowError::invalid("n_particles", "must be at least 1"));
        }
        let sup = self.sup();
        if !(sup.is_finite() && sup > 0.0) {
            return Err(KinflowError::invalid("density", "sup of the density is not finite"));
        }
        let support = self.support();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        while points.len() < n {
            let z: [f64; 4] = std::array::from_fn(|k| rng.random_range(support.lo[k]..support.hi[k]));
            let p = PhasePoint::from_array(z);
            let f = self.pdf(p);
            let u: f64 = rng.random();
            if f >= sup || u * sup < f {
                points.push(p);
            }
        }
        Ok(ParticleEnsemble::new(points, self.mass)?.retain_initial())
    }
}

/// `P(|Z| <= c)` for a standard normal.
fn truncated_normal_mass(c: f64) -> f64 {
    erf(c / SQRT_2)
}

/// `Var / sigma^2` of a normal truncated symmetrically at `+- c sigma`.
fn truncated_normal_variance_factor(c: f64) -> f64 {
    let phi = (-0.5 * c * c).exp() / (2.0 * PI).sqrt();
    1.0 - 2.0 * c * phi / truncated_normal_mass(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn unit_box() -> PhaseBox {
        PhaseBox::new([0.0; 4], [1.0; 4]).unwrap()
    }

    #[test]
    fn uniform_moments() {
        let d = InitialDensity::uniform(unit_box(), 1.0).unwrap();
        assert_eq!(d.sup(), 1.0);
        assert!((d.energy() - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.second_moment() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_sample_mean_within_three_sigma() {
        let d = InitialDensity::uniform(unit_box(), 1.0).unwrap();
        let n = 10_000;
        let e = d.sample(n, 42).unwrap();
        let sigma = (1.0 / 12.0f64 / n as f64).sqrt();
        for axis in 0..2 {
            let m: f64 = e.points().iter().map(|p| p.to_array()[axis]).sum::<f64>() / n as f64;
            assert!((m - 0.5).abs() < 3.0 * sigma, "axis {axis}: {m}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = InitialDensity::truncated_gaussian([0.0, 1.0, -0.5, 0.5], 0.7, 0.3, 2.5, 1.0).unwrap();
        let a = d.sample(500, 7).unwrap();
        let b = d.sample(500, 7).unwrap();
        assert_eq!(a.points(), b.points());
        let c = d.sample(500, 8).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn truncated_gaussian_energy_matches_quadrature_oracle() {
        let (sx, sv, c) = (0.7, 0.4, 2.0);
        let mean = [0.3, -0.2, 0.5, 0.1];
        let d = InitialDensity::truncated_gaussian(mean, sx, sv, c, 1.0).unwrap();
        // 1-d oracle: E[z^2] of the truncated normal by direct quadrature.
        let second = |m: f64, s: f64| {
            let w = |z: f64| (-0.5 * ((z - m) / s).powi(2)).exp();
            let num = integrate(|z| z * z * w(z), m - c * s, m + c * s, 32, 16);
            let den = integrate(w, m - c * s, m + c * s, 32, 16);
            num / den
        };
        let e_oracle = 0.5 * (second(mean[2], sv) + second(mean[3], sv));
        let m2_oracle = second(mean[0], sx) + second(mean[1], sx);
        assert!((d.energy() - e_oracle).abs() < 1e-12);
        assert!((d.second_moment() - m2_oracle).abs() < 1e-12);

        let n = 20_000;
        let e = d.sample(n, 11).unwrap();
        let samples: Vec<f64> = e.points().iter().map(|p| 0.5 * p.v.norm_sq()).collect();
        let mean_e = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean_e).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean_e - e_oracle).abs() < 3.0 * se, "{mean_e} vs {e_oracle} (se {se})");
    }

    #[test]
    fn truncated_gaussian_pdf_integrates_to_mass() {
        let d = InitialDensity::truncated_gaussian([0.0; 4], 1.0, 1.0, 1.5, 2.0).unwrap();
        // product structure: check one axis and the sup.
        let axis = integrate(
            |t| (-0.5 * t * t).exp() / ((2.0 * PI).sqrt() * truncated_normal_mass(1.5)),
            -1.5,
            1.5,
            16,
            16,
        );
        assert!((axis - 1.0).abs() < 1e-12, "{axis}");
        let at_mean = d.pdf(PhasePoint::default());
        assert!((at_mean - d.sup()).abs() < 1e-12 * d.sup());
    }

    #[test]
    fn two_bump_sup_and_moments() {
        let a = PhaseBox::new([0.0; 4], [1.0; 4]).unwrap();
        let b = PhaseBox::new([2.0, 0.0, 0.0, 0.0], [3.0, 1.0, 1.0, 1.0]).unwrap();
        let d = InitialDensity::two_bump(a, b, 0.25, 1.0).unwrap();
        assert_eq!(d.sup(), 0.75);
        let overlapping = InitialDensity::two_bump(a, a, 0.5, 1.0).unwrap();
        assert_eq!(overlapping.sup(), 1.0);
        let expected_m2 = 0.25 * (2.0 / 3.0) + 0.75 * ((4.0 + 6.0 + 9.0) / 3.0 + 1.0 / 3.0);
        assert!((d.second_moment() - expected_m2).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_descriptors() {
        assert!(InitialDensity::uniform(unit_box(), 0.0).is_err());
        assert!(InitialDensity::truncated_gaussian([0.0; 4], 1.0, 1.0, f64::INFINITY, 1.0).is_err());
        assert!(PhaseBox::new([0.0; 4], [1.0, 1.0, 0.0, 1.0]).is_err());
        let d = InitialDensity::uniform(unit_box(), 1.0).unwrap();
        assert!(d.sample(0, 1).is_err());
    }
}
