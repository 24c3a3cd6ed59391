use serde::{Deserialize, Serialize};

use super::model::ForceModel;
use crate::{KinflowError, Mat2, Result, Vec2};

/// Default cut-off exponent `theta`.
pub const DEFAULT_THETA: f64 = 0.25;

/// The force regularised inside `r_cut = N^-theta`:
///
/// ```text
/// F^N(x, v) = d_rV(|x|, v) x/|x| H(x, v)      |x| >= N^-theta
///           = N^theta d_rV(|x|, v) x H(x, v)  |x| <  N^-theta
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffForce {
    pub model: ForceModel,
    pub n_particles: usize,
    pub theta: f64,
    r_cut: f64,
    scale: f64,
}

impl CutoffForce {
    pub fn new(model: ForceModel, n_particles: usize, theta: f64) -> Result<Self> {
        if n_particles == 0 {
            return Err(KinflowError::invalid("n_particles", "must be at least 1"));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(KinflowError::invalid("theta", "must be positive"));
        }
        let scale = (n_particles as f64).powf(theta);
        Ok(CutoffForce {
            model,
            n_particles,
            theta,
            r_cut: 1.0 / scale,
            scale,
        })
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    /// `N^theta`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    fn direction(&self, x: Vec2, r: f64) -> Vec2 {
        super::branch_direction(x, r, self.r_cut, self.scale)
    }

    /// `F^N(x, v)`; defined everywhere, `(0, 0)` at the origin.
    #[inline]
    pub fn eval(&self, x: Vec2, v: Vec2) -> Vec2 {
        let r = x.norm();
        let phi = self.model.magnitude(r, v.norm());
        if phi == 0.0 {
            return Vec2::ZERO;
        }
        self.direction(x, r) * phi
    }

    /// Velocity Jacobian `d F^N_i / d v_j`.
    ///
    /// At `v = 0` the factor `tanh(gamma_t |v|)` has a cone point; the zero
    /// matrix is returned there.
    #[inline]
    pub fn grad_v(&self, x: Vec2, v: Vec2) -> Mat2 {
        let r = x.norm();
        self.model.grad_v_along(self.direction(x, r), r, v)
    }

    /// `trace(grad_v F^N)` without forming the matrix.
    #[inline]
    pub fn trace_grad_v(&self, x: Vec2, v: Vec2) -> f64 {
        let r = x.norm();
        let s = v.norm();
        let m = &self.model;
        if r >= m.bump_x.outer || s >= m.bump_v.outer || s == 0.0 || m.k_n == 0.0 {
            return 0.0;
        }
        let c = m.spatial_factor(r) * m.velocity_factor_slope(s) / s;
        c * self.direction(x, r).dot(v)
    }

    /// Force and velocity-divergence contribution of one pair in a single
    /// pass (shares the norms and bump evaluations).
    #[inline]
    pub(crate) fn eval_with_trace(&self, x: Vec2, v: Vec2) -> (Vec2, f64) {
        let m = &self.model;
        let r = x.norm();
        if r >= m.bump_x.outer || m.k_n == 0.0 {
            return (Vec2::ZERO, 0.0);
        }
        let s = v.norm();
        if s >= m.bump_v.outer {
            return (Vec2::ZERO, 0.0);
        }
        let a = m.spatial_factor(r);
        if a == 0.0 {
            return (Vec2::ZERO, 0.0);
        }
        let e = self.direction(x, r);
        let (b, slope) = m.velocity_factor_and_slope(s);
        let force = e * (a * b);
        let trace = if s == 0.0 { 0.0 } else { a * slope / s * e.dot(v) };
        (force, trace)
    }

    /// Local Lipschitz bound `q^N(x)` of `x -> F^N(x, v)`, uniform in `v`.
    ///
    /// For any pair `x, y`: `|F^N(x,v) - F^N(y,v)| <= max(q^N(x), q^N(y)) |x - y|`.
    pub fn lipschitz_estimate(&self, x: Vec2) -> f64 {
        let c = self.model.lipschitz_constant();
        let r = x.norm();
        if r > self.model.support() {
            0.0
        } else if r >= self.r_cut {
            c / r + c
        } else {
            c * self.scale
        }
    }

    /// `sup_x q^N(x) = C N^theta`.
    pub fn lipschitz_sup(&self) -> f64 {
        let c = self.model.lipschitz_constant();
        (c * self.scale).max(c / self.r_cut + c)
    }

    /// Recommended upper bound on the time step, `0.1 / (1 + q^N(r_cut))`.
    pub fn dt_max(&self) -> f64 {
        0.1 / (1.0 + self.lipschitz_sup())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dissipative() -> CutoffForce {
        let m = ForceModel::spring(1.5, 0.8, 2.0, 1.0, 1.0).unwrap();
        CutoffForce::new(m, 1000, 0.25).unwrap()
    }

    #[test]
    fn origin_maps_to_zero() {
        let cf = dissipative();
        for v in [Vec2::ZERO, Vec2::new(0.3, -0.4), Vec2::new(5.0, 5.0)] {
            assert_eq!(cf.eval(Vec2::ZERO, v), Vec2::ZERO);
        }
    }

    #[test]
    fn branches_agree_at_the_cut_radius() {
        let cf = dissipative();
        let v = Vec2::new(0.2, 0.1);
        let x = Vec2::new(cf.r_cut(), 0.0);
        let r = x.norm();
        let phi = cf.model.magnitude(r, v.norm());
        let outer = x * (phi / r);
        let inner = x * (cf.scale() * phi);
        assert!((outer.x - inner.x).abs() <= 1e-12 * outer.x.abs());
        assert_eq!(cf.eval(x, v), outer);
    }

    #[test]
    fn matches_uncut_force_beyond_cut_radius() {
        let cf = dissipative();
        let v = Vec2::new(0.5, 0.0);
        let x = Vec2::new(0.0, 2.0 * cf.r_cut());
        assert_eq!(cf.eval(x, v), cf.model.eval(x, v).unwrap());
    }

    #[test]
    fn flat_velocity_region_has_zero_gradient_without_dissipation() {
        let m = ForceModel::spring(1.0, 0.0, 3.0, 1.0, 1.0).unwrap();
        let cf = CutoffForce::new(m, 100, 0.25).unwrap();
        assert_eq!(cf.grad_v(Vec2::new(0.5, 0.2), Vec2::new(0.3, 0.4)), Mat2::ZERO);
        assert_eq!(cf.grad_v(Vec2::new(0.5, 0.2), Vec2::new(2.0, 0.1)), Mat2::ZERO);
    }

    #[test]
    fn lipschitz_estimate_branches() {
        let cf = dissipative();
        let c = cf.model.lipschitz_constant();
        let inside = Vec2::new(0.5 * cf.r_cut(), 0.0);
        assert_eq!(cf.lipschitz_estimate(inside), c * cf.scale());
        let outside = Vec2::new(0.8, 0.0);
        assert_eq!(cf.lipschitz_estimate(outside), c / 0.8 + c);
        assert_eq!(cf.lipschitz_estimate(Vec2::new(2.5, 0.0)), 0.0);
    }

    #[test]
    fn force_is_flat_beyond_support() {
        let cf = dissipative();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let r = rng.random_range(2.0..6.0);
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let x = Vec2::new(r * a.cos(), r * a.sin());
            let v = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            assert_eq!(cf.eval(x, v), Vec2::ZERO);
        }
    }

    #[test]
    fn fused_evaluation_matches_separate_calls() {
        let cf = dissipative();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x = Vec2::new(rng.random_range(-2.2..2.2), rng.random_range(-2.2..2.2));
            let v = Vec2::new(rng.random_range(-2.2..2.2), rng.random_range(-2.2..2.2));
            let (f, tr) = cf.eval_with_trace(x, v);
            assert_eq!(f, cf.eval(x, v));
            assert!((tr - cf.grad_v(x, v).trace()).abs() <= 1e-14 * (1.0 + tr.abs()));
            assert_eq!(tr, cf.trace_grad_v(x, v));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = ForceModel::decoupled();
        assert!(CutoffForce::new(m, 0, 0.25).is_err());
        assert!(CutoffForce::new(m, 10, -1.0).is_err());
        assert!(CutoffForce::new(m, 10, 0.0).is_err());
    }
}
