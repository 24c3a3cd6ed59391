use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::bump::{BumpProfile, SMOOTHSTEP_MAX_SLOPE};
use crate::{KinflowError, Mat2, Result, Vec2};

/// Radial profile of the potential derivative `d_r V(r, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `-k_n (2R - r)`: linear spring pulling particles together inside 2R.
    Spring,
    /// `2 k_n R (u^2 - u)` with `u = exp(-(r - R)/R)`: repulsive below R,
    /// attractive between R and 2R.
    Morse,
}

/// Total interaction force `F(x, v) = d_r V(|x|, |v|) x/|x| H_{2R}(|x|) H_{2R~}(|v|)`.
///
/// The velocity dependence is the saturating dissipative factor
/// `1 + gamma_n tanh(gamma_t |v|)`, so both `d_r V` and its velocity
/// gradient stay bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceModel {
    pub profile: ProfileKind,
    pub k_n: f64,
    pub gamma_n: f64,
    pub gamma_t: f64,
    pub range: f64,
    pub velocity_range: f64,
    pub bump_x: BumpProfile,
    pub bump_v: BumpProfile,
}

impl ForceModel {
    pub fn new(
        profile: ProfileKind,
        k_n: f64,
        gamma_n: f64,
        gamma_t: f64,
        range: f64,
        velocity_range: f64,
    ) -> Result<Self> {
        for (name, value) in [("k_n", k_n), ("gamma_n", gamma_n), ("gamma_t", gamma_t)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(KinflowError::invalid(name, "must be nonnegative and finite"));
            }
        }
        Ok(ForceModel {
            profile,
            k_n,
            gamma_n,
            gamma_t,
            range,
            velocity_range,
            bump_x: BumpProfile::doubling(range).map_err(|_| {
                KinflowError::invalid("R", "interaction range must be positive")
            })?,
            bump_v: BumpProfile::doubling(velocity_range).map_err(|_| {
                KinflowError::invalid("R_tilde", "velocity range must be positive")
            })?,
        })
    }

    pub fn spring(k_n: f64, gamma_n: f64, gamma_t: f64, range: f64, velocity_range: f64) -> Result<Self> {
        Self::new(ProfileKind::Spring, k_n, gamma_n, gamma_t, range, velocity_range)
    }

    pub fn morse(k_n: f64, gamma_n: f64, gamma_t: f64, range: f64, velocity_range: f64) -> Result<Self> {
        Self::new(ProfileKind::Morse, k_n, gamma_n, gamma_t, range, velocity_range)
    }

    /// A model whose force vanishes identically (`k_n = 0`).
    pub fn decoupled() -> Self {
        Self::spring(0.0, 0.0, 0.0, 1.0, 1.0).expect("valid parameters")
    }

    pub fn is_zero(&self) -> bool {
        self.k_n == 0.0
    }

    /// Support radius of the force in `x`.
    pub fn support(&self) -> f64 {
        self.bump_x.outer
    }

    /// `d_r V(r, s)` without the range bumps.
    pub fn radial_derivative(&self, r: f64, s: f64) -> f64 {
        self.radial_part(r) * self.dissipation(s)
    }

    fn radial_part(&self, r: f64) -> f64 {
        let big_r = self.range;
        match self.profile {
            ProfileKind::Spring => -self.k_n * (2.0 * big_r - r),
            ProfileKind::Morse => {
                let u = (-(r - big_r) / big_r).exp();
                2.0 * self.k_n * big_r * (u * u - u)
            }
        }
    }

    fn radial_part_slope(&self, r: f64) -> f64 {
        let big_r = self.range;
        match self.profile {
            ProfileKind::Spring => self.k_n,
            ProfileKind::Morse => {
                let u = (-(r - big_r) / big_r).exp();
                2.0 * self.k_n * (u - 2.0 * u * u)
            }
        }
    }

    fn dissipation(&self, s: f64) -> f64 {
        1.0 + self.gamma_n * (self.gamma_t * s).tanh()
    }

    fn dissipation_slope(&self, s: f64) -> f64 {
        let th = (self.gamma_t * s).tanh();
        self.gamma_n * self.gamma_t * (1.0 - th * th)
    }

    /// Radial factor `a(r) = d_rV_r(r) H_{2R}(r)` (position part only).
    #[inline]
    pub(crate) fn spatial_factor(&self, r: f64) -> f64 {
        let h = self.bump_x.value(r);
        if h == 0.0 {
            0.0
        } else {
            self.radial_part(r) * h
        }
    }

    #[inline]
    pub fn spatial_factor_slope(&self, r: f64) -> f64 {
        self.radial_part_slope(r) * self.bump_x.value(r)
            + self.radial_part(r) * self.bump_x.derivative(r)
    }

    /// Velocity factor `b(s) = (1 + gamma_n tanh(gamma_t s)) H_{2R~}(s)`.
    #[inline]
    pub(crate) fn velocity_factor(&self, s: f64) -> f64 {
        let h = self.bump_v.value(s);
        if h == 0.0 {
            0.0
        } else {
            self.dissipation(s) * h
        }
    }

    #[inline]
    pub(crate) fn velocity_factor_slope(&self, s: f64) -> f64 {
        self.dissipation_slope(s) * self.bump_v.value(s)
            + self.dissipation(s) * self.bump_v.derivative(s)
    }

    /// `(b(s), b'(s))` sharing one `tanh`; bit-identical to the separate calls.
    #[inline]
    pub(crate) fn velocity_factor_and_slope(&self, s: f64) -> (f64, f64) {
        let h = self.bump_v.value(s);
        let th = (self.gamma_t * s).tanh();
        let d = 1.0 + self.gamma_n * th;
        let b = if h == 0.0 { 0.0 } else { d * h };
        let slope = self.gamma_n * self.gamma_t * (1.0 - th * th) * h + d * self.bump_v.derivative(s);
        (b, slope)
    }

    /// Signed magnitude `phi(r, s) = d_r V(r, s) H(r) H~(s)` of the force.
    #[inline]
    pub fn magnitude(&self, r: f64, s: f64) -> f64 {
        if r >= self.bump_x.outer || s >= self.bump_v.outer || self.k_n == 0.0 {
            return 0.0;
        }
        self.spatial_factor(r) * self.velocity_factor(s)
    }

    /// The uncut force. Undefined at `x = 0`.
    pub fn eval(&self, x: Vec2, v: Vec2) -> Result<Vec2> {
        let r = x.norm();
        if r == 0.0 {
            return Err(KinflowError::SingularInput);
        }
        let phi = self.magnitude(r, v.norm());
        Ok(x * (phi / r))
    }

    /// Velocity Jacobian of the uncut force (requires `x != 0`).
    pub fn grad_v(&self, x: Vec2, v: Vec2) -> Result<Mat2> {
        let r = x.norm();
        if r == 0.0 {
            return Err(KinflowError::SingularInput);
        }
        Ok(self.grad_v_along(x * (1.0 / r), r, v))
    }

    /// `e ⊗ (a(r) b'(s) v/|v|)`: the force is `a(r) b(|v|) e`, so its
    /// velocity Jacobian is rank one.
    #[inline]
    pub(crate) fn grad_v_along(&self, e: Vec2, r: f64, v: Vec2) -> Mat2 {
        let s = v.norm();
        if r >= self.bump_x.outer || s >= self.bump_v.outer || s == 0.0 || self.k_n == 0.0 {
            return Mat2::ZERO;
        }
        let c = self.spatial_factor(r) * self.velocity_factor_slope(s) / s;
        e.outer(v * c)
    }

    /// `sup |a(r)|` over r in [0, 2R].
    fn spatial_sup(&self) -> f64 {
        let big_r = self.range;
        match self.profile {
            ProfileKind::Spring => 2.0 * big_r * self.k_n,
            // |u^2 - u| on u in [1/e, e] peaks at u = e (r = 0).
            ProfileKind::Morse => 2.0 * self.k_n * big_r * (E * E - E),
        }
    }

    /// `sup |a'(r)|` over r in [0, 2R], bounded term by term.
    fn spatial_slope_sup(&self) -> f64 {
        match self.profile {
            // plateau: k_n; transition: k_n (H + (2R - r)|H'|) <= k_n (1 + 1.875)
            ProfileKind::Spring => self.k_n * (1.0 + SMOOTHSTEP_MAX_SLOPE),
            // |u - 2u^2| <= 2e^2 - e on [1/e, e]; |u^2 - u| <= 1/4 on the
            // transition band where u in [1/e, 1].
            ProfileKind::Morse => {
                2.0 * self.k_n * (2.0 * E * E - E) + 2.0 * self.k_n * 0.25 * SMOOTHSTEP_MAX_SLOPE
            }
        }
    }

    /// `sup |d_r V H H~|`, the bound on `|F|` and on `|F^N|` for every N.
    pub fn f_inf_bound(&self) -> f64 {
        self.spatial_sup() * (1.0 + self.gamma_n)
    }

    /// Bound on the operator norm of `grad_v F` (and `grad_v F^N`, every N).
    pub fn grad_v_bound(&self) -> f64 {
        self.spatial_sup()
            * (self.gamma_n * self.gamma_t + (1.0 + self.gamma_n) * self.bump_v.max_slope())
    }

    /// Bound on `|d/dr phi(r, s)|` uniformly in `s`.
    pub fn radial_slope_bound(&self) -> f64 {
        self.spatial_slope_sup() * (1.0 + self.gamma_n)
    }

    /// The constant `C` in `q^N(x) = C/|x| + C` (outside the cut radius) and
    /// `C N^theta` (inside).
    ///
    /// For `F = phi(|x|) x/|x|` one has
    /// `|F(x) - F(y)| <= |phi|_inf |x^ - y^| + |phi'|_inf ||x| - |y||` and
    /// `|x^ - y^| <= 2|x - y| / max(|x|, |y|)`; the cut-off adds at most
    /// `N^theta |phi|_inf` to the radial slope. `C = 3 |phi|_inf + |phi'|_inf`
    /// covers every case for `N^theta >= 1`.
    pub fn lipschitz_constant(&self) -> f64 {
        3.0 * self.f_inf_bound() + self.radial_slope_bound()
    }
}
