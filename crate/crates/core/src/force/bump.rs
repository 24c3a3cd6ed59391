use serde::{Deserialize, Serialize};

use crate::{KinflowError, Result};

/// Maximum of `|d/dt (6t^5 - 15t^4 + 10t^3)|` on [0, 1], attained at t = 1/2.
pub(crate) const SMOOTHSTEP_MAX_SLOPE: f64 = 1.875;

/// Radial cut-off equal to 1 below `inner`, 0 above `outer`, with a quintic
/// smoothstep in between (C1, zero slope at both radii).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub inner: f64,
    pub outer: f64,
}

impl BumpProfile {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner.is_finite()) {
            return Err(KinflowError::invalid("inner_radius", "must be positive and finite"));
        }
        if !(outer > inner && outer.is_finite()) {
            return Err(KinflowError::invalid("outer_radius", "must exceed the inner radius"));
        }
        Ok(BumpProfile { inner, outer })
    }

    /// The `H_{2R}` profile: 1 on [0, R), 0 beyond 2R.
    pub fn doubling(radius: f64) -> Result<Self> {
        Self::new(radius, 2.0 * radius)
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if s < 0.0 || s.is_nan() {
            return Err(KinflowError::Domain(format!("bump evaluated at negative radius {s}")));
        }
        Ok(self.value(s))
    }

    #[inline]
    pub(crate) fn value(&self, s: f64) -> f64 {
        if s <= self.inner {
            1.0
        } else if s >= self.outer {
            0.0
        } else {
            let t = (s - self.inner) / (self.outer - self.inner);
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    /// Derivative in `s`; zero outside the transition band.
    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        if s <= self.inner || s >= self.outer {
            0.0
        } else {
            let w = self.outer - self.inner;
            let t = (s - self.inner) / w;
            let u = 1.0 - t;
            -30.0 * t * t * u * u / w
        }
    }

    pub fn max_slope(&self) -> f64 {
        SMOOTHSTEP_MAX_SLOPE / (self.outer - self.inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BumpProfile {
        BumpProfile::doubling(1.0).unwrap()
    }

    #[test]
    fn plateau_and_tail() {
        assert_eq!(unit().eval(0.5).unwrap(), 1.0);
        assert_eq!(unit().eval(0.0).unwrap(), 1.0);
        assert_eq!(unit().eval(3.0).unwrap(), 0.0);
        assert_eq!(unit().eval(2.0).unwrap(), 0.0);
    }

    #[test]
    fn midpoint_is_one_half() {
        // Direct evaluation: 1 - (6/32 - 15/16 + 10/8) = 1 - 0.5
        let t: f64 = 0.5;
        let direct = 1.0 - (6.0 * t.powi(5) - 15.0 * t.powi(4) + 10.0 * t.powi(3));
        assert_eq!(direct, 0.5);
        assert_eq!(unit().eval(1.5).unwrap(), 0.5);
    }

    #[test]
    fn negative_radius_is_a_domain_error() {
        assert!(matches!(unit().eval(-0.1), Err(KinflowError::Domain(_))));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let b = BumpProfile::new(0.7, 1.9).unwrap();
        let h = 1e-6;
        for k in 1..100 {
            let s = 0.5 + k as f64 * 0.016;
            let fd = (b.value(s + h) - b.value(s - h)) / (2.0 * h);
            assert!((fd - b.derivative(s)).abs() < 1e-7, "s={s}");
            assert!(b.derivative(s).abs() <= b.max_slope() + 1e-15);
        }
    }

    #[test]
    fn rejects_inverted_radii() {
        assert!(BumpProfile::new(2.0, 1.0).is_err());
        assert!(BumpProfile::new(0.0, 1.0).is_err());
    }
}
