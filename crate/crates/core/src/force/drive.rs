use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::quadrature::{gauss_legendre, integrate};
use crate::{KinflowError, Result, Vec2};

pub const DEFAULT_QUADRATURE_ORDER: usize = 24;

/// Bounded desired-velocity field `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveField {
    /// `g(x) = g0`.
    Constant { g: Vec2 },
    /// `g(x) = -A (x - c)/sigma exp(-|x - c|^2 / (2 sigma^2))`: a smooth
    /// attracting well, bounded by `A e^{-1/2}`.
    GaussianWell { center: Vec2, amplitude: f64, sigma: f64 },
    /// `g(x) = (speed, -A tanh(x_2 / width))`: walk along a lane while being
    /// pulled toward its centre line.
    Lane { speed: f64, amplitude: f64, width: f64 },
}

impl DriveField {
    pub fn zero() -> Self {
        DriveField::Constant { g: Vec2::ZERO }
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        match *self {
            DriveField::Constant { g } => g,
            DriveField::GaussianWell {
                center,
                amplitude,
                sigma,
            } => {
                let d = x - center;
                let e = (-d.norm_sq() / (2.0 * sigma * sigma)).exp();
                d * (-amplitude * e / sigma)
            }
            DriveField::Lane {
                speed,
                amplitude,
                width,
            } => Vec2::new(speed, -amplitude * (x.y / width).tanh()),
        }
    }

    /// `sup |g|`, analytic.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            DriveField::Constant { g } => g.norm(),
            DriveField::GaussianWell { amplitude, .. } => amplitude.abs() * (-0.5f64).exp(),
            DriveField::Lane {
                speed, amplitude, ..
            } => speed.hypot(amplitude),
        }
    }

    /// Global Lipschitz constant of `g`; mollification cannot increase it.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            DriveField::Constant { .. } => 0.0,
            DriveField::GaussianWell {
                amplitude, sigma, ..
            } => amplitude.abs() / sigma,
            DriveField::Lane {
                amplitude, width, ..
            } => amplitude.abs() / width,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DriveField::Constant { g } => g.is_finite(),
            DriveField::GaussianWell {
                center,
                amplitude,
                sigma,
            } => center.is_finite() && amplitude.is_finite() && sigma > 0.0 && sigma.is_finite(),
            DriveField::Lane {
                speed,
                amplitude,
                width,
            } => speed.is_finite() && amplitude.is_finite() && width > 0.0 && width.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(KinflowError::invalid("drive", "parameters must be finite, widths positive"))
        }
    }
}

/// `int_{|y|<1} exp(-1/(1-|y|^2)) dy`, computed once with a 64-panel rule.
fn unit_mollifier_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        TAU * integrate(
            |r| {
                let q = 1.0 - r * r;
                if q <= 0.0 {
                    0.0
                } else {
                    r * (-1.0 / q).exp()
                }
            },
            0.0,
            1.0,
            64,
            16,
        )
    })
}

/// Standard mollifier on the unit disc, `c exp(-1/(1-|y|^2))`, normalised to
/// unit mass.
pub fn standard_mollifier(y: Vec2) -> f64 {
    let q = 1.0 - y.norm_sq();
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp() / unit_mollifier_mass()
    }
}

/// Desired acceleration `G^N(x, v) = (j_{1/N} * g)(x) - v`.
///
/// The convolution uses a tensor Gauss-Legendre rule in polar coordinates on
/// the support disc of radius `1/N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MollifiedDrive {
    pub field: DriveField,
    pub mollifier_scale: f64,
    pub quadrature_order: usize,
    #[serde(skip)]
    nodes: Vec<(Vec2, f64)>,
}

impl PartialEq for MollifiedDrive {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.mollifier_scale == other.mollifier_scale
            && self.quadrature_order == other.quadrature_order
    }
}

impl MollifiedDrive {
    pub fn new(field: DriveField, n_particles: usize, quadrature_order: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(KinflowError::invalid("n_particles", "must be at least 1"));
        }
        Self::with_scale(field, 1.0 / n_particles as f64, quadrature_order)
    }

    pub fn with_scale(field: DriveField, mollifier_scale: f64, quadrature_order: usize) -> Result<Self> {
        field.validate()?;
        if !(mollifier_scale > 0.0 && mollifier_scale.is_finite()) {
            return Err(KinflowError::invalid("mollifier_scale", "must be positive"));
        }
        if quadrature_order == 0 {
            return Err(KinflowError::invalid("quadrature_order", "must be positive"));
        }
        let nodes = if matches!(field, DriveField::Constant { .. }) {
            Vec::new()
        } else {
            unit_disc_rule(quadrature_order)
        };
        Ok(MollifiedDrive {
            field,
            mollifier_scale,
            quadrature_order,
            nodes,
        })
    }

    /// Convenience for the `g = 0` drive, which reduces to pure damping.
    pub fn damping_only() -> Self {
        Self::with_scale(DriveField::zero(), 1.0, DEFAULT_QUADRATURE_ORDER).expect("valid")
    }

    fn ensure_nodes(&self) -> std::borrow::Cow<'_, [(Vec2, f64)]> {
        if self.nodes.is_empty() && !matches!(self.field, DriveField::Constant { .. }) {
            std::borrow::Cow::Owned(unit_disc_rule(self.quadrature_order))
        } else {
            std::borrow::Cow::Borrowed(&self.nodes)
        }
    }

    /// Total mass of the discrete mollifier rule (renormalised to one).
    pub fn quadrature_mass(&self) -> f64 {
        unit_disc_rule(self.quadrature_order).iter().map(|(_, w)| w).sum()
    }

    /// `(j_{1/N} * g)(x)`. Exact for a constant field.
    pub fn smoothed(&self, x: Vec2) -> Vec2 {
        if let DriveField::Constant { g } = self.field {
            return g;
        }
        let eps = self.mollifier_scale;
        let nodes = self.ensure_nodes();
        let mut acc = Vec2::ZERO;
        for &(y, w) in nodes.iter() {
            acc += self.field.eval(x - y * eps) * w;
        }
        acc
    }

    #[inline]
    pub fn eval(&self, x: Vec2, v: Vec2) -> Vec2 {
        self.smoothed(x) - v
    }

    /// `div_v G^N = -2` in two velocity dimensions.
    #[inline]
    pub fn div_v(&self) -> f64 {
        -2.0
    }

    pub fn sup_g(&self) -> f64 {
        self.field.sup_norm()
    }
}

/// Polar tensor rule on the unit disc weighted by the normalised mollifier:
/// `order` radial nodes on [0, 1] times `order` angular nodes on [0, 2 pi].
fn unit_disc_rule(order: usize) -> Vec<(Vec2, f64)> {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * order);
    for (xr, wr) in x.iter().zip(&w) {
        let r = 0.5 * (xr + 1.0);
        let radial = 0.5 * wr * r * standard_mollifier(Vec2::new(r, 0.0));
        for (xa, wa) in x.iter().zip(&w) {
            let a = PI * (xa + 1.0);
            let weight = radial * PI * wa;
            nodes.push((Vec2::new(r * a.cos(), r * a.sin()), weight));
        }
    }
    let total: f64 = nodes.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut nodes {
        *w /= total;
    }
    nodes
}
