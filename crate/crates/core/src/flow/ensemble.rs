use serde::{Deserialize, Serialize};

use crate::{KinflowError, Result, Vec2};

/// A point `z = (x, v)` of the four-dimensional phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec2,
    pub v: Vec2,
}

impl PhasePoint {
    pub const fn new(x: Vec2, v: Vec2) -> Self {
        PhasePoint { x, v }
    }

    pub fn from_array(z: [f64; 4]) -> Self {
        PhasePoint::new(Vec2::new(z[0], z[1]), Vec2::new(z[2], z[3]))
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x.x, self.x.y, self.v.x, self.v.y]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}

/// `N` particles of uniform weight `M0/N`: the empirical measure `mu^N(t)`,
/// with the accumulated velocity divergence `L_i(t)` along each trajectory.
///
/// The density carried by particle `i` at time `t` is `f0(z_i(0)) exp(-L_i(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    points: Vec<PhasePoint>,
    log_jacobian: Vec<f64>,
    weight: f64,
    time: f64,
    initial: Option<Vec<PhasePoint>>,
    revision: u64,
}

impl ParticleEnsemble {
    /// Builds an ensemble of total mass `mass` at `t = 0`.
    pub fn new(points: Vec<PhasePoint>, mass: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(KinflowError::invalid("n_particles", "ensemble must be nonempty"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(KinflowError::invalid("mass", "must be positive and finite"));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(KinflowError::Domain(format!("particle {i} has non-finite coordinates")));
        }
        let n = points.len();
        Ok(ParticleEnsemble {
            points,
            log_jacobian: vec![0.0; n],
            weight: mass / n as f64,
            time: 0.0,
            initial: None,
            revision: 0,
        })
    }

    /// Restores a mid-run state (e.g. from a snapshot).
    pub fn from_parts(points: Vec<PhasePoint>, log_jacobian: Vec<f64>, weight: f64, time: f64) -> Result<Self> {
        if points.len() != log_jacobian.len() || points.is_empty() {
            return Err(KinflowError::Format("points and log-Jacobians differ in length".into()));
        }
        Ok(ParticleEnsemble {
            points,
            log_jacobian,
            weight,
            time,
            initial: None,
            revision: 0,
        })
    }

    /// Keeps a copy of the current points as the trajectory origins.
    pub fn retain_initial(mut self) -> Self {
        self.initial = Some(self.points.clone());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn log_jacobian(&self) -> &[f64] {
        &self.log_jacobian
    }

    pub fn initial_points(&self) -> Option<&[PhasePoint]> {
        self.initial.as_deref()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `weight * N`. Both factors are fixed at construction.
    pub fn total_mass(&self) -> f64 {
        self.weight * self.points.len() as f64
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Bumped on every mutation of the points; neighbor grids record it.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub(crate) fn set_state(&mut self, points: Vec<PhasePoint>, log_jacobian: Vec<f64>, time: f64) {
        debug_assert_eq!(points.len(), self.points.len());
        self.points = points;
        self.log_jacobian = log_jacobian;
        self.time = time;
        self.revision += 1;
    }

    pub(crate) fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    /// Applies `f` to every point (used for perturbations and symmetry tests).
    pub fn map_points<F: FnMut(usize, PhasePoint) -> PhasePoint>(&mut self, mut f: F) {
        for (i, p) in self.points.iter_mut().enumerate() {
            *p = f(i, *p);
        }
        self.revision += 1;
    }

    /// Phase-space coordinates as 4-vectors.
    pub fn phase_vectors(&self) -> Vec<[f64; 4]> {
        self.points.iter().map(|p| p.to_array()).collect()
    }
}
