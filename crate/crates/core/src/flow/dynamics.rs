use rayon::prelude::*;

use super::ensemble::{ParticleEnsemble, PhasePoint};
use super::grid::NeighborGrid;
use crate::diagnostics::{self, DiagnosticRecord};
use crate::force::{CutoffForce, MollifiedDrive};
use crate::{KinflowError, Result, Vec2};

/// Time derivative of one particle: `(dx/dt, dv/dt, dL/dt)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseRate {
    pub dx: Vec2,
    pub dv: Vec2,
    pub dl: f64,
}

/// The cut-off characteristic system
///
/// ```text
/// dx_i/dt = v_i
/// dv_i/dt = w sum_j F^N(x_i - x_j, v_i - v_j) + G^N(x_i, v_i)
/// dL_i/dt = w sum_j tr grad_v F^N(x_i - x_j, v_i - v_j) - 2
/// ```
///
/// Every particle sum runs over grid candidates in ascending index order,
/// `j = i` included (it contributes `F^N(0, 0) = 0`). Per-particle work is
/// sequential, so results do not depend on the rayon thread count.
#[derive(Debug, Clone)]
pub struct MeanFieldDynamics {
    pub force: CutoffForce,
    pub drive: MollifiedDrive,
}

impl MeanFieldDynamics {
    pub fn new(force: CutoffForce, drive: MollifiedDrive) -> Self {
        MeanFieldDynamics { force, drive }
    }

    fn cell_size(&self) -> f64 {
        self.force.model.support()
    }

    pub fn build_grid(&self, ensemble: &ParticleEnsemble) -> NeighborGrid {
        NeighborGrid::build(ensemble.points(), self.cell_size(), ensemble.revision())
    }

    fn check_grid(grid: &NeighborGrid, ensemble: &ParticleEnsemble) -> Result<()> {
        if grid.revision() != ensemble.revision() || grid.len() != ensemble.len() {
            return Err(KinflowError::StaleGrid {
                grid: grid.revision(),
                ensemble: ensemble.revision(),
            });
        }
        Ok(())
    }

    /// Right-hand side `(v_i, F^N * mu^N + G^N)` at particle `i`.
    pub fn mean_field_rhs(&self, ensemble: &ParticleEnsemble, grid: &NeighborGrid, i: usize) -> Result<(Vec2, Vec2)> {
        Self::check_grid(grid, ensemble)?;
        let mut buf = Vec::new();
        let r = self.rate_at(ensemble.points(), ensemble.weight(), grid, i, &mut buf);
        Ok((r.dx, r.dv))
    }

    /// `div_v(F^N * mu^N + G^N)` at particle `i`.
    pub fn div_v_at(&self, ensemble: &ParticleEnsemble, grid: &NeighborGrid, i: usize) -> Result<f64> {
        Self::check_grid(grid, ensemble)?;
        let mut buf = Vec::new();
        Ok(self.rate_at(ensemble.points(), ensemble.weight(), grid, i, &mut buf).dl)
    }

    #[inline]
    fn rate_at(
        &self,
        points: &[PhasePoint],
        weight: f64,
        grid: &NeighborGrid,
        i: usize,
        buf: &mut Vec<(usize, PhasePoint)>,
    ) -> PhaseRate {
        let zi = points[i];
        let mut force = Vec2::ZERO;
        let mut trace = 0.0;
        if !self.force.model.is_zero() {
            // Pairs outside either support contribute exact zeros, so dropping
            // them leaves the ascending-order sum bit-identical to all pairs.
            let m = &self.force.model;
            let x_cut = m.bump_x.outer * m.bump_x.outer * (1.0 + 1e-12);
            let v_cut = m.bump_v.outer * m.bump_v.outer * (1.0 + 1e-12);
            buf.clear();
            grid.for_each_candidate(zi.x, |e| {
                let zj = e.point;
                if (zi.x - zj.x).norm_sq() < x_cut && (zi.v - zj.v).norm_sq() < v_cut {
                    buf.push((e.index, zj));
                }
            });
            buf.sort_unstable_by_key(|c| c.0);
            for &(_, zj) in buf.iter() {
                let (f, tr) = self.force.eval_with_trace(zi.x - zj.x, zi.v - zj.v);
                force += f;
                trace += tr;
            }
        }
        PhaseRate {
            dx: zi.v,
            dv: force * weight + self.drive.eval(zi.x, zi.v),
            dl: weight * trace + self.drive.div_v(),
        }
    }

    /// Rates for every particle of a stage state.
    pub fn rates(&self, points: &[PhasePoint], weight: f64) -> Vec<PhaseRate> {
        if self.force.model.is_zero() {
            let grid = NeighborGrid::build(&[], self.cell_size(), 0);
            return points
                .par_iter()
                .enumerate()
                .map_init(Vec::new, |buf, (i, _)| self.rate_at(points, weight, &grid, i, buf))
                .collect();
        }
        let grid = NeighborGrid::build(points, self.cell_size(), 0);
        let order = grid.cell_order();
        let computed: Vec<PhaseRate> = order
            .par_iter()
            .map_init(Vec::new, |buf, &i| self.rate_at(points, weight, &grid, i, buf))
            .collect();
        let mut out = vec![PhaseRate::default(); points.len()];
        for (&i, r) in order.iter().zip(computed) {
            out[i] = r;
        }
        out
    }

    /// One classical RK4 step; the empirical measure is re-evaluated at every
    /// stage state.
    pub fn step(&self, ensemble: &mut ParticleEnsemble, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(KinflowError::invalid("dt", "time step must be positive"));
        }
        let w = ensemble.weight();
        let y0 = ensemble.points();
        let l0 = ensemble.log_jacobian();

        let k1 = self.rates(y0, w);
        let y1 = offset(y0, &k1, 0.5 * dt);
        let k2 = self.rates(&y1, w);
        let y2 = offset(y0, &k2, 0.5 * dt);
        let k3 = self.rates(&y2, w);
        let y3 = offset(y0, &k3, dt);
        let k4 = self.rates(&y3, w);

        let h6 = dt / 6.0;
        let mut points = Vec::with_capacity(y0.len());
        let mut logj = Vec::with_capacity(y0.len());
        for i in 0..y0.len() {
            let (a, b, c, d) = (k1[i], k2[i], k3[i], k4[i]);
            let dx = a.dx + (b.dx + c.dx) * 2.0 + d.dx;
            let dv = a.dv + (b.dv + c.dv) * 2.0 + d.dv;
            let dl = a.dl + 2.0 * (b.dl + c.dl) + d.dl;
            points.push(PhasePoint::new(y0[i].x + dx * h6, y0[i].v + dv * h6));
            logj.push(l0[i] + h6 * dl);
        }
        let t = ensemble.time() + dt;
        ensemble.set_state(points, logj, t);
        Ok(())
    }

    /// Integrates to `t_final`, recording diagnostics at the start, after every
    /// `stride` steps, and at the end. The last step is shortened to land on
    /// `t_final`; intermediate times are `t0 + k dt` (not accumulated).
    ///
    /// `observer` sees every record before it is stored and may fill optional
    /// fields or write snapshots.
    pub fn advance<F>(
        &self,
        ensemble: &mut ParticleEnsemble,
        t_final: f64,
        dt: f64,
        stride: usize,
        mut observer: F,
    ) -> Result<Vec<DiagnosticRecord>>
    where
        F: FnMut(&ParticleEnsemble, &mut DiagnosticRecord) -> Result<()>,
    {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(KinflowError::invalid("dt", "time step must be positive"));
        }
        if stride == 0 {
            return Err(KinflowError::invalid("record_stride", "must be at least 1"));
        }
        let t0 = ensemble.time();
        if t_final < t0 || t_final.is_nan() {
            return Err(KinflowError::invalid("t_final", "must not precede the ensemble time"));
        }
        if t_final == t0 {
            return Ok(Vec::new());
        }
        if dt > self.force.dt_max() {
            log::warn!("dt = {dt} exceeds the recommended {:.3e}", self.force.dt_max());
        }
        let n_steps = ((t_final - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        let mut records = Vec::with_capacity(n_steps / stride + 2);
        let mut emit = |ens: &ParticleEnsemble, records: &mut Vec<DiagnosticRecord>| -> Result<()> {
            let mut rec = diagnostics::record(ens);
            observer(ens, &mut rec)?;
            records.push(rec);
            Ok(())
        };
        emit(ensemble, &mut records)?;
        for k in 0..n_steps {
            let t_start = t0 + k as f64 * dt;
            let t_end = if k + 1 == n_steps {
                t_final
            } else {
                t0 + (k + 1) as f64 * dt
            };
            ensemble.set_time(t_start);
            self.step(ensemble, t_end - t_start)?;
            ensemble.set_time(t_end);
            let done = k + 1;
            if done == n_steps || done % stride == 0 {
                emit(ensemble, &mut records)?;
            }
        }
        Ok(records)
    }
}

fn offset(y: &[PhasePoint], k: &[PhaseRate], h: f64) -> Vec<PhasePoint> {
    y.iter()
        .zip(k)
        .map(|(p, r)| PhasePoint::new(p.x + r.dx * h, p.v + r.dv * h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::{DriveField, ForceModel};
    use crate::flow::{InitialDensity, PhaseBox};

    fn decoupled(n: usize) -> MeanFieldDynamics {
        let cf = CutoffForce::new(ForceModel::decoupled(), n, 0.25).unwrap();
        MeanFieldDynamics::new(cf, MollifiedDrive::damping_only())
    }

    fn spring(n: usize) -> MeanFieldDynamics {
        let m = ForceModel::spring(1.0, 0.5, 2.0, 0.5, 1.0).unwrap();
        let cf = CutoffForce::new(m, n, 0.25).unwrap();
        let md = MollifiedDrive::new(DriveField::Constant { g: Vec2::new(0.3, 0.0) }, n, 24).unwrap();
        MeanFieldDynamics::new(cf, md)
    }

    fn blob(n: usize, seed: u64) -> ParticleEnsemble {
        let region = PhaseBox::new([-1.0, -1.0, -0.5, -0.5], [1.0, 1.0, 0.5, 0.5]).unwrap();
        InitialDensity::uniform(region, 1.0).unwrap().sample(n, seed).unwrap()
    }

    #[test]
    fn single_particle_feels_only_the_drive() {
        let dynamics = spring(1);
        let p = PhasePoint::new(Vec2::new(0.2, 0.1), Vec2::new(0.4, -0.3));
        let e = ParticleEnsemble::new(vec![p], 1.0).unwrap();
        let grid = dynamics.build_grid(&e);
        let (dx, dv) = dynamics.mean_field_rhs(&e, &grid, 0).unwrap();
        assert_eq!(dx, p.v);
        assert_eq!(dv, dynamics.drive.eval(p.x, p.v));
    }

    #[test]
    fn pair_forces_are_equal_and_opposite() {
        let dynamics = MeanFieldDynamics::new(
            CutoffForce::new(ForceModel::spring(1.0, 0.0, 0.0, 0.5, 1.0).unwrap(), 2, 0.25).unwrap(),
            MollifiedDrive::damping_only(),
        );
        let v = Vec2::new(0.0, 0.0);
        let e = ParticleEnsemble::new(
            vec![
                PhasePoint::new(Vec2::new(-0.3, 0.0), v),
                PhasePoint::new(Vec2::new(0.3, 0.0), v),
            ],
            1.0,
        )
        .unwrap();
        let grid = dynamics.build_grid(&e);
        let (_, a0) = dynamics.mean_field_rhs(&e, &grid, 0).unwrap();
        let (_, a1) = dynamics.mean_field_rhs(&e, &grid, 1).unwrap();
        assert!(a0.x != 0.0);
        assert_eq!(a0, -a1);
    }

    #[test]
    fn stale_grid_is_rejected() {
        let dynamics = spring(16);
        let mut e = blob(16, 1);
        let grid = dynamics.build_grid(&e);
        dynamics.step(&mut e, 1e-3).unwrap();
        assert!(matches!(
            dynamics.mean_field_rhs(&e, &grid, 0),
            Err(KinflowError::StaleGrid { .. })
        ));
    }

    #[test]
    fn step_rejects_nonpositive_dt() {
        let mut e = blob(4, 1);
        assert!(decoupled(4).step(&mut e, 0.0).is_err());
        assert!(decoupled(4).step(&mut e, -1.0).is_err());
    }

    #[test]
    fn damped_free_flight_single_step_error_is_fifth_order() {
        let dynamics = decoupled(1);
        let (x0, v0) = (Vec2::new(0.5, -0.2), Vec2::new(1.0, 2.0));
        let errors: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&dt| {
                let mut e = ParticleEnsemble::new(vec![PhasePoint::new(x0, v0)], 1.0).unwrap();
                dynamics.step(&mut e, dt).unwrap();
                let exact = v0 * (-dt as f64).exp();
                (e.points()[0].v - exact).norm()
            })
            .collect();
        let ratio = errors[0] / errors[1];
        assert!((ratio - 32.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn constant_drive_relaxes_to_the_desired_velocity() {
        let g0 = Vec2::new(0.7, -0.4);
        let cf = CutoffForce::new(ForceModel::decoupled(), 1, 0.25).unwrap();
        let md = MollifiedDrive::new(DriveField::Constant { g: g0 }, 1, 24).unwrap();
        let dynamics = MeanFieldDynamics::new(cf, md);
        let v0 = Vec2::new(-1.0, 0.5);
        let mut e = ParticleEnsemble::new(vec![PhasePoint::new(Vec2::ZERO, v0)], 1.0).unwrap();
        dynamics.advance(&mut e, 1.0, 1e-3, 100, |_, _| Ok(())).unwrap();
        let exact = g0 + (v0 - g0) * (-1.0f64).exp();
        assert!((e.points()[0].v - exact).norm() < 1e-12);
    }

    #[test]
    fn advance_to_current_time_is_a_no_op() {
        let dynamics = spring(8);
        let mut e = blob(8, 3);
        let before = e.clone();
        let recs = dynamics.advance(&mut e, 0.0, 1e-3, 10, |_, _| Ok(())).unwrap();
        assert!(recs.is_empty());
        assert_eq!(e, before);
    }

    #[test]
    fn record_count_for_stride() {
        let dynamics = decoupled(8);
        let mut e = blob(8, 3);
        let recs = dynamics.advance(&mut e, 0.1, 1e-3, 10, |_, _| Ok(())).unwrap();
        // initial + every 10th of 100 steps, the 100th being the final one
        assert_eq!(recs.len(), 11);
        assert_eq!(recs.last().unwrap().t, 0.1);
        assert_eq!(e.time(), 0.1);
    }

    #[test]
    fn record_times_do_not_depend_on_refinement() {
        let dynamics = decoupled(8);
        let mut a = blob(8, 3);
        let mut b = blob(8, 3);
        let ra = dynamics.advance(&mut a, 0.5, 1e-2, 5, |_, _| Ok(())).unwrap();
        let rb = dynamics.advance(&mut b, 0.5, 5e-3, 10, |_, _| Ok(())).unwrap();
        assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            assert!((x.t - y.t).abs() < 1e-12);
        }
    }

    #[test]
    fn shortened_final_step_lands_on_t_final() {
        let dynamics = decoupled(4);
        let mut e = blob(4, 5);
        let recs = dynamics.advance(&mut e, 0.0105, 1e-3, 3, |_, _| Ok(())).unwrap();
        assert_eq!(recs.last().unwrap().t, 0.0105);
        // steps: 11; records at 0, 3, 6, 9 and the final one
        assert_eq!(recs.len(), 5);
    }
}
