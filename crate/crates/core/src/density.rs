//! Grid reconstructions of `f^N(t, x, v)` from an ensemble: 4-d histograms and
//! a binned product-Gaussian KDE.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flow::{InitialDensity, ParticleEnsemble, PhasePoint};
use crate::summation::pairwise_sum;
use crate::{KinflowError, Result};

/// Floor of the Liouville residual denominator.
pub const RESIDUAL_FLOOR: f64 = 1e-8;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_INFLATION: f64 = 0.05;

/// Regular grid over `(x1, x2, v1, v2)`; cells are indexed row-major with
/// `v2` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid4D {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    pub bins: [usize; 4],
}

impl PhaseGrid4D {
    pub fn new(lo: [f64; 4], hi: [f64; 4], bins: [usize; 4]) -> Result<Self> {
        for k in 0..4 {
            if bins[k] < 2 {
                return Err(KinflowError::invalid("grid.bins", "need at least 2 bins per axis"));
            }
            if !(hi[k] > lo[k] && lo[k].is_finite() && hi[k].is_finite()) {
                return Err(KinflowError::invalid("grid.bounds", format!("axis {k}: need lo < hi")));
            }
        }
        Ok(PhaseGrid4D { lo, hi, bins })
    }

    /// Bounding box of the ensemble, widened so each axis grows by
    /// `inflation` of its extent (degenerate axes get unit width).
    pub fn covering(e: &ParticleEnsemble, bins: usize, inflation: f64) -> Result<Self> {
        let mut lo = [f64::INFINITY; 4];
        let mut hi = [f64::NEG_INFINITY; 4];
        for p in e.points() {
            let z = p.to_array();
            for k in 0..4 {
                lo[k] = lo[k].min(z[k]);
                hi[k] = hi[k].max(z[k]);
            }
        }
        for k in 0..4 {
            let width = hi[k] - lo[k];
            let pad = if width > 0.0 { 0.5 * inflation * width } else { 0.5 };
            lo[k] -= pad;
            hi[k] += pad;
        }
        Self::new(lo, hi, [bins; 4])
    }

    /// Covering grid padded on every side by the reach of a binned Gaussian
    /// kernel of bandwidth `h` (4h plus one cell), so smoothing loses no mass.
    pub fn covering_kde(e: &ParticleEnsemble, bins: usize, inflation: f64, h: [f64; 4]) -> Result<Self> {
        let base = Self::covering(e, bins, inflation)?;
        let mut lo = base.lo;
        let mut hi = base.hi;
        for k in 0..4 {
            let inner = base.hi[k] - base.lo[k];
            let mut pad = 0.0;
            for _ in 0..8 {
                let cell = (inner + 2.0 * pad) / bins as f64;
                let reach = if h[k] / cell > 1e-3 { (4.0 * h[k] / cell).ceil() } else { 0.0 };
                pad = (reach + 1.0) * cell;
            }
            lo[k] -= pad;
            hi[k] += pad;
        }
        Self::new(lo, hi, base.bins)
    }

    pub fn widths(&self) -> [f64; 4] {
        std::array::from_fn(|k| (self.hi[k] - self.lo[k]) / self.bins[k] as f64)
    }

    /// `Delta = dx1 dx2 dv1 dv2`.
    pub fn cell_volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn index_of(&self, z: &[f64; 4]) -> Option<[usize; 4]> {
        let w = self.widths();
        let mut idx = [0usize; 4];
        for k in 0..4 {
            if !(z[k] >= self.lo[k] && z[k] <= self.hi[k]) {
                return None;
            }
            let i = ((z[k] - self.lo[k]) / w[k]).floor() as usize;
            idx[k] = i.min(self.bins[k] - 1);
        }
        Some(idx)
    }

    pub fn flat(&self, idx: [usize; 4]) -> usize {
        ((idx[0] * self.bins[1] + idx[1]) * self.bins[2] + idx[2]) * self.bins[3] + idx[3]
    }

    pub fn unflat(&self, mut f: usize) -> [usize; 4] {
        let mut idx = [0usize; 4];
        for k in (0..4).rev() {
            idx[k] = f % self.bins[k];
            f /= self.bins[k];
        }
        idx
    }

    pub fn center(&self, idx: [usize; 4]) -> [f64; 4] {
        let w = self.widths();
        std::array::from_fn(|k| self.lo[k] + (idx[k] as f64 + 0.5) * w[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Histogram,
    Kde,
}

/// Cell values of a density estimate on a [`PhaseGrid4D`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: PhaseGrid4D,
    pub values: Vec<f64>,
    pub kind: EstimatorKind,
    /// Per-axis smoothing lengths (KDE only).
    pub bandwidth: Option<[f64; 4]>,
}

fn bin_counts(e: &ParticleEnsemble, grid: &PhaseGrid4D) -> Result<Vec<u32>> {
    let pts = e.points();
    if let Some(i) = pts.iter().position(|p| grid.index_of(&p.to_array()).is_none()) {
        return Err(KinflowError::OutOfBounds {
            index: i,
            point: pts[i].to_array(),
        });
    }
    let cells = grid.cell_count();
    Ok(pts
        .par_chunks(4096)
        .map(|chunk| {
            let mut c = vec![0u32; cells];
            for p in chunk {
                let idx = grid.index_of(&p.to_array()).expect("checked above");
                c[grid.flat(idx)] += 1;
            }
            c
        })
        .reduce(
            || vec![0u32; cells],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        ))
}

/// Histogram estimate: `weight * count / Delta` per cell.
pub fn histogram_density(e: &ParticleEnsemble, grid: &PhaseGrid4D) -> Result<DensityEstimate> {
    let counts = bin_counts(e, grid)?;
    let scale = e.weight() / grid.cell_volume();
    Ok(DensityEstimate {
        grid: grid.clone(),
        values: counts.into_iter().map(|c| scale * c as f64).collect(),
        kind: EstimatorKind::Histogram,
        bandwidth: None,
    })
}

/// Scott's rule, `sigma_k n^{-1/(d+4)}` with `d = 4`.
pub fn scott_bandwidth(e: &ParticleEnsemble) -> [f64; 4] {
    let n = e.len() as f64;
    let z = e.phase_vectors();
    std::array::from_fn(|k| {
        let mean = z.iter().map(|p| p[k]).sum::<f64>() / n;
        let var = z.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        var.sqrt() * n.powf(-1.0 / 8.0)
    })
}

/// Binned product-Gaussian KDE: the histogram smoothed axis by axis with a
/// discrete Gaussian of the given bandwidths (Scott's rule if `None`).
/// Mass reaching beyond the grid boundary is dropped.
pub fn kde_density(e: &ParticleEnsemble, grid: &PhaseGrid4D, bandwidth: Option<[f64; 4]>) -> Result<DensityEstimate> {
    let h = bandwidth.unwrap_or_else(|| scott_bandwidth(e));
    let mut est = histogram_density(e, grid)?;
    let widths = grid.widths();
    for axis in 0..4 {
        let kernel = discrete_gaussian(h[axis] / widths[axis]);
        est.values = smooth_axis(&est.values, &grid.bins, axis, &kernel);
    }
    est.kind = EstimatorKind::Kde;
    est.bandwidth = Some(h);
    Ok(est)
}

/// Scott-bandwidth KDE on a grid covering the ensemble and padded so that
/// the smoothed mass stays on the grid.
pub fn covering_kde_estimate(e: &ParticleEnsemble, bins: usize, inflation: f64) -> Result<DensityEstimate> {
    let h = scott_bandwidth(e);
    let grid = PhaseGrid4D::covering_kde(e, bins, inflation, h)?;
    kde_density(e, &grid, Some(h))
}

fn discrete_gaussian(h_cells: f64) -> Vec<f64> {
    if !(h_cells > 1e-3) {
        return vec![1.0];
    }
    let reach = (4.0 * h_cells).ceil() as i64;
    let mut k: Vec<f64> = (-reach..=reach)
        .map(|m| (-0.5 * (m as f64 / h_cells).powi(2)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= s);
    k
}

fn smooth_axis(values: &[f64], bins: &[usize; 4], axis: usize, kernel: &[f64]) -> Vec<f64> {
    if kernel.len() == 1 {
        return values.to_vec();
    }
    let reach = (kernel.len() / 2) as i64;
    let stride: usize = bins[axis + 1..].iter().product();
    let len = bins[axis] as i64;
    let mut out = vec![0.0; values.len()];
    out.par_iter_mut().enumerate().for_each(|(f, o)| {
        let pos = ((f / stride) % bins[axis]) as i64;
        let base = f - pos as usize * stride;
        let mut acc = 0.0;
        for (m, w) in kernel.iter().enumerate() {
            let src = pos + m as i64 - reach;
            if src >= 0 && src < len {
                acc += w * values[base + src as usize * stride];
            }
        }
        *o = acc;
    });
    out
}

impl DensityEstimate {
    /// `sum values * Delta`, summed pairwise.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    /// Value of the cell containing `z`, zero outside the grid.
    pub fn value_at(&self, z: PhasePoint) -> f64 {
        self.grid
            .index_of(&z.to_array())
            .map_or(0.0, |idx| self.values[self.grid.flat(idx)])
    }

    /// Averages 2x2x2x2 blocks (every axis must have an even bin count).
    pub fn coarsened(&self) -> Result<DensityEstimate> {
        if self.grid.bins.iter().any(|b| b % 2 != 0 || *b < 4) {
            return Err(KinflowError::invalid("grid.bins", "coarsening needs even counts >= 4"));
        }
        let bins = self.grid.bins.map(|b| b / 2);
        let grid = PhaseGrid4D::new(self.grid.lo, self.grid.hi, bins)?;
        let mut values = vec![0.0; grid.cell_count()];
        for (f, v) in self.values.iter().enumerate() {
            let idx = self.grid.unflat(f).map(|i| i / 2);
            values[grid.flat(idx)] += v / 16.0;
        }
        Ok(DensityEstimate {
            grid,
            values,
            kind: self.kind,
            bandwidth: self.bandwidth,
        })
    }

    pub fn header_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Header<'a> {
            format: &'static str,
            kind: EstimatorKind,
            order: &'static str,
            lo: [f64; 4],
            hi: [f64; 4],
            bins: [usize; 4],
            cell_volume: f64,
            bandwidth: Option<[f64; 4]>,
            mass: f64,
            #[serde(skip)]
            _p: std::marker::PhantomData<&'a ()>,
        }
        Ok(serde_json::to_string_pretty(&Header {
            format: "f64-le",
            kind: self.kind,
            order: "x1,x2,v1,v2 row-major (v2 fastest)",
            lo: self.grid.lo,
            hi: self.grid.hi,
            bins: self.grid.bins,
            cell_volume: self.grid.cell_volume(),
            bandwidth: self.bandwidth,
            mass: self.mass(),
            _p: std::marker::PhantomData,
        })?)
    }

    /// Flat little-endian f64 cell values.
    pub fn write_values<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Position marginal `int f dv` (`velocity = false`) or velocity marginal
    /// `int f dx` as CSV rows `a,b,density` at cell centres.
    pub fn write_marginal_csv<W: Write>(&self, mut w: W, velocity: bool) -> Result<()> {
        let g = &self.grid;
        let widths = g.widths();
        let (keep, drop) = if velocity { ([2, 3], [0, 1]) } else { ([0, 1], [2, 3]) };
        let dvol = widths[drop[0]] * widths[drop[1]];
        let mut marginal = vec![0.0; g.bins[keep[0]] * g.bins[keep[1]]];
        for (f, v) in self.values.iter().enumerate() {
            let idx = g.unflat(f);
            marginal[idx[keep[0]] * g.bins[keep[1]] + idx[keep[1]]] += v * dvol;
        }
        let names = if velocity { "v1,v2" } else { "x1,x2" };
        writeln!(w, "{names},density")?;
        for a in 0..g.bins[keep[0]] {
            for b in 0..g.bins[keep[1]] {
                let ca = g.lo[keep[0]] + (a as f64 + 0.5) * widths[keep[0]];
                let cb = g.lo[keep[1]] + (b as f64 + 0.5) * widths[keep[1]];
                writeln!(w, "{ca},{cb},{}", marginal[a * g.bins[keep[1]] + b])?;
            }
        }
        Ok(())
    }
}

/// `max` cell value.
pub fn sup_density(est: &DensityEstimate) -> f64 {
    est.values.iter().fold(0.0, |m: f64, &v| m.max(v))
}

/// Per-particle relative residual of the Liouville representation
/// `f(t, Z_i(t)) = f0(z_i(0)) exp(-L_i(t))` against an estimate `f_hat`:
/// `|f_hat(Z_i) - f0(z_i) e^{-L_i}| / max(f0(z_i) e^{-L_i}, floor)`.
pub fn liouville_residual<F>(e: &ParticleEnsemble, density0: &InitialDensity, estimate: F) -> Result<Vec<f64>>
where
    F: Fn(PhasePoint) -> f64 + Sync,
{
    let initial = e.initial_points().ok_or(KinflowError::MissingInitialPoints)?;
    Ok(e.points()
        .par_iter()
        .zip(initial)
        .zip(e.log_jacobian())
        .map(|((&z, &z0), &l)| {
            let transported = density0.pdf(z0) * (-l).exp();
            (estimate(z) - transported).abs() / transported.max(RESIDUAL_FLOOR)
        })
        .collect())
}

/// Residuals against a grid estimate.
pub fn liouville_residual_grid(e: &ParticleEnsemble, density0: &InitialDensity, est: &DensityEstimate) -> Result<Vec<f64>> {
    liouville_residual(e, density0, |z| est.value_at(z))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
