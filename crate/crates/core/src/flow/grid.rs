use std::collections::HashMap;

use super::ensemble::PhasePoint;
use crate::Vec2;

/// Uniform spatial hash with cells of side `2R`, the force support radius.
/// Any pair closer than `2R` lies in the same or adjacent cells. Each cell
/// lists its particles in ascending index order.
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    cell_size: f64,
    storage: Storage,
    revision: u64,
    len: usize,
}

/// A particle index with a copy of its state, stored contiguously per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEntry {
    pub index: usize,
    pub point: PhasePoint,
}

/// Dense row-major offsets over the occupied key box when it is small enough,
/// a hash map otherwise (far outliers).
#[derive(Debug, Clone)]
enum Storage {
    Dense {
        origin: (i64, i64),
        width: i64,
        height: i64,
        offsets: Vec<usize>,
        entries: Vec<CellEntry>,
    },
    Sparse(HashMap<(i64, i64), Vec<CellEntry>>),
}

impl NeighborGrid {
    pub fn build(points: &[PhasePoint], cell_size: f64, revision: u64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        let keys: Vec<(i64, i64)> = points.iter().map(|p| cell_of(p.x, cell_size)).collect();
        let storage = match dense_box(&keys, points.len()) {
            Some((origin, width, height)) => {
                let slot = |k: (i64, i64)| ((k.1 - origin.1) * width + (k.0 - origin.0)) as usize;
                let cells = (width * height) as usize;
                let mut offsets = vec![0usize; cells + 1];
                for &k in &keys {
                    offsets[slot(k) + 1] += 1;
                }
                for c in 0..cells {
                    offsets[c + 1] += offsets[c];
                }
                let mut fill = offsets.clone();
                let mut entries = vec![
                    CellEntry {
                        index: 0,
                        point: PhasePoint::default(),
                    };
                    keys.len()
                ];
                for (i, &k) in keys.iter().enumerate() {
                    let c = slot(k);
                    entries[fill[c]] = CellEntry {
                        index: i,
                        point: points[i],
                    };
                    fill[c] += 1;
                }
                Storage::Dense {
                    origin,
                    width,
                    height,
                    offsets,
                    entries,
                }
            }
            None => {
                let mut cells: HashMap<(i64, i64), Vec<CellEntry>> = HashMap::new();
                for (i, &k) in keys.iter().enumerate() {
                    cells.entry(k).or_default().push(CellEntry {
                        index: i,
                        point: points[i],
                    });
                }
                Storage::Sparse(cells)
            }
        };
        NeighborGrid {
            cell_size,
            storage,
            revision,
            len: points.len(),
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of occupied cells.
    pub fn cell_count(&self) -> usize {
        match &self.storage {
            Storage::Dense { offsets, .. } => offsets.windows(2).filter(|w| w[1] > w[0]).count(),
            Storage::Sparse(cells) => cells.len(),
        }
    }

    /// Entries of one cell, ascending by index.
    pub fn cell(&self, key: (i64, i64)) -> &[CellEntry] {
        match &self.storage {
            Storage::Dense {
                origin,
                width,
                height,
                offsets,
                entries,
            } => {
                let (cx, cy) = (key.0 - origin.0, key.1 - origin.1);
                if cx < 0 || cy < 0 || cx >= *width || cy >= *height {
                    return &[];
                }
                let c = (cy * width + cx) as usize;
                &entries[offsets[c]..offsets[c + 1]]
            }
            Storage::Sparse(cells) => cells.get(&key).map_or(&[], Vec::as_slice),
        }
    }

    /// Particle indices grouped by cell, so that consecutive particles share
    /// neighbourhoods.
    pub fn cell_order(&self) -> Vec<usize> {
        match &self.storage {
            Storage::Dense { entries, .. } => entries.iter().map(|e| e.index).collect(),
            Storage::Sparse(cells) => {
                let mut keys: Vec<&(i64, i64)> = cells.keys().collect();
                keys.sort_unstable();
                keys.into_iter().flat_map(|k| cells[k].iter().map(|e| e.index)).collect()
            }
        }
    }

    pub fn key_of(&self, x: Vec2) -> (i64, i64) {
        cell_of(x, self.cell_size)
    }

    /// Calls `f` on every entry in the 3x3 block of cells around `x` (cell by
    /// cell, not sorted).
    #[inline]
    pub fn for_each_candidate<F: FnMut(&CellEntry)>(&self, x: Vec2, mut f: F) {
        let (cx, cy) = self.key_of(x);
        for dy in -1..=1 {
            for dx in -1..=1 {
                for e in self.cell((cx + dx, cy + dy)) {
                    f(e);
                }
            }
        }
    }

    /// Indices in the 3x3 block of cells around `x`, in ascending order.
    pub fn candidates_into(&self, x: Vec2, out: &mut Vec<usize>) {
        out.clear();
        self.for_each_candidate(x, |e| out.push(e.index));
        out.sort_unstable();
    }

    pub fn candidates(&self, x: Vec2) -> Vec<usize> {
        let mut out = Vec::new();
        self.candidates_into(x, &mut out);
        out
    }
}

/// Key box `(origin, width, height)` if a dense table over it stays within a
/// few cells per particle.
fn dense_box(keys: &[(i64, i64)], n: usize) -> Option<((i64, i64), i64, i64)> {
    let first = *keys.first()?;
    let (mut lo, mut hi) = (first, first);
    for &(x, y) in keys {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let width = hi.0.checked_sub(lo.0)?.checked_add(1)?;
    let height = hi.1.checked_sub(lo.1)?.checked_add(1)?;
    let cells = width.checked_mul(height)?;
    let budget = (8 * n as i64).max(1 << 16);
    (cells <= budget).then_some((lo, width, height))
}

#[inline]
fn cell_of(x: Vec2, size: f64) -> (i64, i64) {
    ((x.x / size).floor() as i64, (x.y / size).floor() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<PhasePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                PhasePoint::new(
                    Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
                    Vec2::ZERO,
                )
            })
            .collect()
    }

    #[test]
    fn every_particle_in_exactly_one_cell() {
        let pts = random_points(500, 1);
        let g = NeighborGrid::build(&pts, 0.5, 0);
        let mut seen = vec![0usize; pts.len()];
        for kx in -10..10 {
            for ky in -10..10 {
                let list = g.cell((kx, ky));
                assert!(list.windows(2).all(|w| w[0].index < w[1].index));
                for e in list {
                    assert_eq!(e.point, pts[e.index]);
                    seen[e.index] += 1;
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn far_outlier_uses_sparse_storage() {
        let mut pts = random_points(50, 3);
        pts.push(PhasePoint::new(Vec2::new(1e9, -1e9), Vec2::ZERO));
        let g = NeighborGrid::build(&pts, 0.5, 0);
        assert!(matches!(g.storage, Storage::Sparse(_)));
        assert_eq!(g.cell(g.key_of(pts[50].x))[0].index, 50);
        let mut order = g.cell_order();
        order.sort_unstable();
        assert_eq!(order, (0..51).collect::<Vec<_>>());
        let dense = NeighborGrid::build(&pts[..50], 0.5, 0);
        assert!(matches!(dense.storage, Storage::Dense { .. }));
        for p in &pts[..50] {
            assert_eq!(g.candidates(p.x), dense.candidates(p.x));
        }
    }

    #[test]
    fn finds_all_close_pairs() {
        let pts = random_points(400, 2);
        let cell = 0.6;
        let g = NeighborGrid::build(&pts, cell, 0);
        for (i, p) in pts.iter().enumerate() {
            let cand = g.candidates(p.x);
            assert!(cand.windows(2).all(|w| w[0] < w[1]));
            for (j, q) in pts.iter().enumerate() {
                if (p.x - q.x).norm() < cell {
                    assert!(cand.binary_search(&j).is_ok(), "pair {i},{j} missed");
                }
            }
        }
    }
}
