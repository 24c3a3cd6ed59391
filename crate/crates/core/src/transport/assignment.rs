//! Dense linear assignment by shortest augmenting paths (Hungarian method
//! with row/column potentials), followed by a pass that picks the
//! lexicographically smallest permutation among the optimal ones.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Row `i` is assigned column `permutation[i]`.
    pub permutation: Vec<usize>,
    pub row_potential: Vec<f64>,
    pub col_potential: Vec<f64>,
}

/// Minimises `sum_i cost[i * n + perm[i]]` over permutations.
pub fn solve_assignment(cost: &[f64], n: usize) -> Assignment {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return Assignment {
            permutation: Vec::new(),
            row_potential: Vec::new(),
            col_potential: Vec::new(),
        };
    }
    let c = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];
    // 1-based with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0usize; n];
    for j in 1..=n {
        permutation[p[j] - 1] = j - 1;
    }
    let row_potential = u[1..].to_vec();
    let col_potential = v[1..].to_vec();
    let mut a = Assignment {
        permutation,
        row_potential,
        col_potential,
    };
    lexicographic_canonicalize(cost, n, &mut a);
    a
}

fn total(cost: &[f64], n: usize, perm: &[usize]) -> f64 {
    let mut s = 0.0;
    for (i, &j) in perm.iter().enumerate() {
        s += cost[i * n + j];
    }
    s
}

/// Among assignments that use only tight edges of the final dual solution,
/// moves each row (in order) to the smallest admissible column.
fn lexicographic_canonicalize(cost: &[f64], n: usize, a: &mut Assignment) {
    let scale = cost.iter().fold(1.0f64, |m, &c| m.max(c.abs()));
    let tol = 1e-11 * scale;
    let (u, v) = (&a.row_potential, &a.col_potential);
    let tight = |i: usize, j: usize| cost[i * n + j] - u[i] - v[j] <= tol;

    let perm = &mut a.permutation;
    let mut inv = vec![0usize; n];
    for (i, &j) in perm.iter().enumerate() {
        inv[j] = i;
    }
    let mut locked_col = vec![false; n];
    let mut best = total(cost, n, perm);
    let mut parent_row = vec![usize::MAX; n];
    let mut queue = VecDeque::new();

    for i in 0..n {
        let current = perm[i];
        for j in 0..current {
            if locked_col[j] || !tight(i, j) {
                continue;
            }
            // Rematch i -> j; the displaced row must reach `current` through
            // an alternating path of tight edges over unlocked columns.
            let start = inv[j];
            parent_row.fill(usize::MAX);
            queue.clear();
            queue.push_back(start);
            let mut visited_row = vec![false; n];
            visited_row[start] = true;
            visited_row[i] = true;
            let mut found = false;
            // parent_row[col] = row that reached col
            'bfs: while let Some(r) = queue.pop_front() {
                for c in 0..n {
                    if locked_col[c] || c == j || parent_row[c] != usize::MAX || !tight(r, c) {
                        continue;
                    }
                    parent_row[c] = r;
                    if c == current {
                        found = true;
                        break 'bfs;
                    }
                    let next = inv[c];
                    if !visited_row[next] {
                        visited_row[next] = true;
                        queue.push_back(next);
                    }
                }
            }
            if !found {
                continue;
            }
            let mut candidate = perm.clone();
            let mut c = current;
            loop {
                let r = parent_row[c];
                let prev = candidate[r];
                candidate[r] = c;
                if r == start {
                    break;
                }
                c = prev;
            }
            candidate[i] = j;
            let cand_total = total(cost, n, &candidate);
            if cand_total <= best {
                best = cand_total;
                *perm = candidate;
                for (r, &col) in perm.iter().enumerate() {
                    inv[col] = r;
                }
                break;
            }
        }
        locked_col[perm[i]] = true;
    }
}
