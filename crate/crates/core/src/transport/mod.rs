//! Exact Wasserstein-1 distances between uniform empirical measures.

mod assignment;
mod study;

pub use assignment::{solve_assignment, Assignment};
pub use study::{convergence_study, ConvergenceRow, ConvergenceStudy, PairSummary};

use serde::{Deserialize, Serialize};

use crate::{KinflowError, Result};

/// Largest support size accepted by [`w1_exact`] (cubic-cost solver).
pub const W1_SIZE_LIMIT: usize = 1024;

/// Uniform-weight point measure on R^4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    support: Vec<[f64; 4]>,
}

impl DiscreteMeasure {
    pub fn new(support: Vec<[f64; 4]>) -> Result<Self> {
        if support.is_empty() {
            return Err(KinflowError::invalid("measure", "support must be nonempty"));
        }
        if support.iter().flatten().any(|c| !c.is_finite()) {
            return Err(KinflowError::Domain("measure has non-finite coordinates".into()));
        }
        Ok(DiscreteMeasure { support })
    }

    pub fn support(&self) -> &[[f64; 4]] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.support.len() as f64
    }
}

/// Optimal Monge map between two measures of equal size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPlan {
    /// `permutation[i]` is the point of `b` matched to point `i` of `a`.
    pub permutation: Vec<usize>,
    /// `sum_i |a_i - b_perm(i)| / n`.
    pub cost: f64,
}

#[inline]
pub fn phase_distance(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for k in 0..4 {
        let d = a[k] - b[k];
        s += d * d;
    }
    s.sqrt()
}

/// Average assignment cost of `permutation`, summed in index order.
pub fn plan_cost(a: &DiscreteMeasure, b: &DiscreteMeasure, permutation: &[usize]) -> f64 {
    let mut s = 0.0;
    for (i, &j) in permutation.iter().enumerate() {
        s += phase_distance(&a.support[i], &b.support[j]);
    }
    s / a.len() as f64
}

/// `W1(a, b)` under the Euclidean phase-space cost, with the optimal plan.
/// Among optimal plans the lexicographically smallest permutation is returned.
pub fn w1_exact(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<(f64, CouplingPlan)> {
    if a.len() != b.len() {
        return Err(KinflowError::SizeMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n > W1_SIZE_LIMIT {
        return Err(KinflowError::SizeLimit {
            n,
            limit: W1_SIZE_LIMIT,
        });
    }
    let mut cost = Vec::with_capacity(n * n);
    for p in &a.support {
        for q in &b.support {
            cost.push(phase_distance(p, q));
        }
    }
    let assignment = solve_assignment(&cost, n);
    let plan = CouplingPlan {
        cost: plan_cost(a, b, &assignment.permutation),
        permutation: assignment.permutation,
    };
    Ok((plan.cost, plan))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_measures_have_zero_cost_and_identity_plan() {
        let pts: Vec<[f64; 4]> = (0..9).map(|i| [i as f64, 0.5 * i as f64, -1.0, 2.0]).collect();
        let a = DiscreteMeasure::new(pts).unwrap();
        let (c, plan) = w1_exact(&a, &a).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(plan.permutation, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn single_pair_is_the_distance() {
        let a = DiscreteMeasure::new(vec![[0.0, 0.0, 0.0, 0.0]]).unwrap();
        let b = DiscreteMeasure::new(vec![[1.0, 2.0, 2.0, 4.0]]).unwrap();
        assert_eq!(w1_exact(&a, &b).unwrap().0, 5.0);
    }

    #[test]
    fn duplicate_points_give_the_identity() {
        let a = DiscreteMeasure::new(vec![[1.0; 4]; 5]).unwrap();
        let (_, plan) = w1_exact(&a, &a).unwrap();
        assert_eq!(plan.permutation, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn size_errors() {
        let a = DiscreteMeasure::new(vec![[0.0; 4]; 2]).unwrap();
        let b = DiscreteMeasure::new(vec![[0.0; 4]; 3]).unwrap();
        assert!(matches!(w1_exact(&a, &b), Err(KinflowError::SizeMismatch(2, 3))));
        let big = DiscreteMeasure::new(vec![[0.0; 4]; W1_SIZE_LIMIT + 1]).unwrap();
        assert!(matches!(w1_exact(&big, &big), Err(KinflowError::SizeLimit { .. })));
        assert!(DiscreteMeasure::new(vec![]).is_err());
    }
}
