use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{w1_exact, DiscreteMeasure, W1_SIZE_LIMIT};
use crate::flow::{InitialDensity, MeanFieldDynamics};
use crate::{KinflowError, Result};

/// One per-seed refinement distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_low: usize,
    pub n_high: usize,
    pub seed: u64,
    pub t: f64,
    /// Median over sub-samples of `W1(mu^{n_low}, sub-sample of mu^{n_high})`.
    pub w1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub n_low: usize,
    pub n_high: usize,
    pub median_initial: f64,
    pub median_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
    pub pairs: Vec<PairSummary>,
}

impl ConvergenceStudy {
    /// Comparisons `(i, j)`, `i < j`, of the per-pair medians at `t_final`
    /// in which the finer pair's distance did not exceed the coarser one's:
    /// `(non-increasing, total)`. Four sizes give three refinement pairs and
    /// three comparisons.
    pub fn non_increasing_count(&self) -> (usize, usize) {
        let m: Vec<f64> = self.pairs.iter().map(|p| p.median_final).collect();
        let mut ok = 0;
        let mut total = 0;
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                total += 1;
                if m[j] <= m[i] {
                    ok += 1;
                }
            }
        }
        (ok, total)
    }

    /// At least two thirds of the comparisons are non-increasing.
    pub fn trend_holds(&self) -> bool {
        let (ok, total) = self.non_increasing_count();
        total > 0 && 3 * ok >= 2 * total
    }
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the size-`n` ensemble in replicate `seed`.
pub fn ensemble_seed(seed: u64, n: usize) -> u64 {
    mix(seed ^ mix(n as u64))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median over `subsamples` draws of W1 between `low` and a size-`low.len()`
/// subset of `high` drawn without replacement.
fn subsampled_w1(low: &[[f64; 4]], high: &[[f64; 4]], subsamples: usize, seed: u64) -> Result<f64> {
    let a = DiscreteMeasure::new(low.to_vec())?;
    let values = (0..subsamples)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(k as u64 + 1)));
            let mut idx = sample(&mut rng, high.len(), low.len()).into_vec();
            idx.sort_unstable();
            let b = DiscreteMeasure::new(idx.iter().map(|&i| high[i]).collect())?;
            Ok(w1_exact(&a, &b)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(values))
}

/// Refinement study of the mean-field limit: for each replicate seed, draws
/// ensembles of every size, runs them to `t_final`, and measures W1 between
/// consecutive sizes at `t = 0` and `t = t_final`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study<D>(
    density: &InitialDensity,
    sizes: &[usize],
    seeds: &[u64],
    dynamics_for: D,
    t_final: f64,
    dt: f64,
    subsamples: usize,
) -> Result<ConvergenceStudy>
where
    D: Fn(usize) -> Result<MeanFieldDynamics> + Sync,
{
    if sizes.len() < 2 {
        return Err(KinflowError::invalid("converge.sizes", "need at least two sizes"));
    }
    if sizes.windows(2).any(|w| w[1] < w[0]) {
        return Err(KinflowError::invalid("converge.sizes", "sizes must be nondecreasing"));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n > W1_SIZE_LIMIT || n == 0) {
        return Err(KinflowError::SizeLimit {
            n,
            limit: W1_SIZE_LIMIT,
        });
    }
    if seeds.is_empty() || subsamples == 0 {
        return Err(KinflowError::invalid("converge.seeds", "need at least one seed and sub-sample"));
    }

    // (initial, final) phase vectors per seed and size.
    let runs: Vec<Vec<(Vec<[f64; 4]>, Vec<[f64; 4]>)>> = seeds
        .par_iter()
        .map(|&seed| {
            sizes
                .iter()
                .map(|&n| {
                    let mut e = density.sample(n, ensemble_seed(seed, n))?;
                    let z0 = e.phase_vectors();
                    dynamics_for(n)?.advance(&mut e, t_final, dt, usize::MAX, |_, _| Ok(()))?;
                    Ok((z0, e.phase_vectors()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for k in 0..sizes.len() - 1 {
        let (n_low, n_high) = (sizes[k], sizes[k + 1]);
        let mut initial = Vec::new();
        let mut last = Vec::new();
        for (s, &seed) in seeds.iter().enumerate() {
            let sub_seed = mix(ensemble_seed(seed, n_low) ^ mix(n_high as u64));
            let (lo0, lo1) = &runs[s][k];
            let (hi0, hi1) = &runs[s][k + 1];
            let w0 = subsampled_w1(lo0, hi0, subsamples, sub_seed)?;
            let w1 = subsampled_w1(lo1, hi1, subsamples, sub_seed)?;
            rows.push(ConvergenceRow { n_low, n_high, seed, t: 0.0, w1: w0 });
            rows.push(ConvergenceRow { n_low, n_high, seed, t: t_final, w1 });
            initial.push(w0);
            last.push(w1);
        }
        pairs.push(PairSummary {
            n_low,
            n_high,
            median_initial: median(initial),
            median_final: median(last),
        });
    }
    Ok(ConvergenceStudy { t_final, rows, pairs })
}
