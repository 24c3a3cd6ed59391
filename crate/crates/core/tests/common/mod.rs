#![allow(dead_code)]

use kinflow_core::{CutoffForce, ForceModel, PhasePoint, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn in_disc<R: Rng>(rng: &mut R, radius: f64) -> Vec2 {
    let r = radius * rng.random::<f64>().sqrt();
    let a = std::f64::consts::TAU * rng.random::<f64>();
    Vec2::new(r * a.cos(), r * a.sin())
}

pub fn spring() -> ForceModel {
    ForceModel::spring(1.5, 0.8, 2.0, 1.0, 1.0).unwrap()
}

pub fn morse() -> ForceModel {
    ForceModel::morse(0.7, 0.4, 3.0, 0.8, 1.5).unwrap()
}

pub fn cutoffs() -> Vec<CutoffForce> {
    let mut out = Vec::new();
    for model in [spring(), morse()] {
        for n in [10, 1000, 100_000] {
            out.push(CutoffForce::new(model, n, 0.25).unwrap());
        }
    }
    out
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, x_half: f64, v_half: f64) -> Vec<PhasePoint> {
    (0..n)
        .map(|_| {
            PhasePoint::new(
                Vec2::new(rng.random_range(-x_half..x_half), rng.random_range(-x_half..x_half)),
                Vec2::new(rng.random_range(-v_half..v_half), rng.random_range(-v_half..v_half)),
            )
        })
        .collect()
}
