//! Shared fixtures for the criterion benches.

use bellscope::npa::{Level, MomentStructure};
use bellscope::simplex::{center_segment, Face};
use bellscope::{Behavior, SdpProblem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded random symmetric matrix with entries in [-1, 1].
pub fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

/// A point just inside the level-1 boundary on the {6,8} center segment.
pub fn near_boundary_point() -> Behavior {
    center_segment(Face::from_zeroed(&[6, 8]).unwrap())
        .unwrap()
        .point(0.35)
}

pub fn moment_problem(level: Level) -> SdpProblem {
    MomentStructure::build(level)
        .instantiate(&near_boundary_point())
        .unwrap()
}
