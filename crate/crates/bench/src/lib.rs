//! Shared inputs for the criterion benchmarks.

use std::sync::Arc;

use picard_core::classes::{JParams, KParams};
use picard_core::sampling::{random_j_field, random_k_field, rng};
use picard_core::scenario::{ProblemDocument, ProblemOverrides};
use picard_core::spectral::{FourierField, ModeBox, TimeGrid, TorusGeometry};
use picard_core::TorusProblem;

/// Two dense spatial fields on the unit `n`-torus filling a box of radius `k`.
pub fn spatial_pair(n: usize, k: u32, seed: u64) -> (FourierField, FourierField) {
    let mut r = rng(seed);
    let g = TorusGeometry::unit(n);
    let bx = ModeBox::uniform(n, k);
    let count = bx.capacity() as usize;
    let p = JParams::new(0.5, 1.0).expect("valid");
    let a = random_j_field(&mut r, &g, &bx, &p, count, true).expect("sampled");
    let b = random_j_field(&mut r, &g, &bx, &p, count, true).expect("sampled");
    (a, b)
}

/// Spatial data and a time-sampled forcing on a uniform grid of `steps`.
pub fn heat_inputs(n: usize, k: u32, steps: usize, seed: u64) -> (FourierField, FourierField, Arc<TimeGrid>) {
    let mut r = rng(seed);
    let g = TorusGeometry::unit(n);
    let bx = ModeBox::uniform(n, k);
    let grid = Arc::new(TimeGrid::uniform(1.0, steps).expect("valid"));
    let count = bx.capacity() as usize / 2;
    let phi = random_j_field(&mut r, &g, &bx, &JParams::new(0.5, 1.0).expect("valid"), count, true)
        .expect("sampled");
    let f = random_k_field(&mut r, &g, &grid, &bx, &KParams::new(1.0, 0.5, 1.0).expect("valid"), count, true)
        .expect("sampled");
    (phi, f, grid)
}

/// The shipped small-swirl problem.
pub fn small_swirl() -> TorusProblem {
    let text = include_str!("../../core/fixtures/small-swirl.json");
    ProblemDocument::from_json(text)
        .and_then(|d| d.build(&ProblemOverrides::default()))
        .expect("fixture builds")
}
