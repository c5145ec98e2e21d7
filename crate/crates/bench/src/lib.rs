//! Fixtures shared by the benchmarks.

use moontour_core::astro::constants::SEARCH_BOUNDS;
use moontour_core::pathfinder::ObjectiveVector;
use moontour_core::vilt::{build_database, ViltDatabase};
use moontour_core::{MoonId, SystemModel};

/// Rhea database on a coarse grid.
pub fn rhea_database(step_mps: f64) -> ViltDatabase {
    let sys = SystemModel::saturn();
    build_database(
        MoonId::Rhea,
        &sys,
        &SEARCH_BOUNDS[MoonId::Rhea.index()],
        step_mps,
    )
    .database
}

/// Deterministic pseudo-random objective vectors (xorshift).
pub fn objective_cloud(n: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut s = seed.max(1);
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n)
        .map(|_| {
            ObjectiveVector::new(
                1000.0 * next(),
                800.0 * next(),
                180.0 * next(),
                2000.0 * next(),
            )
        })
        .collect()
}
