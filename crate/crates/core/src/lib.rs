//! Multi-objective design of resonance-hopping moon tours in the Saturnian
//! system, from Titan down to Enceladus orbit insertion.
//!
//! The crate is organised bottom-up:
//!
//! * [`astro`]: constants, flyby geometry and planar Kepler propagation.
//! * [`resonance`]: ballistic resonant transfers and pump-V_inf map samples.
//! * [`vilt`]: the single-impulse leg solver, the leveraging database and
//!   its linear model.
//! * [`pathfinder`]: grid-based dynamic programming with Pareto pruning.
//! * [`config`]: run configuration.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
    }};
}

pub mod astro;
pub mod config;
pub mod error;
pub mod numfmt;
pub mod pathfinder;
pub mod resonance;
pub mod vilt;

pub use astro::{FlybyState, MoonId, MoonParams, SearchBounds, SystemModel};
pub use config::{load_config, RunConfig};
pub use error::{Error, Result};
