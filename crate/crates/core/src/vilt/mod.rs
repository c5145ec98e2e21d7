//! V_inf-leveraging transfers: the leg solver, the precomputed database
//! and its linear model.

pub mod database;
pub mod tpbvp;

pub use database::{
    build_database, build_record, leg_from_departure, vinf_grid, DatabaseBuild, FamilyTable,
    LegEstimate, ViltDatabase, ViltRecord,
};
pub use tpbvp::{solve_leg, LegProblem, OptimalLeg};
