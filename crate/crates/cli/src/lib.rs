//! Command implementations behind the `moontour` binary: database
//! generation, tour runs, pump-V_inf maps and tour reports, all writing
//! into one results directory (see [`output`]).

pub mod commands;
pub mod map;
pub mod output;
pub mod report;

pub use commands::{
    check_reproducible, cmd_gen_db, cmd_map, cmd_report, cmd_tour, generate_database,
    load_databases, tour_moons, with_workers, DbSummary, MapOutput, TourRun,
};
pub use output::Layout;

use moontour_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_EMPTY_FRONT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::EmptyFront(_) => EXIT_EMPTY_FRONT,
        Error::Parse { .. } | Error::Validation(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

/// Environment variable naming the default results directory.
pub const OUT_ENV: &str = "MOONTOUR_OUT";

/// Default results directory when neither `--out` nor the config sets one.
pub const DEFAULT_OUT: &str = "moontour-out";
