use std::path::PathBuf;

use crate::astro::MoonId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(
        "spacecraft orbit is not elliptic (v = {speed_kms:.6} km/s, escape = {escape_kms:.6} km/s)"
    )]
    HyperbolicOrbit { speed_kms: f64, escape_kms: f64 },

    #[error("radius {r_km:.3} km outside [{rp_km:.3}, {ra_km:.3}] km")]
    RadiusOutOfRange { r_km: f64, rp_km: f64, ra_km: f64 },

    #[error("resonance {family} cannot be flown at V_inf = {v_inf_mps:.3} m/s")]
    InfeasibleResonance { family: String, v_inf_mps: f64 },

    #[error("root finder did not converge for {family} at V_inf = {v_inf_mps:.3} m/s")]
    NoConvergence { family: String, v_inf_mps: f64 },

    #[error("no ballistic seed for {family} at V_inf = {v_inf_mps:.3} m/s")]
    SeedInfeasible { family: String, v_inf_mps: f64 },

    #[error("leg solver diverged for {family} at V_inf = {v_inf_mps:.3} m/s: {reason}")]
    SolverDiverged {
        family: String,
        v_inf_mps: f64,
        reason: String,
    },

    #[error("V_inf = {v_inf_mps:.3} m/s outside recorded span of {family}")]
    OutOfSpan { family: String, v_inf_mps: f64 },

    #[error("|dV| = {dv_mps:.3} m/s exceeds the {cap_mps} m/s leg cap")]
    DeltaVCapExceeded { dv_mps: f64, cap_mps: f64 },

    #[error("arrival V_inf {v_inf_arr_mps:.3} m/s below family floor {floor_mps:.3} m/s")]
    BelowFamilyFloor { v_inf_arr_mps: f64, floor_mps: f64 },

    #[error("no tour reached the end of the {0:?} phase")]
    EmptyFront(MoonId),

    #[error("inconsistent parent chain: {0}")]
    InconsistentChain(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("unknown tour id {0}")]
    UnknownTourId(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
