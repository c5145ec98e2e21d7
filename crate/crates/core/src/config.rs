//! Run configuration: a flat JSON object whose keys override the defaults.
//!
//! ```json
//! { "tof_cap_years": 2.0, "rhea.vinf_max_mps": 1800, "workers": 4 }
//! ```
//!
//! Per-moon search bounds use dotted keys `<moon>.vinf_min_mps`,
//! `<moon>.vinf_max_mps` and `<moon>.max_m`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::astro::constants::{GM_SATURN, SEARCH_BOUNDS};
use crate::astro::{MoonId, SearchBounds, SystemModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// km^3/s^2
    pub gm_saturn: f64,
    pub initial_moon: MoonId,
    pub initial_vinf_mps: f64,
    pub initial_alpha_deg: f64,
    pub tof_cap_years: f64,
    pub dp_grid_step_mps: f64,
    pub db_grid_step_mps: f64,
    pub bin_tof_days: f64,
    pub bin_dv_mps: f64,
    /// The pump-angle bin is this fraction of the maximum bend angle.
    pub bin_alpha_fraction: f64,
    pub bin_vinf_mps: f64,
    pub dv_cap_mps: f64,
    pub eoi_trigger_vinf_mps: f64,
    pub eoi_altitude_km: f64,
    /// 0 disables the cap.
    pub max_flybys_per_moon: u32,
    /// Leveraging ΔV between ticks on pump-V_inf maps.
    pub map_tick_dv_mps: f64,
    pub bounds: [SearchBounds; 5],
    /// 0 uses every available core.
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gm_saturn: GM_SATURN,
            initial_moon: MoonId::Titan,
            initial_vinf_mps: 1460.0,
            initial_alpha_deg: 50.0,
            tof_cap_years: 3.0,
            dp_grid_step_mps: 30.0,
            db_grid_step_mps: 30.0,
            bin_tof_days: 5.0,
            bin_dv_mps: 1.0,
            bin_alpha_fraction: 0.25,
            bin_vinf_mps: 10.0,
            dv_cap_mps: 100.0,
            eoi_trigger_vinf_mps: 450.0,
            eoi_altitude_km: 100.0,
            max_flybys_per_moon: 40,
            map_tick_dv_mps: 15.0,
            bounds: SEARCH_BOUNDS,
            workers: 0,
            output_dir: None,
        }
    }
}

pub const DAYS_PER_YEAR: f64 = 365.25;

impl RunConfig {
    pub fn system(&self) -> SystemModel {
        SystemModel::with_gm(self.gm_saturn)
    }

    pub fn bounds_of(&self, moon: MoonId) -> &SearchBounds {
        &self.bounds[moon.index()]
    }

    pub fn tof_cap_days(&self) -> f64 {
        self.tof_cap_years * DAYS_PER_YEAR
    }

    /// Check every invariant; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gm_saturn", self.gm_saturn),
            ("tof_cap_years", self.tof_cap_years),
            ("dp_grid_step_mps", self.dp_grid_step_mps),
            ("db_grid_step_mps", self.db_grid_step_mps),
            ("bin_tof_days", self.bin_tof_days),
            ("bin_dv_mps", self.bin_dv_mps),
            ("bin_alpha_fraction", self.bin_alpha_fraction),
            ("bin_vinf_mps", self.bin_vinf_mps),
            ("dv_cap_mps", self.dv_cap_mps),
            ("eoi_trigger_vinf_mps", self.eoi_trigger_vinf_mps),
            ("eoi_altitude_km", self.eoi_altitude_km),
            ("map_tick_dv_mps", self.map_tick_dv_mps),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "{key} must be positive, got {v}"
                )));
            }
        }
        if !(self.initial_vinf_mps.is_finite() && self.initial_vinf_mps >= 0.0) {
            return Err(Error::Validation(
                "initial_vinf_mps must be non-negative".into(),
            ));
        }
        if self.initial_alpha_deg.is_nan() || self.initial_alpha_deg.abs() > 180.0 {
            return Err(Error::Validation(
                "initial_alpha_deg must lie in [-180, 180]".into(),
            ));
        }
        for id in MoonId::ALL {
            let b = self.bounds_of(id);
            let k = id.key();
            if !(b.v_inf_min_mps.is_finite() && b.v_inf_min_mps >= 0.0) {
                return Err(Error::Validation(format!(
                    "{k}.vinf_min_mps must be non-negative"
                )));
            }
            if !(b.v_inf_max_mps.is_finite() && b.v_inf_max_mps > b.v_inf_min_mps) {
                return Err(Error::Validation(format!(
                    "{k}.vinf_max_mps must exceed {k}.vinf_min_mps"
                )));
            }
            if b.max_m == 0 {
                return Err(Error::Validation(format!("{k}.max_m must be positive")));
            }
        }
        Ok(())
    }

    /// Parse configuration text. Empty text yields the defaults.
    pub fn from_json(text: &str, source: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        if text.trim().is_empty() {
            return Ok(cfg);
        }
        let parse_err = |message: String| Error::Parse {
            path: source.to_path_buf(),
            message,
        };
        let map: Map<String, Value> = serde_json::from_str(text)
            .map_err(|e| parse_err(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        for (key, value) in &map {
            let num = || {
                value
                    .as_f64()
                    .ok_or_else(|| parse_err(format!("field '{key}': expected a number")))
            };
            let count = || {
                value.as_u64().ok_or_else(|| {
                    parse_err(format!("field '{key}': expected a non-negative integer"))
                })
            };
            match key.as_str() {
                "gm_saturn" => cfg.gm_saturn = num()?,
                "initial_moon" => {
                    cfg.initial_moon = value
                        .as_str()
                        .and_then(MoonId::parse)
                        .ok_or_else(|| parse_err(format!("field '{key}': expected a moon name")))?
                }
                "initial_vinf_mps" => cfg.initial_vinf_mps = num()?,
                "initial_alpha_deg" => cfg.initial_alpha_deg = num()?,
                "tof_cap_years" => cfg.tof_cap_years = num()?,
                "dp_grid_step_mps" => cfg.dp_grid_step_mps = num()?,
                "db_grid_step_mps" => cfg.db_grid_step_mps = num()?,
                "bin_tof_days" => cfg.bin_tof_days = num()?,
                "bin_dv_mps" => cfg.bin_dv_mps = num()?,
                "bin_alpha_fraction" => cfg.bin_alpha_fraction = num()?,
                "bin_vinf_mps" => cfg.bin_vinf_mps = num()?,
                "dv_cap_mps" => cfg.dv_cap_mps = num()?,
                "eoi_trigger_vinf_mps" => cfg.eoi_trigger_vinf_mps = num()?,
                "eoi_altitude_km" => cfg.eoi_altitude_km = num()?,
                "max_flybys_per_moon" => cfg.max_flybys_per_moon = count()? as u32,
                "map_tick_dv_mps" => cfg.map_tick_dv_mps = num()?,
                "workers" => cfg.workers = count()? as usize,
                "output_dir" => {
                    cfg.output_dir = Some(PathBuf::from(value.as_str().ok_or_else(|| {
                        parse_err(format!("field '{key}': expected a path string"))
                    })?))
                }
                other => {
                    let (moon, field) = other
                        .split_once('.')
                        .and_then(|(m, f)| Some((MoonId::parse(m)?, f)))
                        .ok_or_else(|| parse_err(format!("unknown field '{other}'")))?;
                    let b = &mut cfg.bounds[moon.index()];
                    match field {
                        "vinf_min_mps" => b.v_inf_min_mps = num()?,
                        "vinf_max_mps" => b.v_inf_max_mps = num()?,
                        "max_m" => b.max_m = count()? as u32,
                        _ => return Err(parse_err(format!("unknown field '{other}'"))),
                    }
                }
            }
        }
        Ok(cfg)
    }

    /// Every key with its effective value, in the format [`RunConfig::from_json`] reads.
    pub fn to_json(&self) -> String {
        let mut map = Map::new();
        let mut put = |k: &str, v: Value| {
            map.insert(k.to_string(), v);
        };
        put("gm_saturn", self.gm_saturn.into());
        put("initial_moon", self.initial_moon.key().into());
        put("initial_vinf_mps", self.initial_vinf_mps.into());
        put("initial_alpha_deg", self.initial_alpha_deg.into());
        put("tof_cap_years", self.tof_cap_years.into());
        put("dp_grid_step_mps", self.dp_grid_step_mps.into());
        put("db_grid_step_mps", self.db_grid_step_mps.into());
        put("bin_tof_days", self.bin_tof_days.into());
        put("bin_dv_mps", self.bin_dv_mps.into());
        put("bin_alpha_fraction", self.bin_alpha_fraction.into());
        put("bin_vinf_mps", self.bin_vinf_mps.into());
        put("dv_cap_mps", self.dv_cap_mps.into());
        put("eoi_trigger_vinf_mps", self.eoi_trigger_vinf_mps.into());
        put("eoi_altitude_km", self.eoi_altitude_km.into());
        put("max_flybys_per_moon", self.max_flybys_per_moon.into());
        put("map_tick_dv_mps", self.map_tick_dv_mps.into());
        put("workers", self.workers.into());
        if let Some(dir) = &self.output_dir {
            put("output_dir", dir.display().to_string().into());
        }
        for id in MoonId::ALL {
            let b = self.bounds_of(id);
            put(
                &format!("{}.vinf_min_mps", id.key()),
                b.v_inf_min_mps.into(),
            );
            put(
                &format!("{}.vinf_max_mps", id.key()),
                b.v_inf_max_mps.into(),
            );
            put(&format!("{}.max_m", id.key()), b.max_m.into());
        }
        serde_json::to_string_pretty(&Value::Object(map)).expect("plain JSON values")
    }
}

/// Read, parse and validate a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = RunConfig::from_json(&text, path)?;
    cfg.validate()?;
    Ok(cfg)
}
