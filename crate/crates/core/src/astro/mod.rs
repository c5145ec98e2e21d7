//! Two-body primitives for a circular-coplanar moon system.
//!
//! Interfaces take speeds in m/s and angles in degrees where they mirror
//! flyby tables; the internals work in km, km/s, seconds and radians.

pub mod constants;
pub mod kepler;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoonId {
    Titan,
    Rhea,
    Dione,
    Tethys,
    Enceladus,
}

impl MoonId {
    pub const ALL: [MoonId; 5] = [
        MoonId::Titan,
        MoonId::Rhea,
        MoonId::Dione,
        MoonId::Tethys,
        MoonId::Enceladus,
    ];

    /// Position in tour order, outermost first.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<MoonId> {
        Self::ALL.get(i).copied()
    }

    /// The next moon inward, if any.
    pub fn next(self) -> Option<MoonId> {
        Self::from_index(self.index() + 1)
    }

    pub fn key(self) -> &'static str {
        match self {
            MoonId::Titan => "titan",
            MoonId::Rhea => "rhea",
            MoonId::Dione => "dione",
            MoonId::Tethys => "tethys",
            MoonId::Enceladus => "enceladus",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MoonId::Titan => "Titan",
            MoonId::Rhea => "Rhea",
            MoonId::Dione => "Dione",
            MoonId::Tethys => "Tethys",
            MoonId::Enceladus => "Enceladus",
        }
    }

    pub fn parse(s: &str) -> Option<MoonId> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|m| m.key() == s)
    }
}

impl fmt::Display for MoonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical and orbital constants for one moon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoonParams {
    pub id: MoonId,
    /// Semimajor axis, km.
    pub a_km: f64,
    /// Eccentricity (stored, not used by the dynamics).
    pub e: f64,
    /// Inclination, deg (stored, not used by the dynamics).
    pub i_deg: f64,
    pub radius_km: f64,
    /// Tabulated orbital period, days.
    pub period_days: f64,
    /// Gravitational parameter, km^3/s^2.
    pub gm: f64,
    pub min_flyby_alt_km: f64,
}

/// V_inf window and revolution limit used to build a moon's leg database.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub v_inf_min_mps: f64,
    pub v_inf_max_mps: f64,
    pub max_m: u32,
}

impl SearchBounds {
    pub fn contains(&self, v_inf_mps: f64) -> bool {
        v_inf_mps >= self.v_inf_min_mps - 1e-9 && v_inf_mps <= self.v_inf_max_mps + 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    /// Saturn gravitational parameter, km^3/s^2.
    pub gm_saturn: f64,
    pub moons: [MoonParams; 5],
}

impl Default for SystemModel {
    fn default() -> Self {
        Self::saturn()
    }
}

impl SystemModel {
    pub fn saturn() -> Self {
        Self {
            gm_saturn: constants::GM_SATURN,
            moons: constants::MOONS,
        }
    }

    pub fn with_gm(gm_saturn: f64) -> Self {
        Self {
            gm_saturn,
            ..Self::saturn()
        }
    }

    pub fn moon(&self, id: MoonId) -> &MoonParams {
        &self.moons[id.index()]
    }

    /// Circular speed of a moon, km/s.
    pub fn moon_speed(&self, id: MoonId) -> f64 {
        circular_velocity(self.moon(id), self)
    }

    /// Mean motion of a moon, rad/s.
    pub fn moon_mean_motion(&self, id: MoonId) -> f64 {
        let a = self.moon(id).a_km;
        (self.gm_saturn / (a * a * a)).sqrt()
    }

    /// Kepler period of a moon's circular orbit, seconds.
    pub fn moon_period_s(&self, id: MoonId) -> f64 {
        2.0 * PI / self.moon_mean_motion(id)
    }
}

/// Elliptic Saturn-centred orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicOrbit {
    pub a_km: f64,
    pub e: f64,
    /// Specific angular momentum, km^2/s.
    pub h: f64,
    pub gm: f64,
}

impl ConicOrbit {
    pub fn periapsis_km(&self) -> f64 {
        self.a_km * (1.0 - self.e)
    }

    pub fn apoapsis_km(&self) -> f64 {
        self.a_km * (1.0 + self.e)
    }

    pub fn semi_latus_rectum_km(&self) -> f64 {
        self.h * self.h / self.gm
    }

    pub fn period_s(&self) -> f64 {
        2.0 * PI * (self.a_km.powi(3) / self.gm).sqrt()
    }

    /// Radius at a true anomaly in degrees.
    pub fn radius_at(&self, f_deg: f64) -> f64 {
        self.semi_latus_rectum_km() / (1.0 + self.e * f_deg.to_radians().cos())
    }
}

/// Encounter state at a flyby: excess speed and signed pump angle.
///
/// Positive pump angles are outbound encounters, negative inbound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlybyState {
    pub v_inf_mps: f64,
    pub alpha_deg: f64,
}

impl FlybyState {
    pub fn new(v_inf_mps: f64, alpha_deg: f64) -> Self {
        debug_assert!(v_inf_mps >= 0.0 && alpha_deg.abs() <= 180.0);
        Self {
            v_inf_mps,
            alpha_deg,
        }
    }

    /// +1 outbound, -1 inbound.
    pub fn direction(&self) -> i8 {
        if self.alpha_deg < 0.0 {
            -1
        } else {
            1
        }
    }
}

/// Circular speed of a moon around Saturn, km/s.
pub fn circular_velocity(moon: &MoonParams, sys: &SystemModel) -> f64 {
    (sys.gm_saturn / moon.a_km).sqrt()
}

/// Spacecraft speed after a flyby from the law of cosines, km/s.
pub fn sc_speed_after_flyby(v_moon_kms: f64, v_inf_kms: f64, alpha_deg: f64) -> f64 {
    let c = alpha_deg.to_radians().cos();
    (v_moon_kms * v_moon_kms + v_inf_kms * v_inf_kms + 2.0 * v_moon_kms * v_inf_kms * c)
        .max(0.0)
        .sqrt()
}

/// Specific angular momentum after a flyby at radius `r_km`, km^2/s.
pub fn sc_angular_momentum(r_km: f64, v_moon_kms: f64, v_inf_kms: f64, alpha_deg: f64) -> f64 {
    r_km * (v_moon_kms + v_inf_kms * alpha_deg.to_radians().cos())
}

/// Saturn-centred orbit leaving a moon at the given encounter state.
pub fn conic_from_flyby(
    moon: &MoonParams,
    sys: &SystemModel,
    state: FlybyState,
) -> Result<ConicOrbit> {
    let r = moon.a_km;
    let v_m = circular_velocity(moon, sys);
    let v_inf = state.v_inf_mps / 1000.0;
    conic_at_radius(r, v_m, v_inf, state.alpha_deg.to_radians(), sys.gm_saturn)
}

/// Orbit through radius `r` where the local circular speed is `v_m`,
/// given excess speed and pump angle (radians). All km and km/s.
pub(crate) fn conic_at_radius(
    r: f64,
    v_m: f64,
    v_inf: f64,
    alpha: f64,
    gm: f64,
) -> Result<ConicOrbit> {
    let c = alpha.cos();
    let v2 = v_m * v_m + v_inf * v_inf + 2.0 * v_m * v_inf * c;
    let h = r * (v_m + v_inf * c);
    let energy_term = 2.0 / r - v2 / gm;
    if energy_term <= 0.0 {
        return Err(Error::HyperbolicOrbit {
            speed_kms: v2.sqrt(),
            escape_kms: (2.0 * gm / r).sqrt(),
        });
    }
    let a = 1.0 / energy_term;
    let e2 = 1.0 - h * h / (a * gm);
    Ok(ConicOrbit {
        a_km: a,
        e: e2.max(0.0).sqrt(),
        h,
        gm,
    })
}

/// Largest pump-angle change a single unpowered flyby can deliver, deg.
pub fn max_bend_angle(moon: &MoonParams, v_inf_mps: f64) -> f64 {
    max_bend_angle_at(moon, v_inf_mps, moon.min_flyby_alt_km)
}

pub(crate) fn max_bend_angle_at(moon: &MoonParams, v_inf_mps: f64, altitude_km: f64) -> f64 {
    let mu = (moon.radius_km + altitude_km) / moon.gm;
    let v = v_inf_mps / 1000.0;
    (2.0 * (1.0 / (1.0 + mu * v * v)).asin()).to_degrees()
}

/// Flyby altitude that produces exactly `bend_deg` of pump change.
/// Returns `f64::INFINITY` for a zero bend.
pub fn flyby_altitude_for_bend(moon: &MoonParams, v_inf_mps: f64, bend_deg: f64) -> f64 {
    let half = (bend_deg.abs() / 2.0).to_radians();
    if half <= 0.0 {
        return f64::INFINITY;
    }
    let v = v_inf_mps / 1000.0;
    if v <= 0.0 {
        return f64::INFINITY;
    }
    let mu = (1.0 / half.sin() - 1.0) / (v * v);
    mu * moon.gm - moon.radius_km
}

/// True anomaly magnitude where an orbit crosses radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueAnomaly {
    pub f_deg: f64,
    /// Set for a circular orbit, where the anomaly is undefined and 0 is returned.
    pub circular: bool,
}

pub fn true_anomaly_at_radius(orbit: &ConicOrbit, r_km: f64) -> Result<TrueAnomaly> {
    if orbit.e < 1e-12 {
        return Ok(TrueAnomaly {
            f_deg: 0.0,
            circular: true,
        });
    }
    let (rp, ra) = (orbit.periapsis_km(), orbit.apoapsis_km());
    let slack = 1e-9 * ra;
    if r_km < rp - slack || r_km > ra + slack {
        return Err(Error::RadiusOutOfRange {
            r_km,
            rp_km: rp,
            ra_km: ra,
        });
    }
    let c = ((orbit.h * orbit.h / (r_km * orbit.gm) - 1.0) / orbit.e).clamp(-1.0, 1.0);
    Ok(TrueAnomaly {
        f_deg: c.acos().to_degrees(),
        circular: false,
    })
}

/// Time since periapsis at true anomaly `f_deg` (signed, seconds).
pub fn time_from_periapsis(orbit: &ConicOrbit, f_deg: f64, gm: f64) -> f64 {
    let n = (gm / orbit.a_km.powi(3)).sqrt();
    kepler::mean_anomaly_unwrapped(f_deg.to_radians(), orbit.e) / n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> SystemModel {
        SystemModel::saturn()
    }

    #[test]
    fn circular_velocity_values() {
        let s = sys();
        assert_close!(circular_velocity(s.moon(MoonId::Rhea), &s), 8.48301, 5e-5);
        assert_close!(circular_velocity(s.moon(MoonId::Titan), &s), 5.5717, 5e-4);
        let mut fake = *s.moon(MoonId::Rhea);
        fake.a_km = s.gm_saturn;
        assert_close!(circular_velocity(&fake, &s), 1.0, 1e-15);
    }

    #[test]
    fn titan_period_from_speed_matches_table() {
        let s = sys();
        let t = s.moon(MoonId::Titan);
        let days = 2.0 * PI * t.a_km / circular_velocity(t, &s) / SECONDS_PER_DAY;
        assert!((days - 15.945).abs() / 15.945 < 5e-3);
    }

    #[test]
    fn speed_after_flyby() {
        assert_close!(sc_speed_after_flyby(8.0, 0.0, 37.0), 8.0, 1e-15);
        assert_close!(sc_speed_after_flyby(8.0, 1.5, 0.0), 9.5, 1e-14);
        assert_close!(sc_speed_after_flyby(8.4831, 1.0, 90.0), 8.5417, 2e-4);
    }

    #[test]
    fn angular_momentum_after_flyby() {
        assert_close!(sc_angular_momentum(1000.0, 8.0, 0.0, 12.0), 8000.0, 1e-9);
        assert_close!(sc_angular_momentum(1000.0, 8.0, 2.0, 90.0), 8000.0, 1e-9);
        assert_close!(
            sc_angular_momentum(527108.0, 8.4831, 1.0, 60.0),
            527108.0 * 8.9831,
            1e-6
        );
    }

    #[test]
    fn zero_excess_speed_is_moon_orbit() {
        let s = sys();
        for m in &s.moons {
            let o = conic_from_flyby(m, &s, FlybyState::new(0.0, 0.0)).unwrap();
            assert!((o.a_km - m.a_km).abs() / m.a_km < 1e-12);
            assert!(o.e < 1e-6);
        }
    }

    #[test]
    fn escape_is_hyperbolic() {
        let s = sys();
        let err = conic_from_flyby(s.moon(MoonId::Rhea), &s, FlybyState::new(4000.0, 0.0));
        assert!(matches!(err, Err(Error::HyperbolicOrbit { .. })));
    }

    #[test]
    fn bend_angle_values() {
        let s = sys();
        assert_close!(max_bend_angle(s.moon(MoonId::Enceladus), 1e-9), 180.0, 1e-9);
        assert_close!(
            max_bend_angle(s.moon(MoonId::Enceladus), 450.0),
            13.07,
            0.01
        );
        assert_close!(max_bend_angle(s.moon(MoonId::Titan), 1460.0), 60.3, 0.05);
    }

    #[test]
    fn altitude_inverts_bend() {
        let s = sys();
        let m = s.moon(MoonId::Rhea);
        for alt in [50.0, 213.0, 4000.0] {
            let bend = max_bend_angle_at(m, 920.0, alt);
            assert_close!(flyby_altitude_for_bend(m, 920.0, bend), alt, 1e-6);
        }
        assert!(flyby_altitude_for_bend(m, 920.0, 0.0).is_infinite());
    }

    #[test]
    fn anomaly_at_apses_and_latus_rectum() {
        let o = ConicOrbit {
            a_km: 600_000.0,
            e: 0.2,
            h: (GM * 600_000.0 * (1.0 - 0.04_f64)).sqrt(),
            gm: GM,
        };
        assert_close!(
            true_anomaly_at_radius(&o, o.periapsis_km()).unwrap().f_deg,
            0.0,
            1e-5
        );
        assert_close!(
            true_anomaly_at_radius(&o, o.apoapsis_km()).unwrap().f_deg,
            180.0,
            1e-5
        );
        assert_close!(
            true_anomaly_at_radius(&o, o.semi_latus_rectum_km())
                .unwrap()
                .f_deg,
            90.0,
            1e-9
        );
        assert!(matches!(
            true_anomaly_at_radius(&o, 2.0 * o.apoapsis_km()),
            Err(Error::RadiusOutOfRange { .. })
        ));
        let circ = ConicOrbit { e: 0.0, ..o };
        assert!(true_anomaly_at_radius(&circ, 600_000.0).unwrap().circular);
    }

    const GM: f64 = constants::GM_SATURN;

    #[test]
    fn periapsis_time_landmarks() {
        let o = ConicOrbit {
            a_km: 600_000.0,
            e: 0.3,
            h: (GM * 600_000.0 * (1.0 - 0.09_f64)).sqrt(),
            gm: GM,
        };
        assert_eq!(time_from_periapsis(&o, 0.0, GM), 0.0);
        assert_close!(time_from_periapsis(&o, 180.0, GM), o.period_s() / 2.0, 1e-6);
        assert_close!(
            time_from_periapsis(&o, 73.0, GM),
            -time_from_periapsis(&o, -73.0, GM),
            1e-9
        );
        let c = ConicOrbit { e: 0.0, ..o };
        assert_close!(time_from_periapsis(&c, 90.0, GM), c.period_s() / 4.0, 1e-6);
    }
}
