//! Ballistic resonant transfers `[M, N, p, q]` and pump-V_inf map samples.
//!
//! A family re-encounters the same moon after `M` moon revolutions and
//! roughly `N` spacecraft revolutions, leaving inbound (`p = -1`) or
//! outbound (`p = +1`) and arriving with orientation `q`. For `p == q` the
//! transfer is an exact resonance with a closed-form pump angle; for
//! `p != q` the pump angle is the root of a time-of-flight mismatch.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::astro::{self, kepler, MoonParams, SearchBounds, SystemModel, SECONDS_PER_DAY};
use crate::error::{Error, Result};

pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_FD_STEP: f64 = 1e-7;
/// Root tolerance on the time-of-flight mismatch, days.
pub const ROOT_TOL_DAYS: f64 = 1e-9;

/// Inbound (-1) or outbound (+1) encounter.
pub type Orientation = i8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResonanceFamily {
    pub m: u32,
    pub n: u32,
    pub p: Orientation,
    pub q: Orientation,
}

impl ResonanceFamily {
    pub fn new(m: u32, n: u32, p: Orientation, q: Orientation) -> Self {
        assert!(m >= 1 && n >= 1, "resonance needs M, N >= 1");
        assert!(p.abs() == 1 && q.abs() == 1, "p and q must be +1 or -1");
        Self { m, n, p, q }
    }

    pub fn exterior(&self) -> bool {
        self.m > self.n
    }

    pub fn interior(&self) -> bool {
        self.m < self.n
    }

    pub fn symmetric(&self) -> bool {
        self.p == self.q
    }

    /// Revolution correction for the number of spacecraft periapses
    /// passed between encounters.
    pub fn delta(&self) -> i32 {
        if self.m > self.n || (self.m == self.n && self.p == -1 && self.q == 1) {
            0
        } else {
            self.p as i32
        }
    }

    /// Revolution correction entering the transfer angle and flight times.
    /// Exact resonances (`p == q`) always span whole revolutions.
    pub fn transfer_delta(&self) -> i32 {
        if self.symmetric() {
            0
        } else {
            self.delta()
        }
    }

    /// Stable sort key: (M, N, p, q).
    pub fn sort_key(&self) -> (u32, u32, i8, i8) {
        (self.m, self.n, self.p, self.q)
    }

    /// The same family with the exact resonance [M, N, +1, +1].
    pub fn ratio_only(&self) -> Self {
        Self::new(self.m, self.n, 1, 1)
    }
}

impl fmt::Display for ResonanceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |o: i8| if o > 0 { '+' } else { '-' };
        write!(f, "{}:{}^{{{},{}}}", self.m, self.n, s(self.p), s(self.q))
    }
}

/// Ballistic resonant transfer at a given V_inf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallisticSolution {
    pub family: ResonanceFamily,
    pub v_inf_mps: f64,
    /// Pump angle magnitude, deg.
    pub alpha_deg: f64,
    pub tof_days: f64,
    /// Magnitude of the true anomaly at the encounter, deg.
    pub f_deg: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    /// Revolution correction used in the transfer angle.
    pub delta: i32,
    pub orbit: astro::ConicOrbit,
}

impl BallisticSolution {
    /// Total transfer angle, deg.
    pub fn theta_deg(&self) -> f64 {
        transfer_angle_deg(self.family, self.delta, self.f_deg)
    }

    /// Signed departure pump angle, deg.
    pub fn alpha_dep_deg(&self) -> f64 {
        self.family.p as f64 * self.alpha_deg
    }

    /// Signed arrival pump angle, deg.
    pub fn alpha_arr_deg(&self) -> f64 {
        self.family.q as f64 * self.alpha_deg
    }
}

fn transfer_angle_deg(family: ResonanceFamily, delta: i32, f_deg: f64) -> f64 {
    360.0 * (family.n as f64 + delta as f64) + (family.q as f64 - family.p as f64) * f_deg
}

/// Semimajor axis ratio a_SC / a_moon of an exact M:N resonance.
pub fn resonant_sma_ratio(m: u32, n: u32) -> f64 {
    (m as f64 / n as f64).powf(2.0 / 3.0)
}

/// Speed (km/s) of an exact M:N resonant orbit where it crosses the moon.
fn resonant_speed(moon: &MoonParams, sys: &SystemModel, m: u32, n: u32) -> f64 {
    let r = moon.a_km;
    let a_sc = r * resonant_sma_ratio(m, n);
    (sys.gm_saturn * (2.0 / r - 1.0 / a_sc)).sqrt()
}

/// V_inf interval (m/s) over which an exact M:N resonance exists.
///
/// The lower end is the family floor: pump angle 0 for exterior transfers,
/// 180 deg for interior ones.
pub fn resonant_vinf_interval(moon: &MoonParams, sys: &SystemModel, m: u32, n: u32) -> (f64, f64) {
    let v_m = astro::circular_velocity(moon, sys);
    let v_sc = resonant_speed(moon, sys, m, n);
    ((v_sc - v_m).abs() * 1000.0, (v_sc + v_m) * 1000.0)
}

fn cos_alpha_case1(moon: &MoonParams, sys: &SystemModel, m: u32, n: u32, v_inf_kms: f64) -> f64 {
    let v_m = astro::circular_velocity(moon, sys);
    let v_sc = resonant_speed(moon, sys, m, n);
    (v_sc * v_sc - v_m * v_m - v_inf_kms * v_inf_kms) / (2.0 * v_m * v_inf_kms)
}

fn infeasible(family: ResonanceFamily, v_inf_mps: f64) -> Error {
    Error::InfeasibleResonance {
        family: family.to_string(),
        v_inf_mps,
    }
}

fn encounter_anomaly(orbit: &astro::ConicOrbit, r: f64) -> f64 {
    astro::true_anomaly_at_radius(orbit, r)
        .map(|t| t.f_deg)
        .unwrap_or(if orbit.periapsis_km() >= r {
            0.0
        } else {
            180.0
        })
}

/// Closed-form ballistic solution for an exact resonance (`p == q`).
pub fn ballistic_case1(
    family: ResonanceFamily,
    moon: &MoonParams,
    sys: &SystemModel,
    v_inf_mps: f64,
) -> Result<BallisticSolution> {
    assert!(family.symmetric(), "case 1 needs p == q");
    let v_inf = v_inf_mps / 1000.0;
    if v_inf <= 0.0 {
        return Err(infeasible(family, v_inf_mps));
    }
    let c = cos_alpha_case1(moon, sys, family.m, family.n, v_inf);
    if !(-1.0..=1.0).contains(&c) {
        return Err(infeasible(family, v_inf_mps));
    }
    let alpha = c.acos();
    let v_m = astro::circular_velocity(moon, sys);
    let orbit = astro::conic_at_radius(moon.a_km, v_m, v_inf, alpha, sys.gm_saturn)?;
    let f_deg = encounter_anomaly(&orbit, moon.a_km);
    let tof_days = family.m as f64 * sys.moon_period_s(moon.id) / SECONDS_PER_DAY;
    Ok(finish(
        family,
        v_inf_mps,
        alpha.to_degrees(),
        tof_days,
        f_deg,
        0,
        orbit,
    ))
}

fn finish(
    family: ResonanceFamily,
    v_inf_mps: f64,
    alpha_deg: f64,
    tof_days: f64,
    f_deg: f64,
    delta: i32,
    orbit: astro::ConicOrbit,
) -> BallisticSolution {
    let mut sol = BallisticSolution {
        family,
        v_inf_mps,
        alpha_deg,
        tof_days,
        f_deg,
        theta1_deg: 0.0,
        theta2_deg: 0.0,
        delta,
        orbit,
    };
    let (t1, t2) = split_transfer_angle(&sol);
    sol.theta1_deg = t1;
    sol.theta2_deg = t2;
    sol
}

/// Spacecraft and moon flight times (seconds) for a non-symmetric family
/// flown with pump angle `alpha` (rad). `None` if the orbit is not elliptic.
struct Case2Eval {
    t_sc: f64,
    t_moon: f64,
    f: f64,
    orbit: astro::ConicOrbit,
}

fn case2_eval(
    family: ResonanceFamily,
    moon: &MoonParams,
    sys: &SystemModel,
    v_inf_kms: f64,
    alpha: f64,
) -> Option<Case2Eval> {
    let v_m = astro::circular_velocity(moon, sys);
    let gm = sys.gm_saturn;
    let orbit = astro::conic_at_radius(moon.a_km, v_m, v_inf_kms, alpha, gm).ok()?;
    if orbit.e <= 0.0 {
        return None;
    }
    let r = moon.a_km;
    let cf = ((orbit.h * orbit.h / (r * gm) - 1.0) / orbit.e).clamp(-1.0, 1.0);
    let f = cf.acos();
    let fp = family.p as f64 * f;
    let fq = family.q as f64 * f;
    let delta = family.transfer_delta() as f64;
    let n_sc = (gm / orbit.a_km.powi(3)).sqrt();
    let t_sc = (2.0 * PI * (family.n as f64 + delta) + kepler::mean_anomaly_unwrapped(fq, orbit.e)
        - kepler::mean_anomaly_unwrapped(fp, orbit.e))
        / n_sc;
    let t_moon = (2.0 * PI * (family.m as f64 + delta) + fq - fp) * r / v_m;
    Some(Case2Eval {
        t_sc,
        t_moon,
        f,
        orbit,
    })
}

/// Time-of-flight mismatch t_SC - t_moon in days, as a function of the
/// pump angle (rad). Exposed for root-bracketing checks.
pub fn case2_residual_days(
    family: ResonanceFamily,
    moon: &MoonParams,
    sys: &SystemModel,
    v_inf_mps: f64,
    alpha: f64,
) -> Option<f64> {
    case2_eval(family, moon, sys, v_inf_mps / 1000.0, alpha)
        .map(|e| (e.t_sc - e.t_moon) / SECONDS_PER_DAY)
}

/// Numerical ballistic solution for `p != q`, seeded by the exact
/// resonance with the same M:N.
pub fn ballistic_case2(
    family: ResonanceFamily,
    moon: &MoonParams,
    sys: &SystemModel,
    v_inf_mps: f64,
) -> Result<BallisticSolution> {
    assert!(!family.symmetric(), "case 2 needs p != q");
    let seed = ballistic_case1(family.ratio_only(), moon, sys, v_inf_mps)
        .map_err(|_| infeasible(family, v_inf_mps))?;
    let resid = |a: f64| case2_residual_days(family, moon, sys, v_inf_mps, a);

    let mut alpha = seed.alpha_deg.to_radians();
    let mut root = None;
    for _ in 0..NEWTON_MAX_ITER {
        let Some(r0) = resid(alpha) else { break };
        if r0.abs() < ROOT_TOL_DAYS {
            root = Some(alpha);
            break;
        }
        let (Some(rp), Some(rm)) = (resid(alpha + NEWTON_FD_STEP), resid(alpha - NEWTON_FD_STEP))
        else {
            break;
        };
        let d = (rp - rm) / (2.0 * NEWTON_FD_STEP);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = alpha - r0 / d;
        if !(0.0..=PI).contains(&next) {
            break;
        }
        alpha = next;
    }
    let alpha = match root {
        Some(a) => a,
        None => bisection_fallback(&resid, seed.alpha_deg.to_radians()).ok_or_else(|| {
            Error::NoConvergence {
                family: family.to_string(),
                v_inf_mps,
            }
        })?,
    };
    let eval = case2_eval(family, moon, sys, v_inf_mps / 1000.0, alpha).ok_or_else(|| {
        Error::NoConvergence {
            family: family.to_string(),
            v_inf_mps,
        }
    })?;
    Ok(finish(
        family,
        v_inf_mps,
        alpha.to_degrees(),
        eval.t_moon / SECONDS_PER_DAY,
        eval.f.to_degrees(),
        family.transfer_delta(),
        eval.orbit,
    ))
}

/// Bracket the sign change nearest `seed` on a uniform scan of (0, pi)
/// and bisect it.
fn bisection_fallback(resid: &impl Fn(f64) -> Option<f64>, seed: f64) -> Option<f64> {
    const SCAN: usize = 720;
    let grid: Vec<(f64, Option<f64>)> = (1..SCAN)
        .map(|i| {
            let a = PI * i as f64 / SCAN as f64;
            (a, resid(a))
        })
        .collect();
    let bracket = grid
        .windows(2)
        .filter_map(|w| match (w[0].1, w[1].1) {
            (Some(r0), Some(r1)) if r0.signum() != r1.signum() => Some((w[0].0, w[1].0, r0)),
            _ => None,
        })
        .min_by(|a, b| {
            let da = ((a.0 + a.1) / 2.0 - seed).abs();
            let db = ((b.0 + b.1) / 2.0 - seed).abs();
            da.partial_cmp(&db).unwrap_or(Ordering::Equal)
        })?;
    let (mut lo, mut hi, mut rlo) = bracket;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let rm = resid(mid)?;
        if rm.abs() < ROOT_TOL_DAYS * 1e-3 || hi - lo < 1e-15 {
            return Some(mid);
        }
        if rm.signum() == rlo.signum() {
            lo = mid;
            rlo = rm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Ballistic transfer for any family.
pub fn ballistic(
    family: ResonanceFamily,
    moon: &MoonParams,
    sys: &SystemModel,
    v_inf_mps: f64,
) -> Result<BallisticSolution> {
    if family.symmetric() {
        ballistic_case1(family, moon, sys, v_inf_mps)
    } else {
        ballistic_case2(family, moon, sys, v_inf_mps)
    }
}

/// Transfer angles before and after the leveraging maneuver, deg.
///
/// The maneuver sits at apoapsis for exterior transfers (and `[1,1,-1,+1]`)
/// and at periapsis otherwise, on the middle revolution.
pub fn split_transfer_angle(sol: &BallisticSolution) -> (f64, f64) {
    let fam = sol.family;
    let f_p = fam.p as f64 * sol.f_deg;
    let theta1 = 180.0 * (1.0 + fam.delta() as f64 + 2.0 * (fam.n / 2) as f64) - f_p;
    (theta1, sol.theta_deg() - theta1)
}

/// One point on a pump-V_inf map curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSample {
    pub family: ResonanceFamily,
    pub v_inf_mps: f64,
    pub alpha_deg: f64,
    pub tof_days: f64,
}

/// Ballistic curves for each family over a V_inf grid; infeasible points
/// are dropped. Output is sorted by (M, N, p, q, V_inf).
pub fn sample_pump_vinf_map(
    moon: &MoonParams,
    sys: &SystemModel,
    families: &[ResonanceFamily],
    v_inf_grid_mps: &[f64],
) -> Vec<MapSample> {
    let pairs: Vec<(ResonanceFamily, f64)> = families
        .iter()
        .flat_map(|&f| v_inf_grid_mps.iter().map(move |&v| (f, v)))
        .collect();
    let mut out: Vec<MapSample> = pairs
        .par_iter()
        .filter_map(|&(family, v)| {
            ballistic(family, moon, sys, v).ok().map(|s| MapSample {
                family,
                v_inf_mps: v,
                alpha_deg: s.alpha_deg,
                tof_days: s.tof_days,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.family
            .sort_key()
            .cmp(&b.family.sort_key())
            .then(a.v_inf_mps.total_cmp(&b.v_inf_mps))
    });
    out
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Families searched at a moon: every reduced M:N ratio flown as
/// `[M, N, +1, +1]` whose feasible V_inf interval overlaps the bounds, plus
/// the three distinct 1:1 variants.
pub fn search_families(
    moon: &MoonParams,
    sys: &SystemModel,
    bounds: &SearchBounds,
) -> Vec<ResonanceFamily> {
    let mut out = Vec::new();
    for m in 1..=bounds.max_m {
        // Interior families get slower with N; stop once the floor passes the window.
        for n in 1.. {
            let (floor, ceil) = resonant_vinf_interval(moon, sys, m, n);
            if n > m && floor > bounds.v_inf_max_mps {
                break;
            }
            if gcd(m, n) != 1 || floor > bounds.v_inf_max_mps || ceil < bounds.v_inf_min_mps {
                continue;
            }
            if m == n {
                out.push(ResonanceFamily::new(1, 1, 1, 1));
                out.push(ResonanceFamily::new(1, 1, 1, -1));
                out.push(ResonanceFamily::new(1, 1, -1, 1));
            } else {
                out.push(ResonanceFamily::new(m, n, 1, 1));
            }
        }
    }
    out.sort_by_key(|f| f.sort_key());
    out
}

/// Every `(p, q)` variant of every reduced ratio with `M <= max_m` that
/// can be flown inside the bounds; used for full pump-V_inf maps.
pub fn all_families(
    moon: &MoonParams,
    sys: &SystemModel,
    bounds: &SearchBounds,
) -> Vec<ResonanceFamily> {
    let mut out: Vec<ResonanceFamily> = search_families(moon, sys, bounds)
        .into_iter()
        .filter(|f| f.m != f.n)
        .flat_map(|f| {
            [(1, 1), (1, -1), (-1, 1), (-1, -1)].map(|(p, q)| ResonanceFamily::new(f.m, f.n, p, q))
        })
        .collect();
    for (p, q) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        out.push(ResonanceFamily::new(1, 1, p, q));
    }
    out.sort_by_key(|f| f.sort_key());
    out
}
