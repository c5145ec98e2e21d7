//! Planar Kepler propagation parameterised by transfer angle.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Position (km) and velocity (km/s) in the Saturn-centred orbit plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarState {
    pub r: Vector2<f64>,
    pub v: Vector2<f64>,
}

impl PlanarState {
    /// State of a spacecraft leaving a circular-orbit moon located at polar
    /// angle `phi`, with excess speed `v_inf` (km/s) and signed pump angle
    /// `alpha` (rad). The moon moves counter-clockwise.
    pub fn at_moon(a_moon: f64, v_moon: f64, phi: f64, v_inf: f64, alpha: f64) -> Self {
        let radial = Vector2::new(phi.cos(), phi.sin());
        let transverse = Vector2::new(-phi.sin(), phi.cos());
        let v = radial * (v_inf * alpha.sin()) + transverse * (v_moon + v_inf * alpha.cos());
        Self {
            r: radial * a_moon,
            v,
        }
    }
}

/// Mean anomaly continued across revolutions, so that it is a smooth,
/// increasing function of the unwrapped true anomaly `f` (rad).
pub fn mean_anomaly_unwrapped(f: f64, e: f64) -> f64 {
    let (s, c) = f.sin_cos();
    // Both atan2 calls share the sign of sin f, so E and the wrapped f
    // sit on the same branch.
    let fw = s.atan2(c);
    let k = ((f - fw) / (2.0 * PI)).round();
    let big_e = ((1.0 - e * e).sqrt() * s).atan2(e + c);
    big_e - e * big_e.sin() + 2.0 * PI * k
}

/// Propagate `state` through a transfer angle `dtheta` (rad, may be
/// negative or span several revolutions). Returns the new state and the
/// elapsed time in seconds (negative for backward propagation).
pub fn propagate_by_angle(state: &PlanarState, dtheta: f64, gm: f64) -> Result<(PlanarState, f64)> {
    let r = state.r.norm();
    let v2 = state.v.norm_squared();
    let h = state.r.x * state.v.y - state.r.y * state.v.x;
    let energy_term = 2.0 / r - v2 / gm;
    if energy_term <= 0.0 || h <= 0.0 {
        return Err(Error::HyperbolicOrbit {
            speed_kms: v2.sqrt(),
            escape_kms: (2.0 * gm / r).sqrt(),
        });
    }
    let a = 1.0 / energy_term;
    let rv = state.r.dot(&state.v);
    let e_vec = (state.r * (v2 - gm / r) - state.v * rv) / gm;
    let e = e_vec.norm();
    let omega = e_vec.y.atan2(e_vec.x);
    let phi0 = state.r.y.atan2(state.r.x);
    let mut f0 = phi0 - omega;
    f0 -= 2.0 * PI * ((f0 + PI) / (2.0 * PI)).floor();
    let f1 = f0 + dtheta;

    let p = h * h / gm;
    let r1 = p / (1.0 + e * f1.cos());
    let phi1 = omega + f1;
    let radial = Vector2::new(phi1.cos(), phi1.sin());
    let transverse = Vector2::new(-phi1.sin(), phi1.cos());
    let vr = gm / h * e * f1.sin();
    let vt = gm / h * (1.0 + e * f1.cos());

    let n = (gm / (a * a * a)).sqrt();
    let dt = (mean_anomaly_unwrapped(f1, e) - mean_anomaly_unwrapped(f0, e)) / n;
    Ok((
        PlanarState {
            r: radial * r1,
            v: radial * vr + transverse * vt,
        },
        dt,
    ))
}
