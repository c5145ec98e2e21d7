//! Single-impulse multi-revolution leg between two encounters of the same
//! moon.
//!
//! The spacecraft leaves the moon at t = 0 with pump angle `alpha_dep` and
//! coasts through a transfer angle `theta1`. A second arc is propagated
//! backwards from the arrival encounter (pump `alpha_arr`, time `t_f`)
//! through `theta2`. The arcs must meet in position and time; the velocity
//! jump at the junction is the maneuver.
//!
//! The three matching conditions are solved exactly (Newton, 3x3) for
//! `(alpha_arr, t_f, theta2)` at every trial `(alpha_dep, theta1)`, and the
//! squared maneuver magnitude is minimised over those two free variables
//! with a damped Newton iteration.

use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3, Vector4};

use crate::astro::kepler::{propagate_by_angle, PlanarState};
use crate::astro::{MoonId, MoonParams, SystemModel, SECONDS_PER_DAY};
use crate::error::{Error, Result};
use crate::resonance::{self, ResonanceFamily};

/// Position match tolerance at the junction, km.
pub const POSITION_TOL_KM: f64 = 1.0;
/// Time match tolerance at the junction, days.
pub const TIME_TOL_DAYS: f64 = 1e-6;

const INNER_MAX_ITER: usize = 40;
const INNER_TOL: f64 = 1e-13;
const OUTER_MAX_ITER: usize = 80;
const THETA_FD_STEP: f64 = 1e-3;
const ALPHA_MAX_ITER: usize = 30;
const ALPHA_FD_STEP: f64 = 1e-7;
const OUTER_MAX_STEP: f64 = 0.05;
const RESTORE_MAX_ITER: usize = 60;
const CONTINUATION_STEP_MPS: f64 = 2.5;

/// One leg: family, mean excess speed and the symmetric split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegProblem {
    pub family: ResonanceFamily,
    pub moon: MoonId,
    pub v_inf_mps: f64,
    pub dv_inf_mps: f64,
}

impl LegProblem {
    pub fn v_inf_dep_mps(&self) -> f64 {
        self.v_inf_mps + self.dv_inf_mps
    }

    pub fn v_inf_arr_mps(&self) -> f64 {
        self.v_inf_mps - self.dv_inf_mps
    }
}

/// Locally optimal single-impulse leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalLeg {
    pub problem: LegProblem,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    /// Signed pump angles, deg.
    pub alpha_dep_deg: f64,
    pub alpha_arr_deg: f64,
    pub tof_days: f64,
    /// Maneuver magnitude, m/s.
    pub dv_mps: f64,
    pub dt1_days: f64,
    pub dt2_days: f64,
    pub position_mismatch_km: f64,
    pub time_mismatch_days: f64,
}

impl OptimalLeg {
    /// Maneuver carrying the sign of the V_inf split.
    pub fn signed_dv_mps(&self) -> f64 {
        if self.problem.dv_inf_mps < 0.0 {
            -self.dv_mps
        } else {
            self.dv_mps
        }
    }

    pub fn satisfies_constraints(&self) -> bool {
        self.position_mismatch_km < POSITION_TOL_KM && self.time_mismatch_days < TIME_TOL_DAYS
    }
}

struct Geometry {
    a: f64,
    v_m: f64,
    n_m: f64,
    gm: f64,
    v_dep: f64,
    v_arr: f64,
}

/// Matched arcs for one trial of the free variables.
#[derive(Clone, Copy)]
struct Matched {
    /// (alpha_arr, t_f, theta2)
    x: Vector3<f64>,
    junction: PlanarState,
    post: PlanarState,
    dt1: f64,
    dt2: f64,
}

impl Matched {
    fn jump(&self) -> Vector2<f64> {
        self.post.v - self.junction.v
    }

    fn dv(&self) -> f64 {
        self.jump().norm()
    }
}

impl Geometry {
    fn new(moon: &MoonParams, sys: &SystemModel, problem: &LegProblem) -> Self {
        Self {
            a: moon.a_km,
            v_m: sys.moon_speed(moon.id),
            n_m: sys.moon_mean_motion(moon.id),
            gm: sys.gm_saturn,
            v_dep: problem.v_inf_dep_mps() / 1000.0,
            v_arr: problem.v_inf_arr_mps() / 1000.0,
        }
    }

    fn forward(&self, alpha_dep: f64, theta1: f64) -> Option<(PlanarState, f64)> {
        let s0 = PlanarState::at_moon(self.a, self.v_m, 0.0, self.v_dep, alpha_dep);
        propagate_by_angle(&s0, theta1, self.gm).ok()
    }

    /// Arrival arc propagated back through `theta2`; returns the junction
    /// state and the (positive) coast time.
    fn backward(&self, x: &Vector3<f64>) -> Option<(PlanarState, f64)> {
        let (alpha_arr, t_f, theta2) = (x[0], x[1], x[2]);
        let sf = PlanarState::at_moon(self.a, self.v_m, self.n_m * t_f, self.v_arr, alpha_arr);
        let (s, dt) = propagate_by_angle(&sf, -theta2, self.gm).ok()?;
        Some((s, -dt))
    }

    fn residual(
        &self,
        junction: &PlanarState,
        dt1: f64,
        x: &Vector3<f64>,
    ) -> Option<(Vector3<f64>, PlanarState, f64)> {
        let (s2, dt2) = self.backward(x)?;
        let dr = (s2.r - junction.r) / self.a;
        let dt = (x[1] - dt2 - dt1) * self.n_m;
        Some((Vector3::new(dr.x, dr.y, dt), s2, dt2))
    }

    /// Solve the matching conditions for the arrival arc, starting at `x0`.
    fn match_arrival(&self, alpha_dep: f64, theta1: f64, x0: &Vector3<f64>) -> Option<Matched> {
        let (junction, dt1) = self.forward(alpha_dep, theta1)?;
        let mut x = *x0;
        let scale = Vector3::new(1.0, 1.0 / self.n_m, 1.0);
        for _ in 0..INNER_MAX_ITER {
            let (r, post, dt2) = self.residual(&junction, dt1, &x)?;
            if r.norm() < INNER_TOL {
                return Some(Matched {
                    x,
                    junction,
                    post,
                    dt1,
                    dt2,
                });
            }
            let mut jac = Matrix3::zeros();
            for k in 0..3 {
                let h = 1e-7 * scale[k];
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let (rp, _, _) = self.residual(&junction, dt1, &xp)?;
                let (rm, _, _) = self.residual(&junction, dt1, &xm)?;
                jac.set_column(k, &((rp - rm) / (2.0 * h)));
            }
            let step = jac.lu().solve(&(-r))?;
            // Keep the iteration on the local branch.
            let limit = Vector3::new(0.2, 0.2 / self.n_m, 0.2);
            let mut shrink: f64 = 1.0;
            for k in 0..3 {
                if step[k].abs() > limit[k] {
                    shrink = shrink.min(limit[k] / step[k].abs());
                }
            }
            let mut moved = false;
            for _ in 0..20 {
                let trial = x + step * shrink;
                if let Some((rt, _, _)) = self.residual(&junction, dt1, &trial) {
                    if rt.norm() < r.norm() {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                shrink *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let (r, post, dt2) = self.residual(&junction, dt1, &x)?;
        (r.norm() < 1e-10).then_some(Matched {
            x,
            junction,
            post,
            dt1,
            dt2,
        })
    }
}

impl Geometry {
    /// Full matching residual with the departure pump angle free; unknowns
    /// are scaled to (rad, rad of moon motion, rad).
    fn residual4(&self, theta1: f64, u: &Vector4<f64>) -> Option<Vector3<f64>> {
        let (junction, dt1) = self.forward(u[0], theta1)?;
        let x = Vector3::new(u[1], u[2] / self.n_m, u[3]);
        self.residual(&junction, dt1, &x).map(|r| r.0)
    }

    /// Minimum-norm Newton iteration that moves the departure pump angle
    /// together with the arrival unknowns until the arcs meet. Used when the
    /// arrival arc alone cannot close the gap.
    fn restore(&self, alpha_dep: f64, theta1: f64, x0: &Vector3<f64>) -> Option<(f64, Matched)> {
        let mut u = Vector4::new(alpha_dep, x0[0], x0[1] * self.n_m, x0[2]);
        for _ in 0..RESTORE_MAX_ITER {
            let r = self.residual4(theta1, &u)?;
            if r.norm() < INNER_TOL {
                break;
            }
            let mut jac = Matrix3x4::zeros();
            for k in 0..4 {
                let mut up = u;
                let mut um = u;
                up[k] += 1e-7;
                um[k] -= 1e-7;
                let d = (self.residual4(theta1, &up)? - self.residual4(theta1, &um)?) / 2e-7;
                jac.set_column(k, &d);
            }
            let w = (jac * jac.transpose()).lu().solve(&(-r))?;
            let step = jac.transpose() * w;
            let mut shrink = (0.2 / step.amax()).min(1.0);
            let mut moved = false;
            for _ in 0..20 {
                let trial = u + step * shrink;
                if self
                    .residual4(theta1, &trial)
                    .is_some_and(|rt| rt.norm() < r.norm())
                {
                    u = trial;
                    moved = true;
                    break;
                }
                shrink *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let x = Vector3::new(u[1], u[2] / self.n_m, u[3]);
        self.match_arrival(u[0], theta1, &x).map(|m| (u[0], m))
    }
}

fn diverged(problem: &LegProblem, reason: &str) -> Error {
    Error::SolverDiverged {
        family: problem.family.to_string(),
        v_inf_mps: problem.v_inf_mps,
        reason: reason.to_string(),
    }
}

/// Minimum-impulse leg for `problem`, seeded from the ballistic transfer at
/// the mean V_inf.
pub fn solve_leg(problem: &LegProblem, sys: &SystemModel) -> Result<OptimalLeg> {
    let moon = sys.moon(problem.moon);
    if problem.v_inf_dep_mps() < 0.0 || problem.v_inf_arr_mps() < 0.0 {
        return Err(Error::SeedInfeasible {
            family: problem.family.to_string(),
            v_inf_mps: problem.v_inf_mps,
        });
    }
    let seed =
        resonance::ballistic(problem.family, moon, sys, problem.v_inf_mps).map_err(|_| {
            Error::SeedInfeasible {
                family: problem.family.to_string(),
                v_inf_mps: problem.v_inf_mps,
            }
        })?;
    let mut free = Vector2::new(
        seed.alpha_dep_deg().to_radians(),
        seed.theta1_deg.to_radians(),
    );
    let mut x = Vector3::new(
        seed.alpha_arr_deg().to_radians(),
        seed.tof_days * SECONDS_PER_DAY,
        seed.theta2_deg.to_radians(),
    );
    // Walk the split out from the ballistic seed in small increments.
    let steps = (problem.dv_inf_mps.abs() / CONTINUATION_STEP_MPS)
        .ceil()
        .max(1.0) as usize;
    let mut result = None;
    for k in 1..=steps {
        let partial = LegProblem {
            dv_inf_mps: problem.dv_inf_mps * k as f64 / steps as f64,
            ..*problem
        };
        let geo = Geometry::new(moon, sys, &partial);
        let (f, m) = optimise(problem, &geo, free, &x)?;
        free = f;
        x = m.x;
        result = Some(m);
    }
    let best = result.expect("at least one continuation step");
    finish(problem, free, &best)
}

/// Best departure pump angle for a fixed maneuver location: 1-D
/// Gauss-Newton on the velocity jump, starting at `alpha`.
fn best_alpha(
    geo: &Geometry,
    theta1: f64,
    mut alpha: f64,
    warm: &Vector3<f64>,
) -> Option<(f64, Matched)> {
    let mut m = match geo.match_arrival(alpha, theta1, warm) {
        Some(m) => m,
        None => {
            let (a, m) = geo.restore(alpha, theta1, warm)?;
            alpha = a;
            m
        }
    };
    for _ in 0..ALPHA_MAX_ITER {
        let d = m.jump();
        let h = ALPHA_FD_STEP;
        let mp = geo.match_arrival(alpha + h, theta1, &m.x)?;
        let mm = geo.match_arrival(alpha - h, theta1, &m.x)?;
        let c = (mp.jump() - mm.jump()) / (2.0 * h);
        let cc = c.norm_squared();
        if cc == 0.0 {
            break;
        }
        let mut step = (-c.dot(&d) / cc).clamp(-OUTER_MAX_STEP, OUTER_MAX_STEP);
        let j = d.norm_squared();
        let mut improved = false;
        for _ in 0..30 {
            if let Some(t) = geo.match_arrival(alpha + step, theta1, &m.x) {
                if t.jump().norm_squared() <= j {
                    alpha += step;
                    m = t;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved || step.abs() < 1e-13 {
            break;
        }
    }
    Some((alpha, m))
}

/// Minimise the maneuver over the free variables for one fixed split.
fn optimise(
    problem: &LegProblem,
    geo: &Geometry,
    free: Vector2<f64>,
    x0: &Vector3<f64>,
) -> Result<(Vector2<f64>, Matched)> {
    let (alpha, seed) = match geo.match_arrival(free[0], free[1], x0) {
        Some(m) => (free[0], m),
        None => geo
            .restore(free[0], free[1], x0)
            .ok_or_else(|| diverged(problem, "arrival arc does not match the seed"))?,
    };
    if geo.v_dep == geo.v_arr {
        return Ok((Vector2::new(alpha, free[1]), seed));
    }
    let undefined = || diverged(problem, "cost undefined near iterate");
    let (mut theta1, mut alpha) = (free[1], alpha);
    let (a0, mut best) = best_alpha(geo, theta1, alpha, &seed.x).ok_or_else(undefined)?;
    alpha = a0;
    // The profile over theta1 is smooth; walk it with a 1-D Newton step.
    for _ in 0..OUTER_MAX_ITER {
        let j = best.jump().norm_squared();
        let h = THETA_FD_STEP;
        let (Some((_, mp)), Some((_, mm))) = (
            best_alpha(geo, theta1 + h, alpha, &best.x),
            best_alpha(geo, theta1 - h, alpha, &best.x),
        ) else {
            return Err(undefined());
        };
        let (jp, jm) = (mp.jump().norm_squared(), mm.jump().norm_squared());
        let g = (jp - jm) / (2.0 * h);
        let curv = (jp - 2.0 * j + jm) / (h * h);
        let mut step = if curv > 0.0 {
            -g / curv
        } else {
            -g.signum() * OUTER_MAX_STEP
        };
        step = step.clamp(-OUTER_MAX_STEP, OUTER_MAX_STEP);
        let mut accepted = None;
        for _ in 0..30 {
            if let Some((a, m)) = best_alpha(geo, theta1 + step, alpha, &best.x) {
                if m.jump().norm_squared() <= j {
                    accepted = Some((a, m));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((a, m)) = accepted else { break };
        theta1 += step;
        alpha = a;
        best = m;
        if step.abs() < 1e-9 {
            break;
        }
    }
    Ok((Vector2::new(alpha, theta1), best))
}

fn finish(problem: &LegProblem, free: Vector2<f64>, m: &Matched) -> Result<OptimalLeg> {
    let t_f = m.x[1];
    let leg = OptimalLeg {
        problem: *problem,
        theta1_deg: free[1].to_degrees(),
        theta2_deg: m.x[2].to_degrees(),
        alpha_dep_deg: wrap_deg(free[0].to_degrees()),
        alpha_arr_deg: wrap_deg(m.x[0].to_degrees()),
        tof_days: t_f / SECONDS_PER_DAY,
        dv_mps: m.dv() * 1000.0,
        dt1_days: m.dt1 / SECONDS_PER_DAY,
        dt2_days: m.dt2 / SECONDS_PER_DAY,
        position_mismatch_km: (m.post.r - m.junction.r).norm(),
        time_mismatch_days: (m.dt1 - (t_f - m.dt2)).abs() / SECONDS_PER_DAY,
    };
    if !leg.satisfies_constraints() || leg.tof_days <= 0.0 {
        return Err(diverged(problem, "matching tolerances not met"));
    }
    Ok(leg)
}

fn wrap_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a < -180.0 {
        a += 360.0;
    }
    a
}
