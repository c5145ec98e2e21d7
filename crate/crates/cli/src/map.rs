//! Pump-V_inf map data: ballistic curves of every database family and
//! leveraging ΔV ticks along them, plus a minimal SVG rendering.

use std::fmt::Write as _;

use moontour_core::numfmt::g12;
use moontour_core::resonance::{sample_pump_vinf_map, MapSample, ResonanceFamily};
use moontour_core::vilt::{vinf_grid, ViltDatabase};
use moontour_core::SystemModel;

use crate::output::csv_text;

pub const CURVE_HEADER: [&str; 5] = ["family", "vinf_mps", "alpha_deg", "tof_days", "curve"];
pub const TICK_HEADER: [&str; 5] = ["family", "tick", "dv_mps", "vinf_mps", "alpha_deg"];

/// Curve samples per database grid step.
const SAMPLES_PER_STEP: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapTick {
    pub family: ResonanceFamily,
    /// 1-based along one unbroken curve.
    pub index: usize,
    /// Accumulated leveraging ΔV from the low end of that curve, m/s.
    pub dv_mps: f64,
    pub v_inf_mps: f64,
    pub alpha_deg: f64,
}

/// Ballistic curves of every family stored in `db`.
pub fn map_curves(db: &ViltDatabase, sys: &SystemModel) -> Vec<MapSample> {
    let families: Vec<ResonanceFamily> = db.families().collect();
    if families.is_empty() {
        return Vec::new();
    }
    let grid = vinf_grid(&db.bounds, db.step_mps / SAMPLES_PER_STEP);
    sample_pump_vinf_map(sys.moon(db.moon), sys, &families, &grid)
}

/// Points along each family where the linear model has accumulated
/// another `tick_dv_mps` of leveraging ΔV. The local cost of moving along
/// a curve is dΔV/dV_inf = 1 / |dV_dep/dΔV|; it is integrated with the
/// trapezoid rule between neighbouring records and restarted at gaps.
pub fn map_ticks(db: &ViltDatabase, tick_dv_mps: f64) -> Vec<MapTick> {
    let mut out = Vec::new();
    for table in &db.tables {
        let mut index = 0;
        let mut spent = 0.0;
        for w in table.records.windows(2) {
            let (Some(a), Some(b)) = (w[0], w[1]) else {
                (index, spent) = (0, 0.0);
                continue;
            };
            let ca = 1.0 / a.dvinf_dep_ddv.abs();
            let cb = 1.0 / b.dvinf_dep_ddv.abs();
            let dv_v = b.v_inf_mps - a.v_inf_mps;
            if !(ca.is_finite() && cb.is_finite()) || dv_v <= 0.0 {
                (index, spent) = (0, 0.0);
                continue;
            }
            // Cost rate is linear in s = (v - a.v) / dv_v, so the spend is
            // quadratic and each crossing solves a quadratic in s.
            let seg = 0.5 * (ca + cb) * dv_v;
            loop {
                let target = (index + 1) as f64 * tick_dv_mps;
                if target > spent + seg {
                    break;
                }
                let need = target - spent;
                let (qa, qb) = (0.5 * (cb - ca) * dv_v, ca * dv_v);
                let s = if qa.abs() < 1e-12 * qb {
                    need / qb
                } else {
                    (-qb + (qb * qb + 4.0 * qa * need).sqrt()) / (2.0 * qa)
                };
                let s = s.clamp(0.0, 1.0);
                index += 1;
                out.push(MapTick {
                    family: table.family,
                    index,
                    dv_mps: target,
                    v_inf_mps: a.v_inf_mps + s * dv_v,
                    alpha_deg: a.alpha_deg + s * (b.alpha_deg - a.alpha_deg),
                });
            }
            spent += seg;
        }
    }
    out
}

/// Curve id: samples of one family split wherever the V_inf grid has a gap.
fn curve_ids(samples: &[MapSample], step: f64) -> Vec<usize> {
    let mut ids = Vec::with_capacity(samples.len());
    let mut id = 0;
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            let p = &samples[i - 1];
            if p.family != s.family || s.v_inf_mps - p.v_inf_mps > 1.5 * step {
                id += 1;
            }
        }
        ids.push(id);
    }
    ids
}

pub fn curves_csv(samples: &[MapSample], step: f64) -> String {
    let ids = curve_ids(samples, step);
    csv_text(
        &CURVE_HEADER,
        samples.iter().zip(ids).map(|(s, id)| {
            vec![
                s.family.to_string(),
                g12(s.v_inf_mps),
                g12(s.alpha_deg),
                g12(s.tof_days),
                id.to_string(),
            ]
        }),
    )
}

pub fn ticks_csv(ticks: &[MapTick]) -> String {
    csv_text(
        &TICK_HEADER,
        ticks.iter().map(|t| {
            vec![
                t.family.to_string(),
                t.index.to_string(),
                g12(t.dv_mps),
                g12(t.v_inf_mps),
                g12(t.alpha_deg),
            ]
        }),
    )
}

/// Pump angle (deg, 0 at the top) against V_inf, one polyline per curve.
pub fn render_svg(
    samples: &[MapSample],
    ticks: &[MapTick],
    v_range: (f64, f64),
    step: f64,
    title: &str,
) -> String {
    const W: f64 = 800.0;
    const H: f64 = 600.0;
    const PAD: f64 = 60.0;
    let (v0, v1) = v_range;
    let x = |v: f64| PAD + (v - v0) / (v1 - v0) * (W - 2.0 * PAD);
    let y = |a: f64| PAD + a / 180.0 * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for a in (0..=180).step_by(30) {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{a}</text>"#,
            PAD - 6.0,
            y(a as f64) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">V_inf, m/s</text>"#,
        W / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{0}" y="{1}" transform="rotate(-90 {0} {1})" text-anchor="middle">pump angle, deg</text>"#,
        18.0,
        H / 2.0
    );
    for v in [v0, 0.5 * (v0 + v1), v1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{v:.0}</text>"#,
            x(v),
            H - PAD + 18.0
        );
    }
    let ids = curve_ids(samples, step);
    let mut start = 0;
    while start < samples.len() {
        let end = (start..samples.len())
            .find(|&i| ids[i] != ids[start])
            .unwrap_or(samples.len());
        let pts: Vec<String> = samples[start..end]
            .iter()
            .map(|p| format!("{:.1},{:.1}", x(p.v_inf_mps), y(p.alpha_deg)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            samples[start].family
        );
        start = end;
    }
    for t in ticks {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="1.5" fill="firebrick"/>"#,
            x(t.v_inf_mps),
            y(t.alpha_deg)
        );
    }
    s.push_str("</svg>\n");
    s
}
