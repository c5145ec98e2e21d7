//! Saturn-system constants and the per-moon search bounds.
//!
//! The values are also shipped as a plain key-value file
//! (`data/saturn_moons.txt`) so external tools can read the exact numbers
//! the library was built with. [`constants_file`] renders that file and a
//! unit test keeps the two in sync.

use std::fmt::Write as _;

use super::{MoonId, MoonParams, SearchBounds, SystemModel};

/// Saturn gravitational parameter, km^3/s^2.
pub const GM_SATURN: f64 = 37_931_207.0;

/// Titan, Rhea, Dione, Tethys, Enceladus in tour order.
///
/// Rhea's period is 4.518 d. Some published tables carry 4.152 d, which
/// is inconsistent with its semimajor axis by 8% and with every resonant
/// leg time reported for Rhea.
pub const MOONS: [MoonParams; 5] = [
    MoonParams {
        id: MoonId::Titan,
        a_km: 1_221_870.0,
        e: 0.0288,
        i_deg: 0.33,
        radius_km: 2574.7,
        period_days: 15.945,
        gm: 8977.9,
        min_flyby_alt_km: 1600.0,
    },
    MoonParams {
        id: MoonId::Rhea,
        a_km: 527_108.0,
        e: 0.001,
        i_deg: 0.35,
        radius_km: 763.8,
        period_days: 4.518,
        gm: 153.94,
        min_flyby_alt_km: 50.0,
    },
    MoonParams {
        id: MoonId::Dione,
        a_km: 377_396.0,
        e: 0.0022,
        i_deg: 0.02,
        radius_km: 561.4,
        period_days: 2.737,
        gm: 73.110,
        min_flyby_alt_km: 50.0,
    },
    MoonParams {
        id: MoonId::Tethys,
        a_km: 294_619.0,
        e: 0.0001,
        i_deg: 1.09,
        radius_km: 531.1,
        period_days: 1.89,
        gm: 41.209,
        min_flyby_alt_km: 50.0,
    },
    MoonParams {
        id: MoonId::Enceladus,
        a_km: 237_948.0,
        e: 0.0047,
        i_deg: 0.02,
        radius_km: 252.1,
        period_days: 1.370,
        gm: 7.2094,
        min_flyby_alt_km: 25.0,
    },
];

/// V_inf window and maximum moon revolutions searched at each moon.
pub const SEARCH_BOUNDS: [SearchBounds; 5] = [
    SearchBounds {
        v_inf_min_mps: 1200.0,
        v_inf_max_mps: 1600.0,
        max_m: 2,
    },
    SearchBounds {
        v_inf_min_mps: 650.0,
        v_inf_max_mps: 1900.0,
        max_m: 15,
    },
    SearchBounds {
        v_inf_min_mps: 550.0,
        v_inf_max_mps: 1000.0,
        max_m: 15,
    },
    SearchBounds {
        v_inf_min_mps: 550.0,
        v_inf_max_mps: 900.0,
        max_m: 16,
    },
    SearchBounds {
        v_inf_min_mps: 200.0,
        v_inf_max_mps: 850.0,
        max_m: 25,
    },
];

/// Render the constants as `key = value` lines.
pub fn constants_file(sys: &SystemModel) -> String {
    let mut out = String::new();
    out.push_str("# Saturn system constants (circular-coplanar model)\n");
    out.push_str("# units: km, km^3/s^2, days, deg, m/s\n");
    let _ = writeln!(out, "saturn.gm = {}", sys.gm_saturn);
    for (moon, bounds) in sys.moons.iter().zip(SEARCH_BOUNDS.iter()) {
        let k = moon.id.key();
        let _ = writeln!(out, "{k}.a = {}", moon.a_km);
        let _ = writeln!(out, "{k}.e = {}", moon.e);
        let _ = writeln!(out, "{k}.i = {}", moon.i_deg);
        let _ = writeln!(out, "{k}.radius = {}", moon.radius_km);
        let _ = writeln!(out, "{k}.period = {}", moon.period_days);
        let _ = writeln!(out, "{k}.gm = {}", moon.gm);
        let _ = writeln!(out, "{k}.min_flyby_alt = {}", moon.min_flyby_alt_km);
        let _ = writeln!(out, "{k}.vinf_min = {}", bounds.v_inf_min_mps);
        let _ = writeln!(out, "{k}.vinf_max = {}", bounds.v_inf_max_mps);
        let _ = writeln!(out, "{k}.max_m = {}", bounds.max_m);
    }
    out
}

/// Parse a `key = value` constants file into a lookup table.
pub fn parse_constants(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.split_once('=')?;
            Some((k.trim().to_string(), v.trim().parse().ok()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIPPED: &str = include_str!("../../data/saturn_moons.txt");

    #[test]
    fn shipped_file_matches_compiled_constants() {
        assert_eq!(SHIPPED, constants_file(&SystemModel::saturn()));
    }

    #[test]
    fn shipped_file_holds_table_values() {
        let kv = parse_constants(SHIPPED);
        let get = |k: &str| kv.iter().find(|(key, _)| key == k).unwrap().1;
        assert_eq!(get("titan.a"), 1_221_870.0);
        assert_eq!(get("rhea.radius"), 763.8);
        assert_eq!(get("dione.gm"), 73.110);
        assert_eq!(get("tethys.period"), 1.89);
        assert_eq!(get("enceladus.min_flyby_alt"), 25.0);
        assert_eq!(get("titan.min_flyby_alt"), 1600.0);
        assert_eq!(get("enceladus.max_m"), 25.0);
        assert_eq!(get("rhea.vinf_max"), 1900.0);
        assert_eq!(get("saturn.gm"), GM_SATURN);
    }

    #[test]
    fn moons_ordered_by_semimajor_axis() {
        for w in MOONS.windows(2) {
            assert!(w[0].a_km > w[1].a_km);
        }
    }

    #[test]
    fn tabulated_periods_follow_kepler() {
        let sys = SystemModel::saturn();
        for m in &sys.moons {
            let kepler_days = sys.moon_period_s(m.id) / 86_400.0;
            let rel = (kepler_days - m.period_days).abs() / m.period_days;
            assert!(rel < 5e-3, "{:?}: {kepler_days} vs {}", m.id, m.period_days);
        }
    }

    #[test]
    fn saturn_dominates_moon_masses() {
        for m in &MOONS {
            assert!(GM_SATURN > 1e3 * m.gm);
            assert!(m.a_km > 0.0 && m.radius_km > 0.0 && m.gm > 0.0);
            assert!(m.e >= 0.0 && m.i_deg >= 0.0 && m.min_flyby_alt_km > 0.0);
        }
    }
}
