//! Precomputed leveraging database: ballistic values and first-order
//! sensitivities to the maneuver on a V_inf grid, per resonance family.

use std::path::Path;

use rayon::prelude::*;

use crate::astro::{MoonId, SearchBounds, SystemModel};
use crate::error::{Error, Result};
use crate::numfmt::g12;
use crate::resonance::{self, ResonanceFamily};
use crate::vilt::tpbvp::{solve_leg, LegProblem};

/// V_inf split used for the perturbed solve, m/s.
pub const PERTURBATION_MPS: f64 = 5.0;

/// Column layout of the database CSV.
pub const CSV_HEADER: [&str; 13] = [
    "moon",
    "M",
    "N",
    "p",
    "q",
    "vinf_mps",
    "tof_days",
    "alpha_deg",
    "dtof_dDV_days_per_mps",
    "dvinfdep_dDV",
    "dvinfarr_dDV",
    "dalphadep_dDV_deg_per_mps",
    "dalphaarr_dDV_deg_per_mps",
];

/// Grid points closer than this (m/s) are treated as the same point.
const GRID_MATCH_MPS: f64 = 1e-6;

/// One database row. Pump-angle fields are magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViltRecord {
    pub moon: MoonId,
    pub family: ResonanceFamily,
    pub v_inf_mps: f64,
    pub tof_days: f64,
    pub alpha_deg: f64,
    /// days per m/s of maneuver
    pub dtof_ddv: f64,
    pub dvinf_dep_ddv: f64,
    pub dvinf_arr_ddv: f64,
    /// deg per m/s of maneuver
    pub dalpha_dep_ddv: f64,
    pub dalpha_arr_ddv: f64,
}

impl ViltRecord {
    fn lerp(&self, other: &Self, t: f64, v_inf_mps: f64) -> Self {
        let l = |a: f64, b: f64| a + (b - a) * t;
        Self {
            moon: self.moon,
            family: self.family,
            v_inf_mps,
            tof_days: l(self.tof_days, other.tof_days),
            alpha_deg: l(self.alpha_deg, other.alpha_deg),
            dtof_ddv: l(self.dtof_ddv, other.dtof_ddv),
            dvinf_dep_ddv: l(self.dvinf_dep_ddv, other.dvinf_dep_ddv),
            dvinf_arr_ddv: l(self.dvinf_arr_ddv, other.dvinf_arr_ddv),
            dalpha_dep_ddv: l(self.dalpha_dep_ddv, other.dalpha_dep_ddv),
            dalpha_arr_ddv: l(self.dalpha_arr_ddv, other.dalpha_arr_ddv),
        }
    }

    fn csv_row(&self) -> [String; 13] {
        [
            self.moon.key().to_string(),
            self.family.m.to_string(),
            self.family.n.to_string(),
            self.family.p.to_string(),
            self.family.q.to_string(),
            g12(self.v_inf_mps),
            g12(self.tof_days),
            g12(self.alpha_deg),
            g12(self.dtof_ddv),
            g12(self.dvinf_dep_ddv),
            g12(self.dvinf_arr_ddv),
            g12(self.dalpha_dep_ddv),
            g12(self.dalpha_arr_ddv),
        ]
    }
}

/// Leg predicted by the linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegEstimate {
    /// Signed maneuver, m/s.
    pub dv_mps: f64,
    pub tof_days: f64,
    pub v_inf_dep_mps: f64,
    pub v_inf_arr_mps: f64,
    pub alpha_dep_deg: f64,
    pub alpha_arr_deg: f64,
}

/// Linear leveraging model around `rec` for a prescribed departure V_inf.
pub fn leg_from_departure(
    rec: &ViltRecord,
    required_v_dep_mps: f64,
    floor_mps: f64,
    cap_mps: f64,
) -> Result<LegEstimate> {
    let dv = (required_v_dep_mps - rec.v_inf_mps) / rec.dvinf_dep_ddv;
    if dv.abs() > cap_mps {
        return Err(Error::DeltaVCapExceeded {
            dv_mps: dv,
            cap_mps,
        });
    }
    let v_arr = rec.v_inf_mps + rec.dvinf_arr_ddv * dv;
    if v_arr < floor_mps {
        return Err(Error::BelowFamilyFloor {
            v_inf_arr_mps: v_arr,
            floor_mps,
        });
    }
    Ok(LegEstimate {
        dv_mps: dv,
        tof_days: rec.tof_days + rec.dtof_ddv * dv,
        v_inf_dep_mps: required_v_dep_mps,
        v_inf_arr_mps: v_arr,
        alpha_dep_deg: rec.alpha_deg + rec.dalpha_dep_ddv * dv,
        alpha_arr_deg: rec.alpha_deg + rec.dalpha_arr_ddv * dv,
    })
}

/// Uniform V_inf grid from the lower bound, with the upper bound appended
/// when the step does not land on it.
pub fn vinf_grid(bounds: &SearchBounds, step_mps: f64) -> Vec<f64> {
    assert!(step_mps > 0.0, "grid step must be positive");
    let (lo, hi) = (bounds.v_inf_min_mps, bounds.v_inf_max_mps);
    let mut grid: Vec<f64> = (0..)
        .map(|i| lo + step_mps * i as f64)
        .take_while(|v| *v <= hi + GRID_MATCH_MPS)
        .collect();
    if grid.last().is_some_and(|v| hi - v > GRID_MATCH_MPS) {
        grid.push(hi);
    }
    grid
}

/// Records of one family aligned to the database grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTable {
    pub family: ResonanceFamily,
    pub records: Vec<Option<ViltRecord>>,
}

impl FamilyTable {
    /// V_inf range spanned by stored records.
    pub fn span(&self) -> Option<(f64, f64)> {
        let mut it = self.records.iter().flatten();
        let first = it.next()?.v_inf_mps;
        let last = self.records.iter().rev().flatten().next()?.v_inf_mps;
        Some((first, last))
    }
}

/// Leveraging database of one moon.
#[derive(Debug, Clone, PartialEq)]
pub struct ViltDatabase {
    pub moon: MoonId,
    pub bounds: SearchBounds,
    pub step_mps: f64,
    pub grid: Vec<f64>,
    /// Sorted by family (M, N, p, q).
    pub tables: Vec<FamilyTable>,
}

/// A grid point the solver could not converge.
#[derive(Debug)]
pub struct SkippedRecord {
    pub family: ResonanceFamily,
    pub v_inf_mps: f64,
    pub error: Error,
}

#[derive(Debug)]
pub struct DatabaseBuild {
    pub database: ViltDatabase,
    pub skipped: Vec<SkippedRecord>,
}

/// Solve one grid point: ballistic and perturbed legs. `Ok(None)` when no
/// ballistic transfer exists there.
pub fn build_record(
    moon: MoonId,
    family: ResonanceFamily,
    v_inf_mps: f64,
    sys: &SystemModel,
) -> Result<Option<ViltRecord>> {
    let params = sys.moon(moon);
    let Ok(ballistic) = resonance::ballistic(family, params, sys, v_inf_mps) else {
        return Ok(None);
    };
    let base = LegProblem {
        family,
        moon,
        v_inf_mps,
        dv_inf_mps: 0.0,
    };
    let b = solve_leg(&base, sys)?;
    let p = solve_leg(
        &LegProblem {
            dv_inf_mps: PERTURBATION_MPS,
            ..base
        },
        sys,
    )?;
    let dv = p.signed_dv_mps();
    if dv.is_nan() || dv <= 0.0 {
        return Err(Error::SolverDiverged {
            family: family.to_string(),
            v_inf_mps,
            reason: "perturbed leg needs no maneuver".into(),
        });
    }
    let dv_dep = p.problem.v_inf_dep_mps() - v_inf_mps;
    let dv_arr = p.problem.v_inf_arr_mps() - v_inf_mps;
    Ok(Some(ViltRecord {
        moon,
        family,
        v_inf_mps,
        tof_days: ballistic.tof_days,
        alpha_deg: ballistic.alpha_deg,
        dtof_ddv: (p.tof_days - b.tof_days) / dv,
        dvinf_dep_ddv: dv_dep / dv,
        dvinf_arr_ddv: dv_arr / dv,
        dalpha_dep_ddv: (p.alpha_dep_deg.abs() - b.alpha_dep_deg.abs()) / dv,
        dalpha_arr_ddv: (p.alpha_arr_deg.abs() - b.alpha_arr_deg.abs()) / dv,
    }))
}

/// Build the database of `moon` over the searched families and the V_inf
/// grid. Grid points where the solver fails are logged and skipped.
pub fn build_database(
    moon: MoonId,
    sys: &SystemModel,
    bounds: &SearchBounds,
    step_mps: f64,
) -> DatabaseBuild {
    let grid = vinf_grid(bounds, step_mps);
    let families = resonance::search_families(sys.moon(moon), sys, bounds);
    let jobs: Vec<(usize, usize)> = (0..families.len())
        .flat_map(|f| (0..grid.len()).map(move |g| (f, g)))
        .collect();
    let results: Vec<Result<Option<ViltRecord>>> = jobs
        .par_iter()
        .map(|&(f, g)| build_record(moon, families[f], grid[g], sys))
        .collect();

    let mut tables: Vec<FamilyTable> = families
        .iter()
        .map(|&family| FamilyTable {
            family,
            records: vec![None; grid.len()],
        })
        .collect();
    let mut skipped = Vec::new();
    for (&(f, g), res) in jobs.iter().zip(results) {
        match res {
            Ok(rec) => tables[f].records[g] = rec,
            Err(error) => {
                log::warn!(
                    "{moon}: skipping {} at {} m/s: {error}",
                    families[f],
                    grid[g]
                );
                skipped.push(SkippedRecord {
                    family: families[f],
                    v_inf_mps: grid[g],
                    error,
                });
            }
        }
    }
    tables.retain(|t| t.records.iter().any(Option::is_some));
    DatabaseBuild {
        database: ViltDatabase {
            moon,
            bounds: *bounds,
            step_mps,
            grid,
            tables,
        },
        skipped,
    }
}

impl ViltDatabase {
    pub fn table(&self, family: &ResonanceFamily) -> Option<&FamilyTable> {
        self.tables
            .binary_search_by(|t| t.family.sort_key().cmp(&family.sort_key()))
            .ok()
            .map(|i| &self.tables[i])
    }

    pub fn families(&self) -> impl Iterator<Item = ResonanceFamily> + '_ {
        self.tables.iter().map(|t| t.family)
    }

    pub fn records(&self) -> impl Iterator<Item = &ViltRecord> {
        self.tables.iter().flat_map(|t| t.records.iter().flatten())
    }

    pub fn len(&self) -> usize {
        self.records().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Record at `v_inf_mps`, linearly interpolated between adjacent grid
    /// points that both hold a record. Grid points return the stored
    /// record unchanged.
    pub fn interpolate(&self, family: &ResonanceFamily, v_inf_mps: f64) -> Result<ViltRecord> {
        let out_of_span = || Error::OutOfSpan {
            family: family.to_string(),
            v_inf_mps,
        };
        let table = self.table(family).ok_or_else(out_of_span)?;
        let idx = self
            .grid
            .partition_point(|g| *g < v_inf_mps - GRID_MATCH_MPS);
        if idx < self.grid.len() && (self.grid[idx] - v_inf_mps).abs() <= GRID_MATCH_MPS {
            return table.records[idx].ok_or_else(out_of_span);
        }
        if idx == 0 || idx == self.grid.len() {
            return Err(out_of_span());
        }
        let (Some(lo), Some(hi)) = (table.records[idx - 1], table.records[idx]) else {
            return Err(out_of_span());
        };
        let t = (v_inf_mps - lo.v_inf_mps) / (hi.v_inf_mps - lo.v_inf_mps);
        Ok(lo.lerp(&hi, t, v_inf_mps))
    }

    /// Lowest arrival V_inf a family can be flown at: the analytic floor of
    /// an exact resonance, or the lowest stored record otherwise.
    pub fn family_floor(&self, family: &ResonanceFamily, sys: &SystemModel) -> Option<f64> {
        if family.symmetric() {
            Some(resonance::resonant_vinf_interval(sys.moon(self.moon), sys, family.m, family.n).0)
        } else {
            self.table(family)?.span().map(|s| s.0)
        }
    }

    /// CSV text with one header line, rows sorted by (M, N, p, q, V_inf).
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for rec in self.records() {
            w.write_record(rec.csv_row()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parse CSV produced by [`ViltDatabase::to_csv`]. The grid is rebuilt
    /// from `bounds` and `step_mps`; every record must sit on it.
    pub fn from_csv(
        text: &str,
        moon: MoonId,
        bounds: &SearchBounds,
        step_mps: f64,
        source: &Path,
    ) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: source.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let grid = vinf_grid(bounds, step_mps);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(parse_err(1, "unexpected header".into()));
        }
        let mut tables: Vec<FamilyTable> = Vec::new();
        for row in reader.records() {
            let row =
                row.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = row.position().map_or(0, |p| p.line());
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        parse_err(
                            line,
                            format!("column {} is not a finite number", CSV_HEADER[i]),
                        )
                    })
            };
            let int = |i: usize| -> Result<i64> {
                row[i].parse::<i64>().map_err(|_| {
                    parse_err(line, format!("column {} is not an integer", CSV_HEADER[i]))
                })
            };
            if MoonId::parse(&row[0]) != Some(moon) {
                return Err(parse_err(
                    line,
                    format!("record for moon '{}' in the {moon} database", &row[0]),
                ));
            }
            let (m, n, p, q) = (int(1)?, int(2)?, int(3)?, int(4)?);
            if m < 1 || n < 1 || (p != 1 && p != -1) || (q != 1 && q != -1) {
                return Err(parse_err(line, "invalid resonance family".into()));
            }
            let family = ResonanceFamily::new(m as u32, n as u32, p as i8, q as i8);
            let rec = ViltRecord {
                moon,
                family,
                v_inf_mps: num(5)?,
                tof_days: num(6)?,
                alpha_deg: num(7)?,
                dtof_ddv: num(8)?,
                dvinf_dep_ddv: num(9)?,
                dvinf_arr_ddv: num(10)?,
                dalpha_dep_ddv: num(11)?,
                dalpha_arr_ddv: num(12)?,
            };
            let g = grid
                .iter()
                .position(|v| (v - rec.v_inf_mps).abs() <= GRID_MATCH_MPS)
                .ok_or_else(|| {
                    parse_err(line, format!("V_inf {} is not on the grid", rec.v_inf_mps))
                })?;
            if family.m > bounds.max_m {
                return Err(parse_err(
                    line,
                    format!("M = {} exceeds the bound {}", family.m, bounds.max_m),
                ));
            }
            let t = match tables.last_mut() {
                Some(t) if t.family == family => t,
                Some(t) if t.family.sort_key() > family.sort_key() => {
                    return Err(parse_err(line, "rows are not sorted by family".into()));
                }
                _ => {
                    tables.push(FamilyTable {
                        family,
                        records: vec![None; grid.len()],
                    });
                    tables.last_mut().expect("just pushed")
                }
            };
            if t.records[g..].iter().any(Option::is_some) {
                return Err(parse_err(line, "rows are not sorted by V_inf".into()));
            }
            t.records[g] = Some(rec);
        }
        Ok(Self {
            moon,
            bounds: *bounds,
            step_mps,
            grid,
            tables,
        })
    }

    pub fn read_csv(
        path: &Path,
        moon: MoonId,
        bounds: &SearchBounds,
        step_mps: f64,
    ) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, moon, bounds, step_mps, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(v: f64, dvdep: f64) -> ViltRecord {
        ViltRecord {
            moon: MoonId::Rhea,
            family: ResonanceFamily::new(2, 1, 1, 1),
            v_inf_mps: v,
            tof_days: 9.0,
            alpha_deg: 30.0,
            dtof_ddv: -0.01,
            dvinf_dep_ddv: dvdep,
            dvinf_arr_ddv: -dvdep,
            dalpha_dep_ddv: 0.1,
            dalpha_arr_ddv: -0.1,
        }
    }

    #[test]
    fn linear_model_arithmetic() {
        let r = record(1500.0, 2.0);
        let e = leg_from_departure(&r, 1530.0, 0.0, 100.0).unwrap();
        assert_eq!(e.dv_mps, 15.0);
        assert_eq!(e.v_inf_arr_mps, 1470.0);
        assert_close!(e.tof_days, 8.85, 1e-12);
        let z = leg_from_departure(&r, 1500.0, 0.0, 100.0).unwrap();
        assert_eq!(
            (z.dv_mps, z.tof_days, z.alpha_dep_deg, z.alpha_arr_deg),
            (0.0, 9.0, 30.0, 30.0)
        );
        assert!(matches!(
            leg_from_departure(&r, 1800.0, 0.0, 100.0),
            Err(Error::DeltaVCapExceeded { .. })
        ));
        assert!(matches!(
            leg_from_departure(&r, 1530.0, 1480.0, 100.0),
            Err(Error::BelowFamilyFloor { .. })
        ));
    }

    #[test]
    fn grid_appends_upper_bound() {
        let b = SearchBounds {
            v_inf_min_mps: 200.0,
            v_inf_max_mps: 850.0,
            max_m: 25,
        };
        let g = vinf_grid(&b, 30.0);
        assert_eq!(g.first(), Some(&200.0));
        assert_eq!(g.last(), Some(&850.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(vinf_grid(&b, 1000.0), vec![200.0, 850.0]);
        assert_eq!(vinf_grid(&b, 650.0), vec![200.0, 850.0]);
    }

    fn small_rhea() -> ViltDatabase {
        let sys = SystemModel::saturn();
        let bounds = SearchBounds {
            v_inf_min_mps: 1500.0,
            v_inf_max_mps: 1620.0,
            max_m: 2,
        };
        build_database(MoonId::Rhea, &sys, &bounds, 60.0).database
    }

    #[test]
    fn sensitivities_have_expected_signs() {
        let db = small_rhea();
        assert!(!db.is_empty());
        for r in db.records() {
            assert!(r.dvinf_dep_ddv > 0.0 && r.dvinf_arr_ddv < 0.0, "{r:?}");
        }
        let sys = SystemModel::saturn();
        for r in db.records() {
            let b =
                resonance::ballistic(r.family, sys.moon(MoonId::Rhea), &sys, r.v_inf_mps).unwrap();
            assert_close!(r.tof_days, b.tof_days, 1e-6);
            assert_close!(r.alpha_deg, b.alpha_deg, 1e-6);
        }
    }

    #[test]
    fn interpolation_is_exact_on_grid_and_between_neighbours() {
        let db = small_rhea();
        let fam = ResonanceFamily::new(2, 1, 1, 1);
        let t = db.table(&fam).unwrap();
        let a = t.records[0].unwrap();
        let b = t.records[1].unwrap();
        assert_eq!(db.interpolate(&fam, a.v_inf_mps).unwrap(), a);
        let mid = db
            .interpolate(&fam, 0.5 * (a.v_inf_mps + b.v_inf_mps))
            .unwrap();
        assert!(mid.alpha_deg.min(a.alpha_deg.max(b.alpha_deg)) >= a.alpha_deg.min(b.alpha_deg));
        assert!(
            mid.tof_days <= a.tof_days.max(b.tof_days)
                && mid.tof_days >= a.tof_days.min(b.tof_days)
        );
        assert!(matches!(
            db.interpolate(&fam, 1400.0),
            Err(Error::OutOfSpan { .. })
        ));
        assert!(matches!(
            db.interpolate(&ResonanceFamily::new(9, 2, 1, 1), 1550.0),
            Err(Error::OutOfSpan { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let db = small_rhea();
        let text = db.to_csv();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        let back = ViltDatabase::from_csv(
            &text,
            MoonId::Rhea,
            &db.bounds,
            db.step_mps,
            Path::new("mem"),
        )
        .unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(back.len(), db.len());
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let db = small_rhea();
        let text = db.to_csv();
        let p = Path::new("mem");
        let bad_header = text.replacen("moon,", "planet,", 1);
        assert!(matches!(
            ViltDatabase::from_csv(&bad_header, MoonId::Rhea, &db.bounds, 60.0, p),
            Err(Error::Parse { .. })
        ));
        let wrong_moon = text.replace("rhea,", "dione,");
        assert!(ViltDatabase::from_csv(&wrong_moon, MoonId::Rhea, &db.bounds, 60.0, p).is_err());
        let off_grid = text.replace(",1500,", ",1501,");
        assert!(ViltDatabase::from_csv(&off_grid, MoonId::Rhea, &db.bounds, 60.0, p).is_err());
    }

    #[test]
    fn build_is_independent_of_worker_count() {
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(small_rhea);
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(small_rhea);
        assert_eq!(one.to_csv(), four.to_csv());
    }

    #[test]
    fn degenerate_grid_keeps_endpoints() {
        let sys = SystemModel::saturn();
        let bounds = SearchBounds {
            v_inf_min_mps: 1500.0,
            v_inf_max_mps: 1600.0,
            max_m: 2,
        };
        let db = build_database(MoonId::Rhea, &sys, &bounds, 500.0).database;
        let t = db.table(&ResonanceFamily::new(2, 1, 1, 1)).unwrap();
        let vs: Vec<f64> = t.records.iter().flatten().map(|r| r.v_inf_mps).collect();
        assert_eq!(vs, vec![1500.0, 1600.0]);
    }
}
