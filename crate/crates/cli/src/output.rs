//! Results directory layout and the CSV files written into it.
//!
//! ```text
//! <out>/db/<moon>.csv          leveraging databases
//! <out>/fronts/<moon>.csv      4D front at the end of each moon phase
//! <out>/fronts/final.csv       (ToF, ΔV) front of completed tours
//! <out>/tours/tour_<id>.csv    flyby table of one tour
//! <out>/tours/summary.csv      per-moon totals of every tour
//! <out>/map/<moon>.csv         pump-V_inf map curves (+ _ticks.csv, .svg)
//! <out>/run.log
//! ```
//!
//! Front rows point to their ancestor by row index in the previous moon's
//! front file, so the files stay meaningful without the node arena.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use moontour_core::numfmt::g12;
use moontour_core::pathfinder::{FlybyRow, NodeArena, NodeId, NodeLink, RowKind, Tour, TourResult};
use moontour_core::{Error, MoonId, Result};

pub const FRONT_HEADER: [&str; 6] = [
    "row",
    "ancestor",
    "dv_mps",
    "tof_days",
    "alpha_deg",
    "vinf_mps",
];
pub const FINAL_HEADER: [&str; 5] = ["tour", "tof_days", "dv_mps", "eoi_dv_mps", "ancestor"];
pub const TOUR_HEADER: [&str; 9] = [
    "moon",
    "flyby",
    "transfer",
    "tof_days",
    "alt_km",
    "vinf_mps",
    "dv_mps",
    "alpha_arr_deg",
    "alpha_dep_deg",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn db_dir(&self) -> PathBuf {
        self.root.join("db")
    }

    pub fn fronts_dir(&self) -> PathBuf {
        self.root.join("fronts")
    }

    pub fn tours_dir(&self) -> PathBuf {
        self.root.join("tours")
    }

    pub fn map_dir(&self) -> PathBuf {
        self.root.join("map")
    }

    pub fn run_log(&self) -> PathBuf {
        self.root.join("run.log")
    }

    pub fn db_file(&self, moon: MoonId) -> PathBuf {
        self.db_dir().join(format!("{}.csv", moon.key()))
    }

    pub fn front_file(&self, moon: MoonId) -> PathBuf {
        self.fronts_dir().join(format!("{}.csv", moon.key()))
    }

    pub fn final_front_file(&self) -> PathBuf {
        self.fronts_dir().join("final.csv")
    }

    pub fn tour_file(&self, id: usize) -> PathBuf {
        self.tours_dir().join(format!("tour_{id}.csv"))
    }

    pub fn summary_file(&self) -> PathBuf {
        self.tours_dir().join("summary.csv")
    }
}

/// In-memory CSV with `\n` line endings.
pub(crate) fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub(crate) fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// First ancestor of `id` (itself included) found in `rows`.
fn ancestor_row(arena: &NodeArena, id: NodeId, rows: &HashMap<NodeId, usize>) -> Option<usize> {
    let mut cur = Some(id);
    while let Some(c) = cur {
        if let Some(&r) = rows.get(&c) {
            return Some(r);
        }
        cur = arena.get(c).parent;
    }
    None
}

fn front_rows(
    arena: &NodeArena,
    ids: &[NodeId],
    prev: &HashMap<NodeId, usize>,
) -> Vec<Vec<String>> {
    ids.iter()
        .enumerate()
        .map(|(row, &id)| {
            let n = arena.get(id);
            // Skip the node itself so a front never references its own row.
            let anc = n.parent.and_then(|p| ancestor_row(arena, p, prev));
            vec![
                row.to_string(),
                anc.map(|a| a.to_string()).unwrap_or_default(),
                g12(n.dv_mps),
                g12(n.tof_days),
                g12(n.alpha_deg),
                g12(n.v_inf_mps),
            ]
        })
        .collect()
}

/// Every front file of a run as (file name, contents), in tour order: one
/// per completed moon phase, then the insertion front and the final 2D
/// front.
pub fn front_csvs(result: &TourResult) -> Vec<(String, String)> {
    let arena = &result.arena;
    let mut out = Vec::new();
    let mut prev: HashMap<NodeId, usize> = HashMap::new();
    for (_, ids) in &result.entries {
        let Some(&first) = ids.first() else { continue };
        let from = match arena.get(first).link {
            NodeLink::Handoff { from, .. } => from,
            _ => continue,
        };
        out.push((
            format!("{}.csv", from.key()),
            csv_text(&FRONT_HEADER, front_rows(arena, ids, &prev)),
        ));
        prev = ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();
    }
    out.push((
        format!("{}.csv", MoonId::Enceladus.key()),
        csv_text(&FRONT_HEADER, front_rows(arena, &result.front, &prev)),
    ));
    let final_rows = result.tours.iter().map(|t| {
        let anc = arena
            .get(t.end)
            .parent
            .and_then(|p| ancestor_row(arena, p, &prev));
        vec![
            t.id.to_string(),
            g12(t.tof_days),
            g12(t.dv_mps),
            g12(t.insertion_dv_mps().unwrap_or(0.0)),
            anc.map(|a| a.to_string()).unwrap_or_default(),
        ]
    });
    out.push(("final.csv".into(), csv_text(&FINAL_HEADER, final_rows)));
    out
}

pub fn transfer_label(kind: &RowKind) -> String {
    match kind {
        RowKind::Leg(f) => f.to_string(),
        RowKind::Exit(to) => format!("to {}", to.name()),
        RowKind::Insertion => "EOI".into(),
        RowKind::Open => "-".into(),
    }
}

fn tour_row(r: &FlybyRow) -> Vec<String> {
    let alt = if r.altitude_km.is_finite() {
        format!("{:.0}", r.altitude_km)
    } else {
        String::new()
    };
    vec![
        r.moon.key().to_string(),
        r.index.to_string(),
        transfer_label(&r.kind),
        format!("{:.4}", r.tof_days),
        alt,
        format!("{:.2}", r.v_inf_mps),
        format!("{:.3}", r.dv_mps),
        format!("{:.3}", r.alpha_arr_deg),
        format!("{:.3}", r.alpha_dep_deg),
    ]
}

/// Flyby table of one tour.
pub fn tour_csv(tour: &Tour) -> String {
    csv_text(&TOUR_HEADER, tour.rows.iter().map(tour_row))
}

/// One row per tour with the per-moon ToF and ΔV, the insertion burn and
/// the totals.
pub fn summary_csv(tours: &[Tour]) -> String {
    let mut header = vec!["tour".to_string()];
    for m in MoonId::ALL {
        header.push(format!("{}_tof_days", m.key()));
        header.push(format!("{}_dv_mps", m.key()));
    }
    header.extend(["eoi_dv_mps", "total_tof_days", "total_dv_mps"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = tours.iter().map(|t| {
        let totals = t.moon_totals();
        let mut r = vec![t.id.to_string()];
        for m in MoonId::ALL {
            match totals.iter().find(|x| x.0 == m) {
                Some(&(_, tof, dv)) => r.extend([format!("{tof:.2}"), format!("{dv:.2}")]),
                None => r.extend([String::new(), String::new()]),
            }
        }
        r.push(format!("{:.2}", t.insertion_dv_mps().unwrap_or(0.0)));
        r.push(format!("{:.2}", t.tof_days));
        r.push(format!("{:.2}", t.dv_mps));
        r
    });
    csv_text(&header, rows)
}

/// Write fronts, flyby tables and the summary; returns the paths written.
pub fn write_results(layout: &Layout, result: &TourResult) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, text) in front_csvs(result) {
        let path = layout.fronts_dir().join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    for t in &result.tours {
        let path = layout.tour_file(t.id);
        write_file(&path, &tour_csv(t))?;
        written.push(path);
    }
    let path = layout.summary_file();
    write_file(&path, &summary_csv(&result.tours))?;
    written.push(path);
    Ok(written)
}
