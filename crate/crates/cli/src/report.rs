//! Markdown report of one stored tour: a flyby table per moon, the
//! insertion burn and the totals.

use std::fmt::Write as _;
use std::path::Path;

use moontour_core::{Error, MoonId, Result};

use crate::output::TOUR_HEADER;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub moon: MoonId,
    pub flyby: u32,
    pub transfer: String,
    pub tof_days: f64,
    pub altitude_km: Option<f64>,
    pub v_inf_mps: f64,
    pub dv_mps: f64,
}

pub fn parse_tour_csv(text: &str, source: &Path) -> Result<Vec<ReportRow>> {
    let bad = |line: usize, msg: String| Error::Parse {
        path: source.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| bad(1, e.to_string()))?;
    if header.iter().ne(TOUR_HEADER.iter().copied()) {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| bad(line, format!("{} is not a number", TOUR_HEADER[k])))
        };
        rows.push(ReportRow {
            moon: MoonId::parse(&rec[0])
                .ok_or_else(|| bad(line, format!("unknown moon {}", &rec[0])))?,
            flyby: rec[1]
                .parse()
                .map_err(|_| bad(line, "flyby is not an integer".into()))?,
            transfer: rec[2].to_string(),
            tof_days: num(3)?,
            altitude_km: if rec[4].is_empty() {
                None
            } else {
                Some(num(4)?)
            },
            v_inf_mps: num(5)?,
            dv_mps: num(6)?,
        });
    }
    Ok(rows)
}

/// Two-decimal rounding used for every displayed value, so that totals
/// are exact sums of the printed cells.
fn r2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn render(tour_id: usize, rows: &[ReportRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Tour {tour_id}\n");
    let (mut tof_total, mut dv_total) = (0.0, 0.0);
    let legs: Vec<&ReportRow> = rows.iter().filter(|r| r.transfer != "EOI").collect();
    for moon in MoonId::ALL {
        let at: Vec<&&ReportRow> = legs.iter().filter(|r| r.moon == moon).collect();
        if at.is_empty() {
            continue;
        }
        let _ = writeln!(s, "## {}\n", moon.name());
        let _ = writeln!(
            s,
            "| Flyby | Transfer | ToF, d | Alt, km | V∞, m/s | ΔV, m/s |"
        );
        let _ = writeln!(s, "|---:|:---|---:|---:|---:|---:|");
        let (mut tof, mut dv) = (0.0, 0.0);
        for r in at {
            let alt = r
                .altitude_km
                .map(|a| format!("{a:.0}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "| {} | {} | {:.2} | {} | {:.1} | {:.2} |",
                r.flyby,
                r.transfer,
                r2(r.tof_days),
                alt,
                r.v_inf_mps,
                r2(r.dv_mps)
            );
            tof += r2(r.tof_days);
            dv += r2(r.dv_mps);
        }
        let _ = writeln!(s, "| Total | | {tof:.2} | | | {dv:.2} |\n");
        tof_total += tof;
        dv_total += dv;
    }
    for r in rows.iter().filter(|r| r.transfer == "EOI") {
        let alt = r
            .altitude_km
            .map(|a| format!("{a:.0}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "## EOI\n");
        let _ = writeln!(s, "| V∞, m/s | Alt, km | ΔV, m/s |");
        let _ = writeln!(s, "|---:|---:|---:|");
        let _ = writeln!(
            s,
            "| {:.1} | {} | {:.2} |\n",
            r.v_inf_mps,
            alt,
            r2(r.dv_mps)
        );
        dv_total += r2(r.dv_mps);
    }
    let _ = writeln!(s, "## Totals\n");
    let _ = writeln!(s, "| ToF, d | ΔV, m/s |");
    let _ = writeln!(s, "|---:|---:|");
    let _ = writeln!(s, "| {tof_total:.2} | {dv_total:.2} |");
    s
}
