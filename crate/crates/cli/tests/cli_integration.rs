use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use moontour_cli::map::map_ticks;
use moontour_cli::{
    commands, Layout, EXIT_CONFIG, EXIT_EMPTY_FRONT, EXIT_FAILURE, EXIT_IO, EXIT_OK,
};
use moontour_core::vilt::ViltDatabase;
use moontour_core::{MoonId, RunConfig};
use tempfile::TempDir;

/// Short Tethys-to-Enceladus run on coarse grids.
const SMALL: &str = r#"{
  "initial_moon": "tethys",
  "initial_vinf_mps": 750,
  "initial_alpha_deg": 160,
  "eoi_trigger_vinf_mps": 600,
  "db_grid_step_mps": 50,
  "dp_grid_step_mps": 50,
  "tethys.max_m": 10,
  "enceladus.max_m": 10
}"#;

fn moontour(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moontour"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MOONTOUR_OUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn moontour")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Temp dir holding `small.json` and the databases it needs under `out/`.
fn small_workspace() -> TempDir {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "small.json", SMALL);
    let out = moontour(
        &[
            "--config",
            "small.json",
            "--out",
            "out",
            "--moons",
            "tethys,enceladus",
            "gen-db",
        ],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        EXIT_OK,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    tmp
}

fn small_config() -> RunConfig {
    RunConfig::from_json(SMALL, Path::new("small.json")).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn malformed_config_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.json", "{ \"tof_cap_years\": ");
    let out = moontour(&["--config", "bad.json", "--out", "o", "tour"], tmp.path());
    assert_eq!(code(&out), EXIT_CONFIG);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn invalid_value_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "neg.json", r#"{"dv_cap_mps": -1}"#);
    let out = moontour(
        &["--config", "neg.json", "--out", "o", "gen-db"],
        tmp.path(),
    );
    assert_eq!(code(&out), EXIT_CONFIG);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dv_cap_mps"));
}

#[test]
fn unknown_key_and_unknown_moon_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "k.json", r#"{"warp_factor": 9}"#);
    assert_eq!(
        code(&moontour(
            &["--config", "k.json", "--out", "o", "gen-db"],
            tmp.path()
        )),
        EXIT_CONFIG
    );
    assert_eq!(
        code(&moontour(
            &["--out", "o", "--moons", "mimas", "gen-db"],
            tmp.path()
        )),
        EXIT_CONFIG
    );
}

#[test]
fn bad_usage_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&moontour(&["fly"], tmp.path())), EXIT_CONFIG);
    assert_eq!(code(&moontour(&["--help"], tmp.path())), EXIT_OK);
}

#[test]
fn empty_config_file_means_defaults() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "empty.json", "");
    assert_eq!(
        moontour_core::load_config(&p).unwrap(),
        RunConfig::default()
    );
    let p = write(tmp.path(), "braces.json", "{}");
    assert_eq!(
        moontour_core::load_config(&p).unwrap(),
        RunConfig::default()
    );
}

#[test]
fn unwritable_output_exits_with_io_code() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "blocker", "not a directory");
    let out = moontour(
        &["--out", "blocker/sub", "report", "--tour", "0"],
        tmp.path(),
    );
    assert_eq!(code(&out), EXIT_IO);
}

#[test]
fn missing_database_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "small.json", SMALL);
    let out = moontour(
        &["--config", "small.json", "--out", "o", "tour"],
        tmp.path(),
    );
    assert_eq!(code(&out), EXIT_IO);
}

#[test]
fn output_dir_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_moontour"))
        .args(["report", "--tour", "0"])
        .current_dir(tmp.path())
        .env("MOONTOUR_OUT", "from_env")
        .output()
        .unwrap();
    assert_eq!(code(&out), EXIT_FAILURE);
    assert!(tmp.path().join("from_env/run.log").exists());
}

#[test]
fn database_generation_is_byte_reproducible() {
    let tmp = small_workspace();
    let db = tmp.path().join("out/db/tethys.csv");
    let first = std::fs::read(&db).unwrap();
    let out = moontour(
        &[
            "--config",
            "small.json",
            "--out",
            "out",
            "--moons",
            "tethys",
            "--seedless",
            "gen-db",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), EXIT_OK);
    assert_eq!(std::fs::read(&db).unwrap(), first);
    assert!(tmp.path().join("out/run.log").exists());
}

#[test]
fn tour_writes_nested_fronts_and_tours() {
    let tmp = small_workspace();
    let out = moontour(
        &[
            "--config",
            "small.json",
            "--out",
            "out",
            "--seedless",
            "tour",
        ],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        EXIT_OK,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fronts = tmp.path().join("out/fronts");

    let (h, tethys) = read_csv(&fronts.join("tethys.csv"));
    assert_eq!(
        h,
        [
            "row",
            "ancestor",
            "dv_mps",
            "tof_days",
            "alpha_deg",
            "vinf_mps"
        ]
    );
    let (_, enceladus) = read_csv(&fronts.join("enceladus.csv"));
    assert!(!tethys.is_empty() && !enceladus.is_empty());
    for row in &enceladus {
        let a: usize = row[1].parse().unwrap();
        assert!(a < tethys.len(), "ancestor {a} outside the Tethys front");
    }

    let (h, fin) = read_csv(&fronts.join("final.csv"));
    assert_eq!(h, ["tour", "tof_days", "dv_mps", "eoi_dv_mps", "ancestor"]);
    // Final front is non-dominated in (ToF, ΔV).
    let pts: Vec<(f64, f64)> = fin
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let dominated = b.0 <= a.0 && b.1 <= a.1 && (b.0 < a.0 || b.1 < a.1);
            assert!(i == j || !dominated, "final tour {i} dominated by {j}");
        }
    }
    for row in &fin {
        assert!(tmp
            .path()
            .join(format!("out/tours/tour_{}.csv", row[0]))
            .exists());
    }
    assert!(tmp.path().join("out/tours/summary.csv").exists());
}

#[test]
fn report_totals_match_column_sums() {
    let tmp = small_workspace();
    assert_eq!(
        code(&moontour(
            &["--config", "small.json", "--out", "out", "tour"],
            tmp.path()
        )),
        EXIT_OK
    );
    let out = moontour(&["--out", "out", "report", "--tour", "0"], tmp.path());
    assert_eq!(code(&out), EXIT_OK);
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.starts_with("# Tour 0"));
    assert!(md.contains("## Tethys") && md.contains("## Enceladus") && md.contains("## EOI"));

    let cells =
        |line: &str| -> Vec<String> { line.split('|').map(|c| c.trim().to_string()).collect() };
    let (mut tof, mut dv) = (0.0, 0.0);
    let mut section_tof = 0.0;
    let mut section_dv = 0.0;
    let mut in_totals = false;
    for line in md.lines() {
        if line.starts_with("## Totals") {
            in_totals = true;
            continue;
        }
        let c = cells(line);
        if c.len() == 8 && c[1].parse::<u32>().is_ok() {
            section_tof += c[3].parse::<f64>().unwrap();
            section_dv += c[6].parse::<f64>().unwrap();
        } else if c.len() == 8 && c[1] == "Total" {
            assert!((c[3].parse::<f64>().unwrap() - section_tof).abs() < 1e-6);
            assert!((c[6].parse::<f64>().unwrap() - section_dv).abs() < 1e-6);
            tof += section_tof;
            dv += section_dv;
            section_tof = 0.0;
            section_dv = 0.0;
        } else if c.len() == 5 && !in_totals && c[1].parse::<f64>().is_ok() {
            dv += c[3].parse::<f64>().unwrap();
        } else if c.len() == 4 && in_totals && c[1].parse::<f64>().is_ok() {
            assert!(
                (c[1].parse::<f64>().unwrap() - tof).abs() < 1e-6,
                "ToF total"
            );
            assert!((c[2].parse::<f64>().unwrap() - dv).abs() < 1e-6, "ΔV total");
            return;
        }
    }
    panic!("no totals row in\n{md}");
}

#[test]
fn report_of_unknown_tour_fails() {
    let tmp = TempDir::new().unwrap();
    let out = moontour(&["--out", "o", "report", "--tour", "12345"], tmp.path());
    assert_eq!(code(&out), EXIT_FAILURE);
    assert!(String::from_utf8_lossy(&out.stderr).contains("12345"));
}

#[test]
fn tof_cap_too_short_gives_empty_front() {
    let tmp = small_workspace();
    let cfg = SMALL.replace(
        "\"initial_moon\"",
        "\"tof_cap_years\": 0.01, \"initial_moon\"",
    );
    write(tmp.path(), "short.json", &cfg);
    let out = moontour(
        &["--config", "short.json", "--out", "out", "tour"],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        EXIT_EMPTY_FRONT,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn map_writes_curves_ticks_and_svg() {
    let tmp = small_workspace();
    let out = moontour(
        &[
            "--config",
            "small.json",
            "--out",
            "out",
            "--moons",
            "tethys",
            "map",
            "--svg",
        ],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        EXIT_OK,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (h, rows) = read_csv(&tmp.path().join("out/map/tethys.csv"));
    assert_eq!(h, ["family", "vinf_mps", "alpha_deg", "tof_days", "curve"]);
    assert!(!rows.is_empty());
    let (h, _) = read_csv(&tmp.path().join("out/map/tethys_ticks.csv"));
    assert_eq!(h, ["family", "tick", "dv_mps", "vinf_mps", "alpha_deg"]);
    let svg = std::fs::read_to_string(tmp.path().join("out/map/tethys.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let curves: BTreeSet<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(svg.matches("<polyline").count(), curves.len());
}

#[test]
fn map_of_empty_database_is_header_only() {
    let tmp = small_workspace();
    let db = tmp.path().join("out/db/tethys.csv");
    let text = std::fs::read_to_string(&db).unwrap();
    let header = text.lines().next().unwrap();
    std::fs::write(&db, format!("{header}\n")).unwrap();
    let out = moontour(
        &[
            "--config",
            "small.json",
            "--out",
            "out",
            "--moons",
            "tethys",
            "map",
        ],
        tmp.path(),
    );
    assert_eq!(
        code(&out),
        EXIT_OK,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["tethys.csv", "tethys_ticks.csv"] {
        let body = std::fs::read_to_string(tmp.path().join("out/map").join(f)).unwrap();
        assert_eq!(body.lines().count(), 1, "{f}");
    }
}

#[test]
fn rhea_one_to_one_map_has_three_curves() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"db_grid_step_mps": 100, "rhea.max_m": 1}"#;
    write(tmp.path(), "r.json", cfg);
    assert_eq!(
        code(&moontour(
            &["--config", "r.json", "--out", "o", "--moons", "rhea", "gen-db"],
            tmp.path()
        )),
        EXIT_OK
    );
    assert_eq!(
        code(&moontour(
            &["--config", "r.json", "--out", "o", "--moons", "rhea", "map"],
            tmp.path()
        )),
        EXIT_OK
    );
    let (_, rows) = read_csv(&tmp.path().join("o/map/rhea.csv"));
    let families: BTreeSet<&str> = rows
        .iter()
        .map(|r| r[0].as_str())
        .filter(|f| f.starts_with("1:1"))
        .collect();
    assert_eq!(families.len(), 3, "{families:?}");
}

#[test]
fn doubling_tick_spacing_keeps_every_other_tick() {
    let tmp = small_workspace();
    let cfg = small_config();
    let db = ViltDatabase::read_csv(
        &tmp.path().join("out/db/tethys.csv"),
        MoonId::Tethys,
        cfg.bounds_of(MoonId::Tethys),
        cfg.db_grid_step_mps,
    )
    .unwrap();
    let fine = map_ticks(&db, 10.0);
    let coarse = map_ticks(&db, 20.0);
    assert!(!coarse.is_empty());
    for t in &coarse {
        let twin = fine
            .iter()
            .find(|f| {
                f.family == t.family
                    && f.dv_mps == t.dv_mps
                    && (f.v_inf_mps - t.v_inf_mps).abs() < 1e-9
            })
            .expect("matching fine tick");
        assert_eq!(twin.index, 2 * t.index);
        assert!((twin.alpha_deg - t.alpha_deg).abs() < 1e-9);
    }
    assert_eq!(
        fine.iter().filter(|t| t.index % 2 == 0).count(),
        coarse.len()
    );
}

#[test]
fn library_commands_match_binary_output() {
    let tmp = small_workspace();
    let cfg = small_config();
    let layout = Layout::new(tmp.path().join("out"));
    let dbs = commands::load_databases(&cfg, &layout).unwrap();
    assert_eq!(dbs.len(), 2);
    assert_eq!(commands::check_reproducible(&cfg, &dbs).unwrap(), None);
    let (db, _) = commands::generate_database(&cfg, MoonId::Enceladus).unwrap();
    assert_eq!(
        db.to_csv(),
        std::fs::read_to_string(layout.db_file(MoonId::Enceladus)).unwrap()
    );
}
