//! The four subcommands as library functions.

use std::path::PathBuf;

use moontour_core::pathfinder::{run_full_tour, TourOptions, TourResult};
use moontour_core::vilt::{build_database, ViltDatabase};
use moontour_core::{Error, MoonId, Result, RunConfig};

use crate::map::{map_curves, map_ticks, render_svg, MapTick};
use crate::output::{self, front_csvs, write_file, Layout};
use crate::report;

/// Outcome of building one moon's database.
#[derive(Debug, Clone, PartialEq)]
pub struct DbSummary {
    pub moon: MoonId,
    pub families: usize,
    pub records: usize,
    pub skipped: usize,
    pub path: PathBuf,
}

impl std::fmt::Display for DbSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} families, {} records, {} skipped -> {}",
            self.moon.name(),
            self.families,
            self.records,
            self.skipped,
            self.path.display()
        )
    }
}

/// Run `f` on the configured number of worker threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Validation(format!("workers: {e}")))?;
    Ok(pool.install(f))
}

/// Build the database of one moon in memory.
pub fn generate_database(config: &RunConfig, moon: MoonId) -> Result<(ViltDatabase, usize)> {
    config.validate()?;
    let sys = config.system();
    let build = with_workers(config.workers, || {
        build_database(moon, &sys, config.bounds_of(moon), config.db_grid_step_mps)
    })?;
    Ok((build.database, build.skipped.len()))
}

/// Build and write the databases of `moons` under `db/`.
pub fn cmd_gen_db(config: &RunConfig, moons: &[MoonId], layout: &Layout) -> Result<Vec<DbSummary>> {
    let mut out = Vec::new();
    for &moon in moons {
        let (db, skipped) = generate_database(config, moon)?;
        let path = layout.db_file(moon);
        write_file(&path, &db.to_csv())?;
        let summary = DbSummary {
            moon,
            families: db.tables.len(),
            records: db.len(),
            skipped,
            path,
        };
        log::info!("{summary}");
        out.push(summary);
    }
    Ok(out)
}

/// Moons visited by a tour starting at the configured moon.
pub fn tour_moons(config: &RunConfig) -> Vec<MoonId> {
    MoonId::ALL
        .into_iter()
        .filter(|m| m.index() >= config.initial_moon.index())
        .collect()
}

pub fn load_databases(config: &RunConfig, layout: &Layout) -> Result<Vec<ViltDatabase>> {
    tour_moons(config)
        .into_iter()
        .map(|m| {
            ViltDatabase::read_csv(
                &layout.db_file(m),
                m,
                config.bounds_of(m),
                config.db_grid_step_mps,
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TourRun {
    pub result: TourResult,
    pub written: Vec<PathBuf>,
}

/// Run the tour on the databases under `db/` and write fronts and tours.
pub fn cmd_tour(config: &RunConfig, layout: &Layout, options: &TourOptions) -> Result<TourRun> {
    config.validate()?;
    let dbs = load_databases(config, layout)?;
    let result = run_full_tour(config, &dbs, options)?;
    let written = output::write_results(layout, &result)?;
    log::info!(
        "{} tours on the final front, results in {}",
        result.tours.len(),
        layout.root.display()
    );
    Ok(TourRun { result, written })
}

/// Run the tour twice and compare every front file byte for byte.
pub fn check_reproducible(config: &RunConfig, dbs: &[ViltDatabase]) -> Result<Option<String>> {
    let a = front_csvs(&run_full_tour(config, dbs, &TourOptions::default())?);
    let b = front_csvs(&run_full_tour(config, dbs, &TourOptions::default())?);
    Ok(a.iter()
        .zip(&b)
        .find(|(x, y)| x != y)
        .map(|(x, _)| x.0.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    pub curves: PathBuf,
    pub ticks: PathBuf,
    pub svg: Option<PathBuf>,
    pub samples: usize,
    pub tick_marks: Vec<MapTick>,
}

/// Pump-V_inf map of one moon from its stored database.
pub fn cmd_map(config: &RunConfig, moon: MoonId, layout: &Layout, svg: bool) -> Result<MapOutput> {
    config.validate()?;
    let db = ViltDatabase::read_csv(
        &layout.db_file(moon),
        moon,
        config.bounds_of(moon),
        config.db_grid_step_mps,
    )?;
    let sys = config.system();
    let samples = map_curves(&db, &sys);
    let ticks = map_ticks(&db, config.map_tick_dv_mps);
    let dir = layout.map_dir();
    let step = db.step_mps / 6.0;
    let curves = dir.join(format!("{}.csv", moon.key()));
    write_file(&curves, &crate::map::curves_csv(&samples, step))?;
    let ticks_path = dir.join(format!("{}_ticks.csv", moon.key()));
    write_file(&ticks_path, &crate::map::ticks_csv(&ticks))?;
    let svg = if svg {
        let path = dir.join(format!("{}.svg", moon.key()));
        let b = config.bounds_of(moon);
        let title = format!("{} pump-V_inf map", moon.name());
        write_file(
            &path,
            &render_svg(
                &samples,
                &ticks,
                (b.v_inf_min_mps, b.v_inf_max_mps),
                step,
                &title,
            ),
        )?;
        Some(path)
    } else {
        None
    };
    Ok(MapOutput {
        curves,
        ticks: ticks_path,
        svg,
        samples: samples.len(),
        tick_marks: ticks,
    })
}

/// Markdown report of a stored tour.
pub fn cmd_report(layout: &Layout, tour_id: usize) -> Result<String> {
    let path = layout.tour_file(tour_id);
    if !path.exists() {
        return Err(Error::UnknownTourId(tour_id));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| output::io_error(&path, e))?;
    let rows = report::parse_tour_csv(&text, &path)?;
    Ok(report::render(tour_id, &rows))
}
