use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moontour_cli::output::front_csvs;
use moontour_cli::{
    commands, exit_code, Layout, DEFAULT_OUT, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, OUT_ENV,
};
use moontour_core::pathfinder::{run_full_tour, TourOptions};
use moontour_core::{load_config, Error, MoonId, RunConfig};

#[derive(Parser)]
#[command(
    name = "moontour",
    version,
    about = "Resonance-hopping tour design from Titan to Enceladus"
)]
struct Cli {
    /// JSON configuration; unset keys take the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated moons (gen-db, map).
    #[arg(long, global = true, value_delimiter = ',')]
    moons: Vec<String>,
    /// Results directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Run twice and fail unless the outputs are identical.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the leveraging databases.
    GenDb,
    /// Run the tour search on the stored databases.
    Tour {
        /// Write a checkpoint per completed moon phase here.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Skip phases whose checkpoint exists.
        #[arg(long, requires = "checkpoints")]
        resume: bool,
    },
    /// Pump-V_inf map data of the selected moons.
    Map {
        /// Also render an SVG.
        #[arg(long)]
        svg: bool,
    },
    /// Markdown report of one tour.
    Report {
        #[arg(long)]
        tour: usize,
    },
}

/// Writes every log line to stderr and to the run log.
struct Tee(File);

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        std::io::stderr().write_all(buf)?;
        self.0.write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        std::io::stderr().flush()?;
        self.0.flush()
    }
}

fn init_logging(layout: &Layout) -> Result<(), Error> {
    let io = |path: PathBuf, source| Error::Io { path, source };
    std::fs::create_dir_all(&layout.root).map_err(|e| io(layout.root.clone(), e))?;
    let log = layout.run_log();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log)
        .map_err(|e| io(log.clone(), e))?;
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Pipe(Box::new(Tee(file))))
        .init();
    Ok(())
}

fn parse_moons(names: &[String]) -> Result<Vec<MoonId>, Error> {
    if names.is_empty() {
        return Ok(MoonId::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| {
            MoonId::parse(n.trim()).ok_or_else(|| Error::Validation(format!("unknown moon '{n}'")))
        })
        .collect()
}

enum Failure {
    Core(Error),
    /// `--seedless` found two runs that differ.
    NotReproducible(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let layout = Layout::new(out);
    init_logging(&layout)?;
    let moons = parse_moons(&cli.moons)?;

    match cli.command {
        Command::GenDb => {
            for s in commands::cmd_gen_db(&config, &moons, &layout)? {
                println!("{s}");
                if cli.seedless {
                    let (again, _) = commands::generate_database(&config, s.moon)?;
                    let stored = std::fs::read_to_string(&s.path).map_err(|e| Error::Io {
                        path: s.path.clone(),
                        source: e,
                    })?;
                    if again.to_csv() != stored {
                        return Err(Failure::NotReproducible("databases"));
                    }
                }
            }
        }
        Command::Tour {
            checkpoints,
            resume,
        } => {
            let options = TourOptions {
                checkpoint_dir: checkpoints,
                resume,
            };
            let run = commands::cmd_tour(&config, &layout, &options)?;
            if cli.seedless {
                let dbs = commands::load_databases(&config, &layout)?;
                let again = run_full_tour(&config, &dbs, &TourOptions::default())?;
                if front_csvs(&again) != front_csvs(&run.result) {
                    return Err(Failure::NotReproducible("fronts"));
                }
            }
            println!(
                "{} tours; fronts in {}",
                run.result.tours.len(),
                layout.fronts_dir().display()
            );
        }
        Command::Map { svg } => {
            for moon in moons {
                let m = commands::cmd_map(&config, moon, &layout, svg)?;
                println!(
                    "{}: {} samples, {} ticks -> {}",
                    moon.name(),
                    m.samples,
                    m.tick_marks.len(),
                    m.curves.display()
                );
            }
        }
        Command::Report { tour } => print!("{}", commands::cmd_report(&layout, tour)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK } as u8);
        }
    };
    let code = match run(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(Failure::NotReproducible(what)) => {
            eprintln!("error: two runs produced different {what}");
            EXIT_FAILURE
        }
    };
    ExitCode::from(code as u8)
}
