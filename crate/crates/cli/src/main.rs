use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pbg_core::scan::{emit_figure_recipe, from_toml, run_scan, to_toml, ScanError, ScanOutcome, ScanSpec};

/// Squeezing and photon statistics of a nonlinear band-gap waveguide.
#[derive(Parser)]
#[command(name = "pbg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scan described by a TOML config.
    Run {
        config: PathBuf,
        /// Override `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: PBG_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the prebuilt scan for figure 2..12.
    Figure {
        id: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Points per axis instead of the recipe default.
        #[arg(long)]
        points: Option<usize>,
        /// Print the recipe as a config file and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<ScanSpec, ScanError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScanError::Io {
        path: path.clone(),
        source,
    })?;
    from_toml(&text)
}

fn summary(spec: &ScanSpec, outcome: &ScanOutcome) {
    let t = &outcome.table;
    println!(
        "points={} failed={} csv={} plot={} meta={}",
        t.rows.len(),
        t.failures(),
        outcome.files.csv.display(),
        outcome.files.plot.display(),
        outcome.files.meta.display()
    );
    if let (Some(mf), Some(u)) = (&outcome.files.mean_field, &outcome.files.input_output) {
        println!("meanfield={} u={}", mf.display(), u.display());
    }
    if spec.axes().is_empty() {
        for (o, v) in t.observables.iter().zip(&t.rows[0].values) {
            match v {
                Some(v) => println!("{o} = {v}"),
                None => println!("{o} = undefined"),
            }
        }
    }
}

fn execute(cli: Cli) -> Result<(), ScanError> {
    match cli.command {
        Command::Run { config, out, workers } => {
            let mut spec = load(&config)?;
            if let Some(dir) = out {
                spec.output.dir = dir;
            }
            let outcome = run_scan(&spec, workers)?;
            summary(&spec, &outcome);
        }
        Command::Figure {
            id,
            out,
            workers,
            points,
            print_config,
        } => {
            let mut spec = emit_figure_recipe(id)?;
            if let Some(dir) = out {
                spec.output.dir = dir;
            }
            if let Some(n) = points {
                for a in &mut spec.scan.axis {
                    a.count = n;
                }
            }
            if print_config {
                print!("{}", to_toml(&spec));
                return Ok(());
            }
            let outcome = run_scan(&spec, workers)?;
            summary(&spec, &outcome);
        }
        Command::Validate { config } => {
            let spec = load(&config)?;
            spec.validate()?;
            let names: Vec<String> = spec.scan.observables.iter().map(|o| o.to_string()).collect();
            println!(
                "ok points={} axes={} observables={}",
                spec.point_count(),
                spec.axes().len(),
                names.join(",")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error kind={} message={:?}", e.kind(), message);
            ExitCode::FAILURE
        }
    }
}
