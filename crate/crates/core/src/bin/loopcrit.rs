use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loopcrit::runner::{self, ExperimentSpec};
use loopcrit::{io, pathspace};

#[derive(Parser)]
#[command(name = "loopcrit", version, about = "Critical lengths of loop spaces on warped-product spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment spec and write its report.
    Run { spec: PathBuf },
    /// Tabulate crl, crl_p and 2 d_p over the example family.
    FamilySweep {
        /// Comma-separated equatorial radii in (0, 1].
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
        r: Vec<f64>,
        #[arg(long, default_value = "family_sweep.csv")]
        out: PathBuf,
        /// Segments per loop.
        #[arg(long, default_value_t = pathspace::LOOP_SEGMENTS)]
        segments: usize,
    },
    /// Parse a spec and validate its metric without running it.
    Validate { spec: PathBuf },
}

fn init_threads() {
    if let Some(n) = std::env::var("LOOPCRIT_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn fail(err: loopcrit::Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(runner::exit_code(&err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match cli.command {
        Command::Run { spec } => {
            let spec = match ExperimentSpec::from_file(&spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match runner::run(&spec) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report.results).unwrap_or_default());
                    println!("report: {}", spec.run_dir().join("report.json").display());
                    if report.converged {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("error: minimax did not converge within the round budget");
                        ExitCode::from(runner::EXIT_NON_CONVERGED as u8)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::FamilySweep { r, out, segments } => {
            let rows = runner::sweep_family(&r, segments);
            if let Err(e) = io::write_csv(&out, &rows) {
                return fail(e);
            }
            match io::csv_bytes(&rows) {
                Ok(b) => print!("{}", String::from_utf8_lossy(&b)),
                Err(e) => return fail(e),
            }
            if !runner::crl_trend_holds(&rows) {
                eprintln!("warning: crl is not strictly increasing in r");
            }
            if rows.iter().all(|row| row.status == "ok") {
                ExitCode::SUCCESS
            } else if rows.iter().any(|row| row.status.starts_with("error")) {
                ExitCode::from(runner::EXIT_VALIDATION as u8)
            } else {
                ExitCode::from(runner::EXIT_NON_CONVERGED as u8)
            }
        }
        Command::Validate { spec } => {
            let parsed = ExperimentSpec::from_file(&spec).and_then(|s| s.metric.build().map(|g| (s, g)));
            match parsed {
                Ok((s, g)) => {
                    println!(
                        "ok: {} ({:?}) metric {} minK {:.6} maxK {:.6}",
                        s.name,
                        s.experiment,
                        g.descriptor(),
                        g.min_curvature(),
                        g.max_curvature()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
