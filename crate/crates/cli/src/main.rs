use std::path::PathBuf;
use std::process::ExitCode;

use bubblelab_cli::compare::compare_files;
use bubblelab_cli::run::{batch_exit_code, run_all};
use bubblelab_cli::sweep::{sweep_csv, sweep_vertex_separation};
use bubblelab_cli::{load_scenarios, stop_exit_code, CliError, Overrides, EXIT_OK};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bubblelab", version, about = "Evolve bubble clusters in R³ with density r^p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Seed refinement level (overrides the scenario file).
    #[arg(long)]
    refine_level: Option<u32>,
    /// Maximum accepted descent steps (overrides the scenario file).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Directory for .obj, .trace.csv and .metrics.csv outputs.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Random seed displacement as a fraction of the cluster diameter.
    #[arg(long)]
    seed_jitter: Option<f64>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides { refine_level: self.refine_level, max_iter: self.max_iter, seed_jitter: self.seed_jitter }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a file.
    Run {
        scenario_file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compare the weighted areas of two metrics reports.
    Compare { a: PathBuf, b: PathBuf },
    /// Singular-vertex separation of a triple bubble across density exponents.
    Sweep {
        /// Exponents to run; defaults to the scenario's own [sweep] p list.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        p: Option<Vec<f64>>,
        scenario_file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run { scenario_file, flags } => {
            let mut scenarios = load_scenarios(&scenario_file)?;
            for s in &mut scenarios {
                s.apply(&flags.overrides());
            }
            let results = run_all(&scenarios, &flags.out_dir);
            for (name, r) in &results {
                match r {
                    Ok(s) => println!("{}", s.line()),
                    Err(e) => eprintln!("{name}: error: {e}"),
                }
            }
            Ok(batch_exit_code(&results))
        }
        Command::Compare { a, b } => {
            print!("{}", compare_files(&a, &b)?.report());
            Ok(EXIT_OK)
        }
        Command::Sweep { p, scenario_file, flags } => {
            let mut scenarios = load_scenarios(&scenario_file)?;
            if scenarios.len() != 1 {
                return Err(CliError::Config(format!(
                    "{}: a sweep needs exactly one scenario, found {}",
                    scenario_file.display(),
                    scenarios.len()
                )));
            }
            let mut base = scenarios.remove(0);
            base.apply(&flags.overrides());
            let ps = p.unwrap_or_else(|| base.sweep.as_ref().map(|s| s.p.clone()).unwrap_or_default());
            let rows = sweep_vertex_separation(&base, &ps, &flags.out_dir)?;
            let table = sweep_csv(&rows);
            std::fs::create_dir_all(&flags.out_dir)?;
            std::fs::write(flags.out_dir.join(format!("{}.sweep.csv", base.name)), &table)?;
            print!("{table}");
            Ok(rows.iter().map(|r| stop_exit_code(r.stop)).max().unwrap_or(EXIT_OK))
        }
    }
}

fn main() -> ExitCode {
    // Usage errors share the configuration exit code; clap's own default
    // of 2 would read as a stalled run.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { bubblelab_cli::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
