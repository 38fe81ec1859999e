use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tactile_core::grades::Grade;
use tactile_sim::{cmd_compare_grades, cmd_simulate, cmd_validate, SimulateArgs, ValidateArgs, EXIT_OK, THREADS_ENV};

#[derive(Parser)]
#[command(name = "tactile-sim", version, about = "Tactile Internet architecture checker and grade simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the [topology] section of a config against the architecture rules.
    Validate {
        config: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the user-plane route between two devices.
        #[arg(long, num_args = 2, value_names = ["FROM", "TO"])]
        route: Option<Vec<String>>,
    },
    /// Simulate one grade and write samples, CDF and summary.
    Simulate(RunArgs),
    /// Simulate both grades on the same seed and report decile dominance.
    CompareGrades(RunArgs),
}

#[derive(Args)]
#[command(after_help = format!("Set {THREADS_ENV}=<n> to choose the number of worker threads (1 = serial)."))]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// ultra or normal (simulate only; default ultra).
    #[arg(long)]
    grade: Option<Grade>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Packets per user and direction.
    #[arg(long)]
    packets: Option<usize>,
    /// Also dump the deployment and RB allocation of this iteration.
    #[arg(long)]
    snapshot: Option<usize>,
}

impl From<RunArgs> for SimulateArgs {
    fn from(a: RunArgs) -> Self {
        SimulateArgs {
            config: a.config,
            out: a.out,
            seed: a.seed,
            grade: a.grade,
            iterations: a.iterations,
            packets: a.packets,
            threads: None,
            snapshot: a.snapshot,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config, report, route } => {
            let route = route.map(|r| (r[0].clone(), r[1].clone()));
            cmd_validate(&ValidateArgs { config, report, route }).map(|o| {
                print!("{}", o.text);
                o.exit_code()
            })
        }
        Command::Simulate(a) => cmd_simulate(&a.into()).map(|o| {
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }),
        Command::CompareGrades(a) => cmd_compare_grades(&a.into()).map(|o| {
            print!("{}", o.text);
            o.exit_code()
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
