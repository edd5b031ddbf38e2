use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use avecon_cli::commands::{cmd_check, cmd_demo_paper, cmd_run, ControllerArg, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ControllerChoice {
    State,
    Output,
    Static,
}

impl From<ControllerChoice> for ControllerArg {
    fn from(choice: ControllerChoice) -> Self {
        match choice {
            ControllerChoice::State => ControllerArg::State,
            ControllerChoice::Output => ControllerArg::Output,
            ControllerChoice::Static => ControllerArg::Static,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "avecon",
    version,
    about = "Output average consensus over heterogeneous linear multi-agent systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario: per-agent admissibility, per-graph connectivity
    /// and balance, and the synthesized gains. Nonzero exit on any failure.
    Check {
        /// Scenario JSON file
        file: PathBuf,
    },
    /// Run a scenario and write trajectory.csv + metrics.json.
    /// Exit status 0 iff all agents settle within tolerance.
    Run {
        /// Scenario JSON file
        file: PathBuf,
        /// Integration step override
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon override
        #[arg(long = "tfinal")]
        t_final: Option<f64>,
        /// Controller override
        #[arg(long, value_enum)]
        controller: Option<ControllerChoice>,
        /// Output directory (defaults to the scenario's `outputs.dir`, else `out`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Materialize and run the built-in four-agent switching demo
    /// (both state- and output-feedback runs unless --controller is given).
    DemoPaper {
        /// Output directory
        #[arg(long, default_value = "demo-out")]
        out: PathBuf,
        /// Run only this controller; `static` selects the scalar sub-demo
        #[arg(long, value_enum)]
        controller: Option<ControllerChoice>,
        /// Use agent 3 exactly as printed to demonstrate the validation error
        #[arg(long)]
        printed_agent3: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check { file } => cmd_check(&file),
        Command::Run {
            file,
            dt,
            t_final,
            controller,
            out,
        } => {
            let opts = RunOptions {
                dt,
                t_final,
                controller: controller.map(Into::into),
                out_dir: out,
            };
            cmd_run(&file, &opts)
        }
        Command::DemoPaper {
            out,
            controller,
            printed_agent3,
        } => cmd_demo_paper(&out, controller.map(Into::into), printed_agent3),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
