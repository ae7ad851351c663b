use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use curveflow::commands;
use curveflow::config::Overrides;

/// Nonlocal curvature flow between locally convex curves.
#[derive(Parser)]
#[command(name = "curveflow", version, about, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow; write metrics, snapshots and frames with --out
    Simulate(RunArgs),
    /// Print the shape summary table and check it against a reference
    Table(RunArgs),
    /// Deform the initial curve onto the energy-matched circle cover
    Homotopy(RunArgs),
    /// Check every a priori bound along the trajectory
    Verify(RunArgs),
    /// Report limit constant, decay rate and curvature-ratio bound
    Analyze(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Directory to write output files into
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Relative tolerance when comparing against a reference table
    #[arg(long, value_name = "TOL")]
    tolerance: Option<f64>,

    /// Override the time step from the configuration
    #[arg(long, value_name = "DT")]
    dt: Option<f64>,

    /// Override the grid size from the configuration
    #[arg(long, value_name = "N")]
    n: Option<usize>,

    /// Override the final time from the configuration
    #[arg(long, value_name = "T")]
    t_end: Option<f64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            dt: self.dt,
            t_end: self.t_end,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => commands::cmd_simulate(&a.config, a.out.as_deref(), &a.overrides()),
        Command::Table(a) => {
            commands::cmd_table(&a.config, a.out.as_deref(), a.tolerance, &a.overrides())
        }
        Command::Homotopy(a) => commands::cmd_homotopy(&a.config, a.out.as_deref(), &a.overrides()),
        Command::Verify(a) => commands::cmd_verify(&a.config, &a.overrides()),
        Command::Analyze(a) => commands::cmd_analyze(&a.config, a.out.as_deref(), &a.overrides()),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
