use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtr_cli::{
    reconcile_from_snapshot, run_experiment, run_grid_only, validate_data, CliResult, RunConfig,
    Settings,
};

#[derive(Parser)]
#[command(
    name = "dtr",
    version,
    about = "Revise a monthly forecast from daily actuals"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Train on past months and stream the test month.
    Run(Common),
    /// Sweep tolerance × exploration.
    Grid(Common),
    /// Stream the test month through a saved Q-table.
    Reconcile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Check that the data loads and covers the configured months.
    ValidateData(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML config file; flags override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

impl Common {
    fn resolve(self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        RunConfig::resolve(base.overlay(self.settings))
    }
}

fn execute(verb: Verb) -> CliResult<String> {
    match verb {
        Verb::Run(c) => run_experiment(&c.resolve()?).map(|s| s.describe()),
        Verb::Grid(c) => run_grid_only(&c.resolve()?).map(|s| s.describe()),
        Verb::Reconcile { common, snapshot } => {
            reconcile_from_snapshot(&common.resolve()?, &snapshot).map(|s| s.describe())
        }
        Verb::ValidateData(c) => validate_data(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.verb) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
