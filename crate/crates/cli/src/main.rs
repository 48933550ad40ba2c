use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ionflux_cli::{run, Command};

#[derive(Debug, Parser)]
#[command(name = "ionflux", version, about = "Asymptotic and direct fluxes for a two-ion hard-sphere channel")]
struct Args {
    command: Command,
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();

    match run(args.command, &args.config, args.out.as_deref()) {
        Ok(report) => {
            print!("{}", report.summary_table());
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.convergence.failures {
                eprintln!("failed point {}: {}", f.value, f.error);
            }
            println!("status: {}; {} files in {}", report.status.name(), report.files.len(), report.output_directory.display());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
