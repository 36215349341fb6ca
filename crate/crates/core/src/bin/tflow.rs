use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tflow::commands::{cmd_flow, cmd_sweep, cmd_translator, cmd_verify};
use tflow::parse_config;

#[derive(Parser)]
#[command(
    name = "tflow",
    version,
    about = "Mean curvature flow with Neumann data and its translating limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs (falls back to TFLOW_JOBS, then 1).
    #[arg(long, env = "TFLOW_JOBS", default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow until it translates or reaches t_max.
    Flow(RunArgs),
    /// Eigenvalue and profile by eps-continuation and the integral formula.
    Translator(RunArgs),
    /// Run the diagnostics suite.
    Verify(RunArgs),
    /// Map a to lambda(a) for constant boundary data.
    Sweep(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Flow(a) => ("flow", a),
        Command::Translator(a) => ("translator", a),
        Command::Verify(a) => ("verify", a),
        Command::Sweep(a) => ("sweep", a),
    };
    let result = parse_config(&args.config).and_then(|cfg| {
        let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        match name {
            "flow" => cmd_flow(&cfg, &out),
            "translator" => cmd_translator(&cfg, &out),
            "verify" => cmd_verify(&cfg, &out, args.jobs),
            _ => cmd_sweep(&cfg, &out, args.jobs),
        }
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error kind={} command={name} message=\"{e}\"", e.kind());
            ExitCode::from(2)
        }
    }
}
