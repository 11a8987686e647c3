use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deturck::io::config::tokenize;
use deturck::io::{run, RunConfig};
use deturck::problems::RunOutcome;
use deturck::Error;

const EXIT_DEGENERATED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(version, about = "Evolve triangulated surfaces with harmonic-map reparametrization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment; flags override values from the config file.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    c_tau: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Adaptation interval, or `off`.
    #[arg(long)]
    t_adapt: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    diffusivity: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    /// `false` runs the baseline scheme.
    #[arg(long)]
    deturck: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    snapshot_interval: Option<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long)]
    dynamics: Option<String>,
    /// Any other key=value pair; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> deturck::Result<RunConfig> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                tokenize(&text, path)?
            }
            None => Vec::new(),
        };
        let flags = [
            ("example", &self.example),
            ("level", &self.level),
            ("c_tau", &self.c_tau),
            ("alpha", &self.alpha),
            ("epsilon", &self.epsilon),
            ("t_adapt", &self.t_adapt),
            ("sigma", &self.sigma),
            ("diffusivity", &self.diffusivity),
            ("t_end", &self.t_end),
            ("deturck", &self.deturck),
            ("output", &self.output),
            ("snapshot_interval", &self.snapshot_interval),
            ("input", &self.input),
            ("manifold", &self.manifold),
            ("dynamics", &self.dynamics),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                pairs.push((key.to_string(), v.clone()));
            }
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{item}'")))?;
            pairs.push((k.to_string(), v.to_string()));
        }
        RunConfig::from_pairs(&pairs)
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let Command::Run(args) = cli.command;
    let config = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&config) {
        Ok(summary) => match summary.outcome {
            RunOutcome::Completed => ExitCode::SUCCESS,
            RunOutcome::Degenerated { time, reason } => {
                eprintln!("mesh degenerated at t = {time:e}: {reason}");
                if config.deturck {
                    ExitCode::from(EXIT_DEGENERATED)
                } else {
                    ExitCode::SUCCESS
                }
            }
        },
        Err(e @ (Error::Config(_) | Error::Parse { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
