use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wgm_isolator_cli::{error_json, parse_config, run, write_error_record, CliError, Command};

/// Non-reciprocal transmission of a waveguide-coupled resonator with a
/// helicity-sensitive emitter.
#[derive(Debug, Parser)]
#[command(name = "wgm-isolator", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a configuration value, e.g. `--set params.g0=25`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Forward/backward transmission and reflection over a detuning grid.
    Spectrum,
    /// Polariton eigenvalues swept over the splitting or the helicity.
    Eigen,
    /// Helicity map of a field cross-section.
    Helicity,
    /// Maximum-contrast operating point and the zero-backward curve.
    Optimize,
    /// Contrast map over waveguide coupling and splitting.
    Sweep,
    /// Linearised model against the truncated master equation.
    Validate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Eigen => Command::Eigen,
            Cmd::Helicity => Command::Helicity,
            Cmd::Optimize => Command::Optimize,
            Cmd::Sweep => Command::Sweep,
            Cmd::Validate => Command::Validate,
        }
    }
}

fn fail(err: &CliError, command: Option<Command>, out: Option<&PathBuf>) -> ExitCode {
    eprintln!("error: {err}");
    eprintln!("{}", error_json(err, command));
    if let Some(dir) = out {
        write_error_record(dir, err, command);
    }
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            let err = CliError::Config(e.kind().to_string());
            eprintln!("{}", error_json(&err, None));
            return ExitCode::from(2);
        }
    };
    let command = Command::from(cli.command);
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            let err = CliError::Config(format!("--threads must be a positive integer, got {n}"));
            return fail(&err, Some(command), Some(&cli.out));
        }
    }
    let config = match parse_config(command, cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e, Some(command), Some(&cli.out)),
    };
    match run(&config, &cli.out) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            println!(
                "wrote {} files to {} in {:.2}s",
                summary.outputs.len(),
                cli.out.display(),
                summary.wall_time_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(command), Some(&cli.out)),
    }
}
