use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use nonharmonic_cli::{run, Format, Invocation, Task};

/// Config-driven experiments on the nonharmonic pseudo-differential calculus.
///
/// Exit codes: 0 success, 1 numerical verdict failure, 2 usage or config error.
#[derive(Debug, Parser)]
#[command(name = "nonharmonic", version)]
struct Cli {
    #[arg(value_enum)]
    task: Task,
    /// TOML run configuration; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory, overriding `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// seed, overriding `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// format of the summary printed on stdout
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// write SVG plots next to the CSV series
    #[arg(long, value_parser = ["on", "off"], default_value = "on")]
    plots: String,
}

fn main() {
    let cli = Cli::parse();
    let outcome = run(&Invocation {
        task: cli.task,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        format: cli.format,
        plots: cli.plots == "on",
    });
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    std::process::exit(outcome.code);
}
