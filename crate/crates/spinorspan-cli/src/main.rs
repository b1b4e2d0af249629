//! Command line front end: reads a spec file, runs one command and writes a
//! JSON report. The exit code is 0 on pass, 1 on a failed verification, 2
//! on bad input and 3 when the window cannot be certified.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinorspan::report::{parse_twist, run, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "spinorspan",
    version,
    about = "Exact checks of pure spinor multiplet spans"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tate resolution stage log.
    Resolve(Opts),
    /// Cohomology dimension tables.
    Cohomology(Opts),
    /// Build and verify both legs of the span.
    Span(Opts),
    /// Run every check on the spec.
    Verify(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = -4, allow_hyphen_values = true)]
    degree_min: i32,
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    degree_max: i32,
    #[arg(long, default_value_t = 6)]
    max_weight: i32,
    #[arg(long, default_value_t = 4)]
    max_stage: usize,
    #[arg(long, default_value_t = 4)]
    arity: usize,
    /// Comma separated components of Q, e.g. "0,1,0" or "1/2,0".
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    twist: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Cmd::Resolve(o) => (Command::Resolve, o),
        Cmd::Cohomology(o) => (Command::Cohomology, o),
        Cmd::Span(o) => (Command::Span, o),
        Cmd::Verify(o) => (Command::Verify, o),
    };
    let twist = match parse_twist(&opts.twist) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&opts.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", opts.spec.display());
            return ExitCode::from(2);
        }
    };
    let config = RunConfig {
        degree_min: opts.degree_min,
        degree_max: opts.degree_max,
        weight_max: opts.max_weight,
        stage_max: opts.max_stage,
        arity_max: opts.arity,
        twist,
    };
    let outcome = run(command, &text, &config);
    if let Some(err) = outcome.report.get("error") {
        eprintln!("error: {}", err["message"].as_str().unwrap_or_default());
    }
    let json = outcome.to_json();
    match &opts.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{json}"),
    }
    ExitCode::from(outcome.status.code())
}
