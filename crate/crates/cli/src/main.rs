use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdecide_cli::{corpus, parse_rational, run, Format, RunConfig, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "qdecide", version, about = "Decide robust bounded sentences over the reals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one sentence, given inline or with --file.
    Solve {
        #[command(flatten)]
        opts: Opts,
        #[arg(long, short, conflicts_with = "formula")]
        file: Option<PathBuf>,
        formula: Option<String>,
    },
    /// Run every `.qd` file in a directory against its `.expect` sidecar.
    Corpus {
        #[command(flatten)]
        opts: Opts,
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct Opts {
    /// Maximum number of refinement iterations.
    #[arg(long, default_value_t = 20)]
    budget: u32,
    /// Initial refinement, e.g. 1, 1/4 or 0.5.
    #[arg(long, default_value = "1")]
    epsilon: String,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Report the robustness margin or separation bound.
    #[arg(long)]
    certificate: bool,
    /// Worker threads for the parallel sections; 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
    /// Per-iteration statistics.
    #[arg(long)]
    trace: bool,
    /// Wall-clock limit per iteration in seconds; reaching it answers UNKNOWN.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl Opts {
    fn config(&self) -> Result<RunConfig, String> {
        let epsilon = parse_rational(&self.epsilon).ok_or_else(|| format!("invalid epsilon `{}`", self.epsilon))?;
        let time_limit = match self.time_limit {
            Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => return Err(format!("invalid time limit `{s}`")),
            None => None,
        };
        let config = RunConfig {
            budget: self.budget,
            epsilon,
            format: match self.format {
                FormatArg::Text => Format::Text,
                FormatArg::Json => Format::Json,
            },
            certificate: self.certificate,
            trace: self.trace,
            workers: self.workers,
            time_limit,
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_ERROR as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { opts, file, formula } => {
            let config = match opts.config() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let source = match (file, formula) {
                (Some(path), _) => match std::fs::read_to_string(&path) {
                    Ok(s) => s,
                    Err(e) => return fail(format!("{}: {e}", path.display())),
                },
                (None, Some(f)) => f,
                (None, None) => return fail("no formula given"),
            };
            let out = run(&config, &source);
            if out.report.is_some() {
                print!("{}", out.text);
                if config.format == Format::Json {
                    println!();
                }
            } else {
                eprintln!("{}", out.text);
            }
            ExitCode::from(out.exit as u8)
        }
        Command::Corpus { opts, dir } => {
            let config = match opts.config() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match corpus(&config, &dir) {
                Ok(summary) => {
                    print!("{}", summary.table());
                    ExitCode::from(summary.exit() as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
