use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jbwcond::Tolerances;
use jbwcond_cli::error::CliError;
use jbwcond_cli::run::{self, Finished};

#[derive(Parser)]
#[command(name = "jbwcond", version, about = "Conditional expectations and the Lueders measurement map on Hermitian matrix algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "JBWCOND_SEED", default_value_t = 0)]
    seed: u64,
    /// Instances per verification suite.
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
    /// Multiplies every numerical tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Dimensions, atom ranks, commutant blocks and state ranks of a problem file.
    Inspect { file: PathBuf },
    /// Run the tasks of a problem file (all of them, or one by index).
    Compute {
        file: PathBuf,
        #[arg(long)]
        task: Option<usize>,
    },
    /// Run a verification suite: lemma2.1, block-criterion, lemma2.2,
    /// lemma3.1, thm4.1, thm4.2, lemma5.1, traces, or all.
    Verify { suite: String },
    /// Run a scripted example: interference, repeatability, tensor-nogo, p-given-y.
    Demo { case: String },
}

fn execute(cli: &Cli) -> Result<Finished, CliError> {
    let c = &cli.common;
    if !(c.tolerance_scale.is_finite() && c.tolerance_scale > 0.0) {
        return Err(CliError::Schema { pointer: "--tolerance-scale".into(), message: "must be a positive number".into() });
    }
    let tol = Tolerances::DEFAULT.scaled(c.tolerance_scale);
    match &cli.command {
        Command::Inspect { file } => run::inspect(file, c.seed, &tol),
        Command::Compute { file, task } => run::compute(file, *task, c.seed, &tol),
        Command::Verify { suite } => run::verify(suite, c.seed, c.trials, &tol),
        Command::Demo { case } => run::run_demo(case, c.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let finished = match execute(&cli) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("jbwcond: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let json = match serde_json::to_string_pretty(&finished.report) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("jbwcond: cannot serialize report: {e}");
            return ExitCode::from(1);
        }
    };
    match cli.common.format {
        Format::Json => println!("{json}"),
        Format::Text => print!("{}", finished.report.to_text()),
    }
    if let Some(path) = &cli.common.out {
        if let Err(e) = std::fs::write(path, format!("{json}\n")) {
            eprintln!("jbwcond: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(finished.exit)
}
