use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gk_lab::emit::emit;
use gk_lab::{run, Command, ExperimentConfig, Format, LabError};

/// Run a seeded experiment and write its report.
///
/// Exit status: 0 when every asserted property holds, 1 when one fails,
/// 2 for an invalid config, 3 for I/O errors.
#[derive(Parser, Debug)]
#[command(name = "gk-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, overriding the config; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gk-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, LabError> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    match config.command {
        Some(c) if c != cli.command => {
            return Err(LabError::Config(format!(
                "config is for {c:?}, command line asks for {:?}",
                cli.command
            )))
        }
        _ => config.command = Some(cli.command),
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.path = Some(out.clone());
    }
    if let Some(f) = cli.format {
        config.output.format = f;
    }
    config.validate()?;

    let bundle = run(&config)?;
    match &config.output.path {
        Some(path) => emit(&bundle, config.output.format, BufWriter::new(File::create(path)?))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            emit(&bundle, config.output.format, &mut lock)?;
            lock.flush()?;
        }
    }
    let agg = &bundle.aggregate;
    eprintln!(
        "gk-lab: {}/{} cases passed, {} failed assertions",
        agg.cases_passed,
        agg.cases,
        agg.failures.len()
    );
    Ok(bundle.passed())
}
