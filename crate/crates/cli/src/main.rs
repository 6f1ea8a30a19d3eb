use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cogrelay_core::experiment::{execute, write_csv, ExperimentSpec, Mode};

/// Run cooperative cognitive relaying experiments and write CSV.
#[derive(Debug, Parser)]
#[command(name = "cogrelay", version)]
struct Args {
    /// TOML experiment file. Without it, every policy is evaluated at the
    /// default operating point.
    #[arg(long)]
    config: Option<PathBuf>,

    /// analytic, simulate, sweep or validate. Overrides the file.
    #[arg(long)]
    mode: Option<Mode>,

    #[arg(long)]
    seed: Option<u64>,

    /// Simulated slots per point.
    #[arg(long)]
    slots: Option<u64>,

    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(args: &Args) -> cogrelay_core::Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(mode) = args.mode {
        spec.mode = mode;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(slots) = args.slots {
        spec.slots = slots;
    }
    if let Some(out) = &args.out {
        spec.output = Some(out.clone());
    }
    Ok(spec)
}

fn run(args: &Args) -> cogrelay_core::Result<ExitCode> {
    let spec = resolve(args)?;
    let table = execute(&spec)?;
    match &spec.output {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| cogrelay_core::Error::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write_csv(&table, &spec, &mut w)?;
            w.flush()?;
        }
        None => write_csv(&table, &spec, io::stdout().lock())?,
    }

    if spec.mode == Mode::Validate {
        let failed = table.failures;
        eprintln!("{} of {} checks failed", failed, table.rows.len());
        if failed > 0 {
            return Ok(ExitCode::FAILURE);
        }
    } else if table.failures > 0 {
        eprintln!("{} rows reported errors", table.failures);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
