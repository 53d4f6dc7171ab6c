use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use squeeze_phase::cli::checks::run_checks;
use squeeze_phase::cli::run::{artifacts, write_artifacts};
use squeeze_phase::cli::{parse_config, Command, Format};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Simulate,
    Orbit,
    Hannay,
    Floquet,
    Sweep,
    Check,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

/// Squeezed-state phases and the nonadiabatic Hannay angle of a periodically
/// driven oscillator.
#[derive(Debug, Parser)]
#[command(name = "squeeze-phase", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// Run configuration (key=value lines with [section] headers).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Force every artifact into one format.
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
}

const EXIT_NUMERIC: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errs) => {
            eprintln!("{}: {} configuration error(s)", args.config.display(), errs.0.len());
            eprintln!("{errs}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cmd = match args.command {
        Sub::Simulate => Command::Simulate,
        Sub::Orbit => Command::Orbit,
        Sub::Hannay => Command::Hannay,
        Sub::Floquet => Command::Floquet,
        Sub::Sweep => Command::Sweep,
        Sub::Check => Command::Check,
    };
    if cmd == Command::Check {
        let outcomes = run_checks();
        let failed = outcomes.iter().filter(|o| !o.passed).count();
        for o in &outcomes {
            println!("{}", o.line());
        }
        println!("{} checks, {failed} failed", outcomes.len());
        return if failed == 0 {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(EXIT_NUMERIC)
        };
    }
    if cmd == Command::Sweep && cfg.schedule.standard_family().is_none() {
        eprintln!("sweep requires the standard family");
        return ExitCode::from(EXIT_CONFIG);
    }
    let arts = match artifacts(cmd, &cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    };
    let format = args.format.map(|f| match f {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    });
    match write_artifacts(&arts, &args.out, format) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write output to {}: {e}", args.out.display());
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
