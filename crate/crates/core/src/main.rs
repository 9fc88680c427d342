use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mkdv_lab::lab::config::{parse_config, ExperimentConfig, ExperimentKind};
use mkdv_lab::lab::record::RunRecord;
use mkdv_lab::lab::report::{emit_report, render_table, Format};
use mkdv_lab::lab::run::run_experiment;
use mkdv_lab::probes::params::EstimateKind;
use mkdv_lab::probes::runner::ProbeConfig;
use mkdv_lab::{LabError, Result};

/// Fourier-Lebesgue estimate probes and a Picard solver for mKdV.
///
/// Exit codes: 0 success, 1 precondition or configuration failure,
/// 2 numerical failure (divergence, resolution, or a flagged estimate), 3 I/O.
#[derive(Parser, Debug)]
#[command(name = "mkdv-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the run record and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid size N overriding the resolution ladder.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Report format: csv, svg or table.
    #[arg(long, global = true, default_value = "table")]
    format: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Probe one estimate over dilations 2^k, |k| <= 3.
    Verify {
        /// Estimate kind, e.g. TRILINEAR_T2.
        kind: String,
    },
    /// Run a probe or sweep configuration.
    Sweep,
    /// Picard solve cross-checked against the reference integrator.
    Solve,
    /// Data-to-solution Lipschitz quotients.
    Lipschitz,
    /// Re-emit the report of a saved run (`<out>/record.json`).
    Report,
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let from_file = cli.config.as_deref().map(load).transpose()?;
    let mut config = match &cli.command {
        Command::Verify { kind } => {
            let kind: EstimateKind = kind.parse()?;
            match from_file {
                Some(c) => {
                    let matches = c.probe.as_ref().is_some_and(|p| p.estimate == kind);
                    if !matches {
                        return Err(LabError::Config(vec![format!(
                            "the configuration does not hold a [probe] section for {kind}"
                        )]));
                    }
                    c
                }
                None => {
                    let mut c = ExperimentConfig::probe(kind, ExperimentKind::Sweep, 0);
                    c.probe.as_mut().expect("probe section").lambdas = ProbeConfig::octave_lambdas();
                    c
                }
            }
        }
        Command::Sweep => match from_file {
            Some(c) if matches!(c.kind, ExperimentKind::Probe | ExperimentKind::Sweep) => c,
            Some(c) => {
                return Err(LabError::Config(vec![format!(
                    "`sweep` runs probe or sweep configurations, not kind = {}",
                    c.kind.name()
                )]))
            }
            None => return Err(LabError::Config(vec!["`sweep` needs --config".into()])),
        },
        Command::Solve | Command::Lipschitz => {
            let kind = if matches!(cli.command, Command::Solve) {
                ExperimentKind::Solve
            } else {
                ExperimentKind::Lipschitz
            };
            match from_file {
                Some(c) if c.kind == kind => c,
                Some(c) => {
                    return Err(LabError::Config(vec![format!(
                        "`{}` needs kind = {}, the configuration has kind = {}",
                        kind.name(),
                        kind.name(),
                        c.kind.name()
                    )]))
                }
                None => ExperimentConfig::solver(kind, 0),
            }
        }
        Command::Report => unreachable!("report does not run experiments"),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.resolution {
        config.resolution = vec![n];
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn emit(record: &RunRecord, format: Format, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            for path in emit_report(record, format, dir)? {
                eprintln!("wrote {}", path.display());
            }
            if format == Format::Table {
                print!("{}", render_table(record)?);
            }
        }
        None => match format {
            Format::Table => print!("{}", render_table(record)?),
            Format::Csv => print!("{}", record.to_csv()?),
            Format::Svg => {
                return Err(LabError::Precondition("--format svg needs --out <dir>".into()));
            }
        },
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<i32> {
    let format: Format = cli.format.parse()?;
    let record = match cli.command {
        Command::Report => {
            let dir = cli
                .out
                .as_deref()
                .ok_or_else(|| LabError::Precondition("`report` needs --out <dir> holding record.json".into()))?;
            let record = RunRecord::load(&dir.join("record.json"))?;
            emit(&record, format, Some(dir))?;
            record
        }
        _ => {
            let config = build_config(cli)?;
            let record = run_experiment(&config)?;
            emit(&record, format, config.out.as_deref())?;
            record
        }
    };
    for flag in record.flags() {
        eprintln!("flag: {flag}");
    }
    if let Some(f) = record.failure() {
        eprintln!("partial run: {}", f.message);
    }
    Ok(record.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
