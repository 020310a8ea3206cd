use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use rfcs::harness::{
    self, emit_report, run_diagnostics, run_phase_transition, trial_seed, write_report, Cell, ExperimentConfig,
    FilterDump, Instance, ReportFormat,
};
use rfcs::{sample_filter, CsError};

#[derive(Parser)]
#[command(name = "cs", version, about = "Random-filter compressive sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides root_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; stdout when absent and the config names none.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, default_value = "json")]
    format: ReportFormat,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample a filter and dump its taps.
    Filter,
    /// Sample one instance and print its measurements.
    Measure,
    /// Sample one instance and recover it by l1 minimization.
    Recover,
    /// Evaluate the exact-recovery certificate of one instance.
    Certify,
    /// Coherence, row-norm and conditioning batches.
    Diagnose,
    /// Phase-transition sweep over the (S, m) grid.
    Phase,
}

#[derive(Serialize)]
struct Measurement<'a> {
    n: usize,
    seed: u64,
    rows: &'a [usize],
    measurements: &'a [f64],
    support: &'a [usize],
    coefficients: &'a [f64],
}

#[derive(Serialize)]
struct Recovery {
    seed: u64,
    recovered: bool,
    coefficient_error: f64,
    truth: Vec<f64>,
    result: rfcs::RecoveryResult,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CsError::Io(_) | CsError::Csv(_) => 2,
                _ => 1,
            })
        }
    }
}

fn load_config(cli: &Cli) -> rfcs::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.root_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> rfcs::Result<()> {
    let cfg = load_config(cli)?;
    let cell = Cell {
        sparsity: cfg.sparsity_grid[0],
        m: cfg.m_grid[0],
    };
    let seed = trial_seed(cfg.root_seed, 0);
    match cli.command {
        Command::Phase => {
            let report = run_phase_transition(&cfg)?;
            match &cfg.output {
                Some(path) => emit_report(&report, cli.format, path),
                None => write_report(&report, cli.format, std::io::stdout().lock()),
            }
        }
        Command::Filter => {
            let f = sample_filter(cfg.n, cfg.distribution(), cfg.root_seed)?;
            emit_json(&cfg, cli.format, &FilterDump::from(&f))
        }
        Command::Measure => {
            let inst = Instance::sample(&cfg, cell, seed)?;
            emit_json(
                &cfg,
                cli.format,
                &Measurement {
                    n: cfg.n,
                    seed,
                    rows: inst.op.mask().kept(),
                    measurements: &inst.measurements,
                    support: &inst.signal.support,
                    coefficients: &inst.signal.coefficients,
                },
            )
        }
        Command::Recover => {
            let inst = Instance::sample(&cfg, cell, seed)?;
            let result = inst.solve(&cfg)?;
            let coefficient_error = inst.coefficient_error(&result.solution);
            let recovered = result.converged
                && result.support_exact == Some(true)
                && coefficient_error <= harness::RECOVERY_TOLERANCE;
            emit_json(
                &cfg,
                cli.format,
                &Recovery {
                    seed,
                    recovered,
                    coefficient_error,
                    truth: inst.signal.coefficients.clone(),
                    result,
                },
            )
        }
        Command::Certify => {
            let inst = Instance::sample(&cfg, cell, seed)?;
            emit_json(&cfg, cli.format, &inst.certificate(cfg.alpha_threshold)?)
        }
        Command::Diagnose => emit_json(&cfg, cli.format, &run_diagnostics(&cfg)?),
    }
}

fn emit_json<T: Serialize>(cfg: &ExperimentConfig, format: ReportFormat, value: &T) -> rfcs::Result<()> {
    if format != ReportFormat::Json {
        return Err(CsError::Config("this subcommand only writes json".into()));
    }
    let write = |w: &mut dyn Write| -> rfcs::Result<()> {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    };
    match &cfg.output {
        Some(path) => write(&mut std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => write(&mut std::io::stdout().lock()),
    }
}
