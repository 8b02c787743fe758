//! Command-line front end: single-point simulation, axis sweeps, binary
//! channel-dataset export, and the built-in acceptance checks. Flags
//! override config-file fields (flag > file > default); exit codes follow
//! the error category (config 2, numeric/contract 3, io/format 4), and a
//! failed acceptance check exits 3.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use airbeam::config::{parse_config, ScenarioConfig, Scheme};
use airbeam::dataset::export_channels;
use airbeam::selftest;
use airbeam::sweep::{
    emit_results, render_csv, render_json, run_sweep_with, OutputFormat, ResultRow, SweepAxis,
    SweepOptions, SweepSpec,
};
use airbeam::{Error, Execution, Result};

#[derive(Parser)]
#[command(
    name = "airbeam",
    version,
    about = "Downlink multi-user MIMO-OFDM beamforming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured scenario at its single operating point.
    Simulate(SimulateArgs),
    /// Sweep one axis over a list of values.
    Sweep(SweepArgs),
    /// Export random channel realizations to a binary dataset file.
    GenChannels(GenChannelsArgs),
    /// Run the built-in acceptance checks.
    Selftest(SelftestArgs),
}

/// Scenario source and per-field overrides shared by the simulation
/// subcommands.
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario config file (TOML); omitted means the built-in reference
    /// scenario (4 users, 8x8 array, 64 subcarriers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the SNR in dB.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Override the injected channel-estimate NMSE (clears any pilot-length
    /// setting from the file).
    #[arg(long)]
    target_nmse: Option<f64>,
    /// Override the base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of trials per point.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the frames per trial (config key Q).
    #[arg(long, value_name = "FRAMES")]
    q: Option<usize>,
    /// Override the scheme list (comma-separated:
    /// rzf,wmmse_naive,wmmse_robust).
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Run trials sequentially instead of in the worker pool.
    #[arg(long)]
    sequential: bool,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(path)?,
            None => ScenarioConfig::baseline(),
        };
        if let Some(v) = self.snr_db {
            cfg.snr_db = v;
        }
        if let Some(v) = self.target_nmse {
            cfg.target_nmse = Some(v);
            cfg.pilot_symbols = None;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.q {
            cfg.frames = v;
        }
        if let Some(names) = &self.schemes {
            cfg.schemes = names
                .iter()
                .map(|s| Scheme::parse(s))
                .collect::<Result<Vec<_>>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Also write the result rows to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for --out (csv or json).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Axis to sweep: snr_db, target_nmse, K, or Q.
    #[arg(long)]
    axis: String,
    /// Axis values (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Repetitions per axis value.
    #[arg(long, default_value_t = 1)]
    reps: u64,
    /// Write rows to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (csv or json).
    #[arg(long, default_value = "csv")]
    format: String,
    /// Record wall-clock trial times in elapsed_ms (breaks byte-identical
    /// output across runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GenChannelsArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of channel realizations to export.
    #[arg(long)]
    count: u32,
    /// Destination file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run only the checks whose name contains this substring.
    #[arg(long)]
    filter: Option<String>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::GenChannels(args) => gen_channels(args),
        Command::Selftest(args) => run_selftest(args),
    }
}

/// A single-point run is a one-value sweep on the SNR axis: same trial
/// streams, same row schema, same determinism.
fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let cfg = args.scenario.resolve()?;
    let format = OutputFormat::parse(&args.format)?;
    let spec = SweepSpec {
        axis: SweepAxis::SnrDb,
        values: vec![cfg.snr_db],
        repetitions: cfg.trials,
    };
    let opts = SweepOptions {
        execution: args.scenario.execution(),
        record_timing: false,
    };
    let rows = run_sweep_with(&cfg, &spec, opts)?;
    print_summary(&rows);
    if let Some(path) = &args.out {
        emit_results(&rows, path, format)?;
        println!("wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Per-scheme means across trials.
fn print_summary(rows: &[ResultRow]) {
    let mut scheme_order: Vec<Scheme> = Vec::new();
    for row in rows {
        if !scheme_order.contains(&row.scheme) {
            scheme_order.push(row.scheme);
        }
    }
    for scheme in scheme_order {
        let group: Vec<&ResultRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
        let n = group.len() as f64;
        let sum_rate = group.iter().map(|r| r.sum_rate_bps_hz).sum::<f64>() / n;
        let min_rate = group.iter().map(|r| r.min_user_rate_bps_hz).sum::<f64>() / n;
        let mse = group.iter().map(|r| r.mean_empirical_mse).sum::<f64>() / n;
        println!(
            "{}: mean sum rate {:.4} bits/s/Hz, mean min-user rate {:.4}, \
             mean empirical MSE {:.3e} ({} trials)",
            scheme.label(),
            sum_rate,
            min_rate,
            mse,
            group.len()
        );
    }
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let cfg = args.scenario.resolve()?;
    let format = OutputFormat::parse(&args.format)?;
    let axis = SweepAxis::parse(&args.axis)?;
    let spec = SweepSpec {
        axis,
        values: args.values.clone(),
        repetitions: args.reps,
    };
    let opts = SweepOptions {
        execution: args.scenario.execution(),
        record_timing: args.timing,
    };
    let rows = run_sweep_with(&cfg, &spec, opts)?;
    match &args.out {
        Some(path) => {
            emit_results(&rows, path, format)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            let rendered = match format {
                OutputFormat::Csv => render_csv(&rows),
                OutputFormat::Json => render_json(&rows)?,
            };
            print!("{rendered}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn gen_channels(args: GenChannelsArgs) -> Result<ExitCode> {
    let cfg = args.scenario.resolve()?;
    export_channels(&cfg, args.count, &args.out)?;
    let bytes = std::fs::metadata(&args.out).map(|m| m.len()).unwrap_or(0);
    println!(
        "wrote {} channel samples (K={}, N_c={}, N_t={}) to {} ({bytes} bytes)",
        args.count,
        cfg.users,
        cfg.subcarriers,
        cfg.antennas(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_selftest(args: SelftestArgs) -> Result<ExitCode> {
    let results = selftest::run_all(args.filter.as_deref());
    if results.is_empty() {
        return Err(Error::Config(format!(
            "no check matches filter \"{}\"",
            args.filter.unwrap_or_default()
        )));
    }
    let mut failures = 0;
    for result in &results {
        println!("{}", result.line());
        if !result.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        eprintln!("{failures} of {} checks failed", results.len());
        return Ok(ExitCode::from(3));
    }
    println!("all {} checks passed", results.len());
    Ok(ExitCode::SUCCESS)
}
