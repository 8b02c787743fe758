//! Parameter sweeps: run a scenario across a list of axis values with a
//! fixed number of repetitions per point, and emit plot-ready CSV or JSON.
//!
//! Determinism contract: a (config, sweep) pair produces byte-identical
//! output files on every run. Trials at the same (point, repetition) share
//! a random stream across schemes, so scheme comparisons are paired.

use serde::{Serialize, Serializer};

use crate::config::{ScenarioConfig, Scheme};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::link::{run_trial_with, LinkReport};
use crate::tensor::RandomSource;

/// Which scenario field a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    SnrDb,
    TargetNmse,
    Users,
    Frames,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::TargetNmse => "target_nmse",
            SweepAxis::Users => "K",
            SweepAxis::Frames => "Q",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "snr_db" => Ok(SweepAxis::SnrDb),
            "target_nmse" => Ok(SweepAxis::TargetNmse),
            "K" => Ok(SweepAxis::Users),
            "Q" => Ok(SweepAxis::Frames),
            other => Err(Error::Config(format!(
                "unknown sweep axis \"{other}\" (expected snr_db, target_nmse, K, or Q)"
            ))),
        }
    }
}

impl Serialize for SweepAxis {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

/// A sweep: the axis, the points to visit in order, and how many
/// repetitions to run per point.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub repetitions: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep values: must be nonempty".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config(
                "sweep repetitions: must be at least 1, got 0".into(),
            ));
        }
        for &v in &self.values {
            if !v.is_finite() {
                return Err(Error::Config(format!(
                    "sweep values: must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One (scheme, axis point, trial) outcome, one CSV row.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub trial: u64,
    pub sum_rate_bps_hz: f64,
    pub min_user_rate_bps_hz: f64,
    pub mean_empirical_mse: f64,
    pub mean_analytical_mse: f64,
    /// Wall-clock trial time; 0 unless timing was requested, since recorded
    /// times break byte-identical output.
    pub elapsed_ms: u64,
    pub seed: u64,
}

/// Execution options for a sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub execution: Execution,
    /// Record wall-clock trial durations in `elapsed_ms`. Off by default:
    /// timings differ run to run, which breaks output determinism.
    pub record_timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            execution: Execution::Parallel,
            record_timing: false,
        }
    }
}

/// A copy of the scenario with one axis pinned to `value`. Count-valued
/// axes (K, Q) require integral values.
pub fn apply_axis(cfg: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
    let mut out = cfg.clone();
    match axis {
        SweepAxis::SnrDb => out.snr_db = value,
        SweepAxis::TargetNmse => {
            out.target_nmse = Some(value);
            out.pilot_symbols = None;
        }
        SweepAxis::Users | SweepAxis::Frames => {
            if value.fract() != 0.0 || !(value >= 1.0) || value > u32::MAX as f64 {
                return Err(Error::Config(format!(
                    "{}: sweep values must be positive integers, got {value}",
                    axis.label()
                )));
            }
            match axis {
                SweepAxis::Users => out.users = value as usize,
                SweepAxis::Frames => out.frames = value as usize,
                _ => unreachable!(),
            }
        }
    }
    out.validate()?;
    Ok(out)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn row_from_report(report: &LinkReport, axis: SweepAxis, value: f64, elapsed_ms: u64) -> ResultRow {
    ResultRow {
        scheme: report.scheme,
        axis,
        axis_value: value,
        trial: report.stream_index,
        sum_rate_bps_hz: report.sum_rate,
        min_user_rate_bps_hz: report.min_user_rate,
        mean_empirical_mse: mean(&report.empirical_mse),
        mean_analytical_mse: mean(&report.analytical_mse),
        elapsed_ms,
        seed: report.seed,
    }
}

/// Runs `repetitions x |values| x |schemes|` trials and returns their rows
/// in deterministic order: axis values as listed, schemes lexicographically
/// within each value, then trial index. Trial r at point p draws from
/// stream `p * repetitions + r` regardless of scheme, so schemes face
/// identical channels, noise, and payloads.
pub fn run_sweep(cfg: &ScenarioConfig, sweep: &SweepSpec) -> Result<Vec<ResultRow>> {
    run_sweep_with(cfg, sweep, SweepOptions::default())
}

/// [`run_sweep`] with explicit execution options. Rows are bit-identical
/// across execution strategies; only `record_timing` changes output.
pub fn run_sweep_with(
    cfg: &ScenarioConfig,
    sweep: &SweepSpec,
    opts: SweepOptions,
) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    sweep.validate()?;
    let mut schemes = cfg.schemes.clone();
    schemes.sort();
    schemes.dedup();

    // Per-point configs up front so axis errors surface before any work.
    let point_cfgs: Vec<ScenarioConfig> = sweep
        .values
        .iter()
        .map(|&v| apply_axis(cfg, sweep.axis, v))
        .collect::<Result<_>>()?;

    let reps = sweep.repetitions;
    let jobs: Vec<(usize, Scheme, u64)> = (0..sweep.values.len())
        .flat_map(|p| {
            schemes
                .iter()
                .flat_map(move |&s| (0..reps).map(move |r| (p, s, r)))
        })
        .collect();

    let outcomes = map_indexed(opts.execution, jobs.len(), |i| {
        let (p, scheme, r) = jobs[i];
        let src = RandomSource::new(cfg.seed, p as u64 * reps + r);
        let started = std::time::Instant::now();
        let report = run_trial_with(&point_cfgs[p], scheme, src, Execution::Sequential)?;
        let elapsed_ms = if opts.record_timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        Ok(row_from_report(
            &report,
            sweep.axis,
            sweep.values[p],
            elapsed_ms,
        ))
    });
    outcomes.into_iter().collect()
}

/// Output encodings for result rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "unknown output format \"{other}\" (expected csv or json)"
            ))),
        }
    }
}

/// The SNR definition recorded in every result file.
pub const SNR_CONVENTION: &str = "snr_db = 10*log10(P_t / (N_c * sigma_n^2))";

pub const CSV_COLUMNS: &str = "scheme,axis,axis_value,trial,sum_rate_bps_hz,\
min_user_rate_bps_hz,mean_empirical_mse,mean_analytical_mse,elapsed_ms,seed";

/// Renders rows as CSV: one `#` metadata line carrying the SNR convention,
/// the column header, then one line per row. Floats print with 17
/// significant digits so parsing them back is exact.
pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {SNR_CONVENTION}\n"));
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
            r.scheme.label(),
            r.axis.label(),
            r.axis_value,
            r.trial,
            r.sum_rate_bps_hz,
            r.min_user_rate_bps_hz,
            r.mean_empirical_mse,
            r.mean_analytical_mse,
            r.elapsed_ms,
            r.seed,
        ));
    }
    out
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    meta: JsonMeta,
    rows: &'a [ResultRow],
}

#[derive(Serialize)]
struct JsonMeta {
    snr_convention: &'static str,
    row_count: usize,
}

/// Renders rows as a JSON document mirroring the CSV fields, with the SNR
/// convention in a `meta` object.
pub fn render_json(rows: &[ResultRow]) -> Result<String> {
    let doc = JsonDocument {
        meta: JsonMeta {
            snr_convention: SNR_CONVENTION,
            row_count: rows.len(),
        },
        rows,
    };
    serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Format(format!("result serialization failed: {e}")))
}

/// Writes rows to a file in the requested format.
pub fn emit_results(rows: &[ResultRow], path: &std::path::Path, format: OutputFormat) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Contract("no result rows to emit".into()));
    }
    let content = match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows)?,
    };
    std::fs::write(path, content)?;
    Ok(())
}
