//! Parallel sweeps, summaries and the CSV/JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::Scheme;
use crate::harness::config::SystemConfig;
use crate::harness::trial::{Experiment, ExperimentRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every scheme over the SNR grid.
    SweepSnr,
    /// Every scheme over the user-count list.
    SweepUsers,
    /// NOMA only; per-iteration sum-rate curve.
    Convergence,
    /// NOMA only; per-user rates with the minimum-rate constraint.
    Fairness,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SweepSnr => "sweep-snr",
            Mode::SweepUsers => "sweep-users",
            Mode::Convergence => "convergence",
            Mode::Fairness => "fairness",
        }
    }

    fn noma_only(self) -> bool {
        matches!(self, Mode::Convergence | Mode::Fairness)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep-snr" => Ok(Mode::SweepSnr),
            "sweep-users" => Ok(Mode::SweepUsers),
            "convergence" => Ok(Mode::Convergence),
            "fairness" => Ok(Mode::Fairness),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// One CSV line of the record table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub trial: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub scheme: String,
    pub variant: String,
    pub k: usize,
    pub n_rf: usize,
    pub sum_rate_bpshz: Option<f64>,
    pub energy_eff_bpshzw: Option<f64>,
    pub dropped: bool,
    pub drop_reason: String,
}

impl From<&ExperimentRecord> for CsvRecord {
    fn from(r: &ExperimentRecord) -> Self {
        let kept = !r.is_dropped();
        Self {
            trial: r.trial,
            seed: r.seed,
            snr_db: r.snr_db,
            scheme: r.scheme.to_string(),
            variant: r.variant.to_string(),
            k: r.users,
            n_rf: r.n_rf,
            sum_rate_bpshz: kept.then_some(r.sum_rate),
            energy_eff_bpshzw: kept.then_some(r.energy_efficiency),
            dropped: !kept,
            drop_reason: r.dropped.clone().unwrap_or_default(),
        }
    }
}

/// Statistics of one (user count, SNR, scheme) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub k: usize,
    pub snr_db: f64,
    pub scheme: String,
    pub variant: String,
    pub mean_se: f64,
    pub stderr_se: f64,
    pub mean_ee: f64,
    pub stderr_ee: f64,
    /// Trials in the cell, dropped ones included.
    pub trials: usize,
    pub dropped: usize,
}

/// Mean and standard error (sample deviation over `sqrt(n)`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Groups rows by `(k, snr_db, scheme)` in order of first appearance.
pub fn summarize(rows: &[CsvRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, f64, String)> = Vec::new();
    for r in rows {
        let key = (r.k, r.snr_db, r.scheme.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(k, snr_db, scheme)| {
            let cell: Vec<&CsvRecord> = rows
                .iter()
                .filter(|r| r.k == k && r.snr_db == snr_db && r.scheme == scheme)
                .collect();
            let se: Vec<f64> = cell.iter().filter_map(|r| r.sum_rate_bpshz).collect();
            let ee: Vec<f64> = cell.iter().filter_map(|r| r.energy_eff_bpshzw).collect();
            let (mean_se, stderr_se) = mean_stderr(&se);
            let (mean_ee, stderr_ee) = mean_stderr(&ee);
            SummaryRow {
                k,
                snr_db,
                variant: cell[0].variant.clone(),
                scheme,
                mean_se,
                stderr_se,
                mean_ee,
                stderr_ee,
                trials: cell.len(),
                dropped: cell.iter().filter(|r| r.dropped).count(),
            }
        })
        .collect()
}

/// Mean sum rate after each iteration for one (user count, SNR) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub snr_db: f64,
    pub iteration: usize,
    pub mean_sum_rate_bpshz: f64,
    pub stderr_bpshz: f64,
    pub trials: usize,
}

/// One user's rate in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRateRow {
    pub trial: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub k: usize,
    pub user: usize,
    pub rate_bpshz: f64,
    pub min_rate_bpshz: f64,
    pub feasible: bool,
}

/// Trace padded with its last value up to `length` (early stopping leaves
/// the sum rate unchanged).
pub fn padded_trace(trace: &[f64], length: usize) -> Vec<f64> {
    let mut out: Vec<f64> = trace.iter().copied().take(length).collect();
    if let Some(&last) = trace.last() {
        out.resize(length, last);
    }
    out
}

pub fn convergence_rows(records: &[ExperimentRecord], length: usize) -> Vec<ConvergenceRow> {
    let mut points: Vec<(usize, f64)> = Vec::new();
    for r in records {
        if !points.contains(&(r.users, r.snr_db)) {
            points.push((r.users, r.snr_db));
        }
    }
    let mut rows = Vec::new();
    for (k, snr_db) in points {
        let traces: Vec<Vec<f64>> = records
            .iter()
            .filter(|r| r.users == k && r.snr_db == snr_db && !r.is_dropped())
            .filter_map(|r| r.trace.as_deref())
            .filter(|t| !t.is_empty())
            .map(|t| padded_trace(t, length))
            .collect();
        for i in 0..length {
            let column: Vec<f64> = traces.iter().map(|t| t[i]).collect();
            let (mean, stderr) = mean_stderr(&column);
            rows.push(ConvergenceRow {
                k,
                snr_db,
                iteration: i + 1,
                mean_sum_rate_bpshz: mean,
                stderr_bpshz: stderr,
                trials: column.len(),
            });
        }
    }
    rows
}

pub fn user_rate_rows(records: &[ExperimentRecord], min_rate: f64) -> Vec<UserRateRow> {
    records
        .iter()
        .filter(|r| !r.is_dropped())
        .flat_map(|r| {
            r.user_rates.iter().enumerate().map(move |(user, &rate)| UserRateRow {
                trial: r.trial,
                seed: r.seed,
                snr_db: r.snr_db,
                k: r.users,
                user,
                rate_bpshz: rate,
                min_rate_bpshz: min_rate,
                feasible: r.feasible.unwrap_or(true),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub mode: Mode,
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<SummaryRow>,
}

impl SweepResult {
    pub fn csv_records(&self) -> Vec<CsvRecord> {
        self.records.iter().map(CsvRecord::from).collect()
    }

    pub fn cell(&self, k: usize, snr_db: f64, scheme: Scheme) -> Option<&SummaryRow> {
        let name = scheme.as_str();
        self.summary
            .iter()
            .find(|s| s.k == k && s.snr_db == snr_db && s.scheme == name)
    }
}

/// Config as run in `mode`: convergence and fairness only need NOMA.
pub fn effective_config(config: &SystemConfig, mode: Mode) -> SystemConfig {
    let mut cfg = config.clone();
    if mode.noma_only() {
        cfg.schemes = vec![Scheme::Noma];
    }
    cfg
}

/// Runs every trial of every user count in parallel. Records come out
/// ordered by (user count, trial, SNR, scheme) regardless of scheduling.
pub fn sweep(config: &SystemConfig, mode: Mode) -> Result<SweepResult> {
    let cfg = effective_config(config, mode);
    let experiment = Experiment::new(cfg.clone())?;
    let mut records = Vec::new();
    for &k in &cfg.users {
        let per_trial: Vec<Vec<ExperimentRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| experiment.run_trial(t, k))
            .collect::<Result<_>>()?;
        records.extend(per_trial.into_iter().flatten());
    }
    let rows: Vec<CsvRecord> = records.iter().map(CsvRecord::from).collect();
    Ok(SweepResult {
        mode,
        summary: summarize(&rows),
        records,
    })
}

/// Output files of one run: the record CSV at `out`, the summary next to it
/// with a `.json` extension, and a mode-specific table (`*_trace.csv` or
/// `*_users.csv`) for convergence and fairness runs.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub extra: Option<PathBuf>,
}

impl OutputPaths {
    pub fn new(out: &Path, mode: Mode) -> Self {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "results".into());
        let sibling = |suffix: &str| out.with_file_name(format!("{stem}{suffix}"));
        Self {
            records: out.to_path_buf(),
            summary: out.with_extension("json"),
            extra: match mode {
                Mode::Convergence => Some(sibling("_trace.csv")),
                Mode::Fairness => Some(sibling("_users.csv")),
                _ => None,
            },
        }
    }

    fn all(&self) -> Vec<&Path> {
        let mut v = vec![self.records.as_path(), self.summary.as_path()];
        v.extend(self.extra.as_deref());
        v
    }
}

pub fn write_csv<T: Serialize>(file: File, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Opens every output file, then runs the sweep and writes the results, so
/// an unwritable path fails before any trial runs.
pub fn run_to_files(config: &SystemConfig, mode: Mode, out: &Path) -> Result<(SweepResult, OutputPaths)> {
    let paths = OutputPaths::new(out, mode);
    let mut files = Vec::new();
    for path in paths.all() {
        files.push(File::create(path)?);
    }
    let mut files = files.into_iter();

    let result = sweep(config, mode)?;
    write_csv(files.next().unwrap(), &result.csv_records())?;
    let mut json = BufWriter::new(files.next().unwrap());
    serde_json::to_writer_pretty(&mut json, &result.summary)?;
    json.write_all(b"\n")?;
    json.flush()?;

    if let Some(file) = files.next() {
        match mode {
            Mode::Convergence => write_csv(file, &convergence_rows(&result.records, config.max_iterations))?,
            Mode::Fairness => write_csv(file, &user_rate_rows(&result.records, config.min_rate))?,
            _ => {}
        }
    }
    Ok((result, paths))
}
