//! Scenario configuration, the two case-study runners, the airtime tables and
//! CSV output.

mod case1;
mod case2;
mod config;
mod tables;

pub use case1::{latency_cdf, run_case1, simulate_case1, summarize, Case1Run, Case1Summary, PublishRecord};
pub use case2::{averaging_env, mean_by_period, run_case2, simulate_case2, Case2Row};
pub use config::{Case1Params, Case2Params, ConfigError, Scenario, ScenarioConfig};
pub use tables::{run_rates, run_toa, RateRow, ToaRow};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::consensus::ConsensusError;
use crate::dlt::{DltError, DltName};
use crate::kernel::KernelError;
use crate::lorawan::LoraError;
use crate::sync::SyncError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dlt(#[from] DltError),
    #[error(transparent)]
    Lora(#[from] LoraError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("writing {path}: {reason}")]
    Output { path: String, reason: String },
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Output {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), ExperimentError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(header).map_err(|e| output_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

pub fn case1_file_name(dlt: DltName) -> String {
    format!("case1_{}.csv", dlt.key())
}

/// One file per DLT, rows in seed then queue order.
pub fn write_case1(dir: &Path, runs: &[Case1Run]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut dlts: Vec<DltName> = Vec::new();
    for r in runs {
        if !dlts.contains(&r.dlt) {
            dlts.push(r.dlt);
        }
    }
    let mut files = Vec::new();
    for dlt in dlts {
        let path = dir.join(case1_file_name(dlt));
        let rows = runs
            .iter()
            .filter(|r| r.dlt == dlt)
            .flat_map(|r| &r.records)
            .map(|p| {
                vec![
                    p.seed.to_string(),
                    p.device_id.to_string(),
                    p.sf.value().to_string(),
                    p.queued_at_s.to_string(),
                    u8::from(p.delivered).to_string(),
                    p.latency_s.map_or_else(String::new, |l| l.to_string()),
                    p.frames_sent.to_string(),
                ]
            });
        write_csv(
            &path,
            &["seed", "device_id", "sf", "queued_at_s", "delivered", "latency_s", "frames_sent"],
            rows,
        )?;
        files.push(path);
    }
    Ok(files)
}

pub fn write_case2(dir: &Path, rows: &[Case2Row]) -> Result<PathBuf, ExperimentError> {
    let path = dir.join("case2.csv");
    write_csv(
        &path,
        &["seed", "method", "period", "time_s", "convergence_error", "ul_bytes", "dl_bytes"],
        rows.iter().map(|r| {
            vec![
                r.seed.to_string(),
                r.method.to_string(),
                r.period.to_string(),
                r.time_s.to_string(),
                r.convergence_error.to_string(),
                r.ul_bytes.to_string(),
                r.dl_bytes.to_string(),
            ]
        }),
    )?;
    Ok(path)
}

pub fn write_toa(dir: &Path, rows: &[ToaRow]) -> Result<PathBuf, ExperimentError> {
    let path = dir.join("toa.csv");
    write_csv(
        &path,
        &["dlt", "item", "bytes", "sf", "fragments", "airtime_s"],
        rows.iter().map(|r| {
            vec![
                r.dlt.key().to_string(),
                r.item.to_string(),
                r.bytes.to_string(),
                r.sf.value().to_string(),
                r.fragments.to_string(),
                r.airtime_s.to_string(),
            ]
        }),
    )?;
    Ok(path)
}

pub fn write_rates(dir: &Path, rows: &[RateRow]) -> Result<PathBuf, ExperimentError> {
    let path = dir.join("rates.csv");
    write_csv(
        &path,
        &[
            "dlt",
            "header_bytes",
            "fragments",
            "airtime_s",
            "rate_full_per_s",
            "duty_cycle",
            "rate_duty_per_s",
        ],
        rows.iter().map(|r| {
            vec![
                r.dlt.key().to_string(),
                r.header_bytes.to_string(),
                r.fragments.to_string(),
                r.airtime_s.to_string(),
                r.rate_full_per_s.to_string(),
                r.duty_cycle.to_string(),
                r.rate_duty_per_s.to_string(),
            ]
        }),
    )?;
    Ok(path)
}

/// What a scenario run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Human-readable table for the terminal.
    pub table: String,
}

fn fmt_secs(v: Option<f64>) -> String {
    v.map_or_else(|| "inf".to_string(), |s| format!("{s:.2}"))
}

/// Runs `cfg.scenario` and writes its CSV files into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, ExperimentError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| output_error(out_dir, e))?;
    let mut table = String::new();
    let files = match cfg.scenario {
        Scenario::Case1 => {
            let runs = run_case1(cfg)?;
            let _ = writeln!(
                table,
                "{:<10} {:>9} {:>10} {:>11} {:>11} {:>11}",
                "dlt", "publishes", "delivered", "min_s", "median_s", "p90_s"
            );
            for &dlt in &cfg.dlts {
                let s = summarize(dlt, &runs);
                let _ = writeln!(
                    table,
                    "{:<10} {:>9} {:>9.2}% {:>11} {:>11} {:>11}",
                    dlt.key(),
                    s.publishes,
                    100.0 * s.delivered_fraction(),
                    fmt_secs(s.min_latency_s),
                    fmt_secs(s.median_latency_s),
                    fmt_secs(s.p90_latency_s),
                );
            }
            write_case1(out_dir, &runs)?
        }
        Scenario::Case2 => {
            let rows = run_case2(cfg)?;
            let _ = writeln!(
                table,
                "{:<6} {:>12} {:>12} {:>12}",
                "method", "final_error", "ul_B/period", "dl_B/period"
            );
            for &m in &cfg.case2.methods {
                let err = mean_by_period(&rows, m, |r| r.convergence_error);
                let ul = mean_by_period(&rows, m, |r| r.ul_bytes);
                let dl = mean_by_period(&rows, m, |r| r.dl_bytes);
                let avg = |v: &[(u32, f64)]| v.iter().map(|x| x.1).sum::<f64>() / v.len().max(1) as f64;
                let _ = writeln!(
                    table,
                    "{:<6} {:>12.6} {:>12.2} {:>12.2}",
                    m.key(),
                    err.last().map_or(f64::NAN, |x| x.1),
                    avg(&ul),
                    avg(&dl),
                );
            }
            vec![write_case2(out_dir, &rows)?]
        }
        Scenario::Toa => {
            let rows = run_toa(cfg)?;
            let _ = writeln!(
                table,
                "{:<10} {:<12} {:>6} {:>5} {:>9} {:>10}",
                "dlt", "item", "bytes", "sf", "fragments", "airtime_s"
            );
            for r in &rows {
                let _ = writeln!(
                    table,
                    "{:<10} {:<12} {:>6} {:>5} {:>9} {:>10.4}",
                    r.dlt.key(),
                    r.item,
                    r.bytes,
                    r.sf,
                    r.fragments,
                    r.airtime_s
                );
            }
            vec![write_toa(out_dir, &rows)?]
        }
        Scenario::Rates => {
            let rows = run_rates(cfg)?;
            let _ = writeln!(
                table,
                "{:<10} {:>6} {:>9} {:>10} {:>12} {:>6} {:>12}",
                "dlt", "header", "fragments", "airtime_s", "rate_100%", "duty", "rate_duty"
            );
            for r in &rows {
                let _ = writeln!(
                    table,
                    "{:<10} {:>6} {:>9} {:>10.4} {:>12.6} {:>6} {:>12.8}",
                    r.dlt.key(),
                    r.header_bytes,
                    r.fragments,
                    r.airtime_s,
                    r.rate_full_per_s,
                    r.duty_cycle,
                    r.rate_duty_per_s
                );
            }
            vec![write_rates(out_dir, &rows)?]
        }
    };
    Ok(RunReport { files, table })
}
