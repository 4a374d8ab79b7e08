//! End-to-end experiment plumbing behind the CLI verbs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use dtr_core::agent::{read_snapshot, write_snapshot, SnapshotHeader};
use dtr_core::seed::rng_for;
use dtr_core::{
    fill_calendar, load_ohlcv_csv, month_partition, reconcile_online, run_grid, train, AgentConfig,
    ForecastSet, GridReport, GridRow, MetricReport, MonthRange, MonthlyEpisode, TimeSeries,
    ValueTable, YearMonth,
};
use log::{info, warn};
use serde::Serialize;

use crate::config::{ForecastSource, RunConfig};
use crate::error::{classify, CliError, CliResult};
use crate::external::ExternalForecast;

pub const METRICS_FILE: &str = "metrics.csv";
pub const GRID_FILE: &str = "grid.csv";
pub const QTABLE_FILE: &str = "qtable.txt";
pub const SUMMARY_FILE: &str = "summary.json";

/// Data split and forecasts ready for the agent.
pub struct Prepared {
    pub training: Vec<MonthlyEpisode>,
    pub skipped: Vec<YearMonth>,
    pub test: MonthlyEpisode,
    pub test_dates: Vec<NaiveDate>,
    /// Agent settings with the tolerance resolved against the test month.
    pub agent: AgentConfig,
}

pub fn load_series(cfg: &RunConfig) -> CliResult<TimeSeries> {
    if !cfg.data_path.exists() {
        return Err(CliError::Data(format!(
            "data file {} does not exist",
            cfg.data_path.display()
        )));
    }
    let raw = load_ohlcv_csv(&cfg.data_path, &cfg.date_column, &cfg.value_column)
        .map_err(|e| CliError::Data(format!("{}: {}", cfg.data_path.display(), classify(e))))?;
    fill_calendar(&raw).map_err(classify)
}

fn builtin_forecast(
    series: &TimeSeries,
    month: YearMonth,
    f: &dtr_core::Forecaster,
) -> Option<Vec<f64>> {
    let history = series.before(month.first_day());
    if history.len() < f.min_history() {
        return None;
    }
    f.forecast(history, month.days()).ok()
}

pub fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let series = load_series(cfg)?;
    let train_months = month_partition(&series, cfg.train_range).map_err(classify)?;
    let test_month = month_partition(&series, MonthRange::single(cfg.test_month))
        .map_err(classify)?
        .remove(0);

    let external = match &cfg.forecast {
        ForecastSource::External { path, .. } => Some(ExternalForecast::load(path)?),
        ForecastSource::Builtin { .. } => None,
    };
    let fallback = match &cfg.forecast {
        ForecastSource::Builtin { forecaster }
        | ForecastSource::External {
            fallback: forecaster,
            ..
        } => *forecaster,
    };

    let mut training = Vec::new();
    let mut skipped = Vec::new();
    for m in train_months {
        let daily = external
            .as_ref()
            .and_then(|x| x.month(m.month))
            .or_else(|| builtin_forecast(&series, m.month, &fallback));
        match daily {
            Some(daily) => {
                let fs = ForecastSet::from_daily(m.month, daily).map_err(classify)?;
                training.push(MonthlyEpisode::from_forecast_set(&fs, m.values).map_err(classify)?);
            }
            None => {
                warn!(
                    "{}: not enough history for a base forecast, month left out of training",
                    m.month
                );
                skipped.push(m.month);
            }
        }
    }

    let test_forecast = match &external {
        Some(x) => {
            let daily = x.month(cfg.test_month).ok_or_else(|| {
                CliError::Data(format!(
                    "external forecast does not cover every day of {}",
                    cfg.test_month
                ))
            })?;
            let fs = ForecastSet::from_daily(cfg.test_month, daily).map_err(classify)?;
            match x.monthly_total() {
                Some(t) => fs.with_monthly_total(t).map_err(classify)?,
                None => fs,
            }
        }
        None => {
            let daily = builtin_forecast(&series, cfg.test_month, &fallback).ok_or_else(|| {
                CliError::Data(format!(
                    "not enough history before {} for a base forecast",
                    cfg.test_month
                ))
            })?;
            ForecastSet::from_daily(cfg.test_month, daily).map_err(classify)?
        }
    };

    let tolerance = cfg
        .tolerance
        .resolve(test_forecast.daily())
        .map_err(classify)?;
    let agent = AgentConfig {
        tolerance,
        ..cfg.agent.clone()
    };
    agent.validate().map_err(classify)?;

    Ok(Prepared {
        training,
        skipped,
        test: MonthlyEpisode::from_forecast_set(&test_forecast, test_month.values)
            .map_err(classify)?,
        test_dates: cfg.test_month.dates().collect(),
        agent,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinalMetrics {
    pub date: NaiveDate,
    pub rmf: f64,
    pub mape_rec_pct: f64,
    pub pct_f: f64,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub verb: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub resolved_agent: AgentConfig,
    pub adjustment_unit: f64,
    pub training_months: Vec<YearMonth>,
    pub skipped_months: Vec<YearMonth>,
    pub test_month: YearMonth,
    pub base_total: f64,
    pub actual_total: f64,
    pub base_mape_pct: f64,
    #[serde(rename = "final")]
    pub final_metrics: Option<FinalMetrics>,
    pub grid: Option<Vec<GridRow>>,
    #[serde(skip)]
    pub outputs: Vec<PathBuf>,
}

impl RunSummary {
    fn new(verb: &'static str, cfg: &RunConfig, p: &Prepared) -> Self {
        let actual_total: f64 = p.test.actuals().iter().sum();
        let base_total = p.test.monthly_total();
        Self {
            verb,
            seed: p.agent.seed,
            config_hash: p.agent.config_hash(),
            config: cfg.clone(),
            resolved_agent: p.agent.clone(),
            adjustment_unit: p.agent.unit(p.test.len()),
            training_months: p.training.iter().filter_map(|e| e.month()).collect(),
            skipped_months: p.skipped.clone(),
            test_month: cfg.test_month,
            base_total,
            actual_total,
            base_mape_pct: dtr_core::mape(&[actual_total], &[base_total]).unwrap_or(f64::NAN),
            final_metrics: None,
            grid: None,
            outputs: Vec::new(),
        }
    }

    /// Human-readable lines for stdout.
    pub fn describe(&self) -> String {
        let mut out = format!(
            "test month {}: base total {:.4}, actual total {:.4}, base MAPE {:.2}%\n",
            self.test_month, self.base_total, self.actual_total, self.base_mape_pct
        );
        if let Some(f) = &self.final_metrics {
            out += &format!(
                "final day {}: RMF {:.4}, MAPE_rec {:.2}%, %_f {:.2}%\n",
                f.date, f.rmf, f.mape_rec_pct, f.pct_f
            );
        }
        if let Some(rows) = &self.grid {
            for r in rows {
                match (r.mape_rec, r.pct_f) {
                    (Some(m), Some(p)) => {
                        out += &format!(
                            "grid {} / {}: MAPE_rec {m:.2}%, %_f {p:.2}%\n",
                            r.tolerance, r.exploration
                        )
                    }
                    _ => {
                        out += &format!(
                            "grid {} / {}: failed ({})\n",
                            r.tolerance,
                            r.exploration,
                            r.error.as_deref().unwrap_or("unknown")
                        )
                    }
                }
            }
        }
        for path in &self.outputs {
            out += &format!("wrote {}\n", path.display());
        }
        out
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn write_summary(dir: &Path, summary: &mut RunSummary) -> CliResult<()> {
    let (path, mut w) = create(dir, SUMMARY_FILE)?;
    summary.outputs.push(path.clone());
    serde_json::to_writer_pretty(&mut w, summary).map_err(|e| io_err(&path, e))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&path, e))
}

fn stream_test(
    table: ValueTable,
    p: &Prepared,
    summary: &mut RunSummary,
    dir: &Path,
) -> CliResult<MetricReport> {
    let actuals = p
        .test
        .actuals()
        .iter()
        .copied()
        .enumerate()
        .map(|(i, y)| (i + 1, y));
    let (_, trace) = reconcile_online(
        table,
        p.test.forecasts(),
        p.test.monthly_total(),
        actuals,
        &p.agent,
        rng_for(p.agent.seed, "reconcile"),
    )
    .map_err(classify)?;
    let report = MetricReport::new(
        &p.test_dates,
        p.test.forecasts(),
        p.test.monthly_total(),
        &trace,
    )
    .map_err(classify)?;
    let (path, mut w) = create(dir, METRICS_FILE)?;
    report.write_csv(&mut w).map_err(|e| io_err(&path, e))?;
    summary.outputs.push(path);
    summary.final_metrics = report.final_row().map(|r| FinalMetrics {
        date: r.date,
        rmf: r.rmf,
        mape_rec_pct: r.mape_rec,
        pct_f: r.pct_f,
    });
    Ok(report)
}

fn grid(cfg: &RunConfig, p: &Prepared, summary: &mut RunSummary) -> CliResult<GridReport> {
    let (tolerances, explorations) = cfg.grid_or_default();
    info!(
        "running {} grid cells",
        tolerances.len() * explorations.len()
    );
    let report =
        run_grid(&p.training, &p.test, &tolerances, &explorations, &p.agent).map_err(classify)?;
    let (path, mut w) = create(&cfg.output_dir, GRID_FILE)?;
    report.write_csv(&mut w).map_err(|e| io_err(&path, e))?;
    summary.outputs.push(path);
    summary.grid = Some(report.rows.clone());
    Ok(report)
}

/// `run`: train, snapshot, stream the test month, and sweep the grid when
/// one is configured.
pub fn run_experiment(cfg: &RunConfig) -> CliResult<RunSummary> {
    let p = prepare(cfg)?;
    let mut summary = RunSummary::new("run", cfg, &p);
    let table = train(&p.training, &p.agent).map_err(classify)?;

    let (path, mut w) = create(&cfg.output_dir, QTABLE_FILE)?;
    let header = SnapshotHeader {
        config_hash: p.agent.config_hash(),
        seed: p.agent.seed,
    };
    write_snapshot(&table, &header, &mut w).map_err(|e| io_err(&path, e))?;
    summary.outputs.push(path);

    stream_test(table, &p, &mut summary, &cfg.output_dir)?;
    if cfg.has_grid() {
        grid(cfg, &p, &mut summary)?;
    }
    write_summary(&cfg.output_dir, &mut summary)?;
    Ok(summary)
}

/// `grid`: the tolerance × exploration sweep only.
pub fn run_grid_only(cfg: &RunConfig) -> CliResult<RunSummary> {
    let p = prepare(cfg)?;
    let mut summary = RunSummary::new("grid", cfg, &p);
    grid(cfg, &p, &mut summary)?;
    write_summary(&cfg.output_dir, &mut summary)?;
    Ok(summary)
}

/// `reconcile`: stream the test month through a saved table.
pub fn reconcile_from_snapshot(cfg: &RunConfig, snapshot: &Path) -> CliResult<RunSummary> {
    let p = prepare(cfg)?;
    let file = File::open(snapshot)
        .map_err(|e| CliError::Data(format!("cannot read snapshot {}: {e}", snapshot.display())))?;
    let (table, header) = read_snapshot(BufReader::new(file)).map_err(classify)?;
    if header.config_hash != p.agent.config_hash() {
        warn!(
            "snapshot {} was trained with a different configuration",
            snapshot.display()
        );
    }
    let mut summary = RunSummary::new("reconcile", cfg, &p);
    stream_test(table, &p, &mut summary, &cfg.output_dir)?;
    write_summary(&cfg.output_dir, &mut summary)?;
    Ok(summary)
}

/// `validate-data`: ingestion and partition checks only.
pub fn validate_data(cfg: &RunConfig) -> CliResult<String> {
    if !cfg.data_path.exists() {
        return Err(CliError::Data(format!(
            "data file {} does not exist",
            cfg.data_path.display()
        )));
    }
    let raw = load_ohlcv_csv(&cfg.data_path, &cfg.date_column, &cfg.value_column)
        .map_err(|e| CliError::Data(format!("{}: {}", cfg.data_path.display(), classify(e))))?;
    let filled = fill_calendar(&raw).map_err(classify)?;
    let train = month_partition(&filled, cfg.train_range).map_err(classify)?;
    month_partition(&filled, MonthRange::single(cfg.test_month)).map_err(classify)?;
    Ok(format!(
        "{}: {} observations from {} to {}, {} days interpolated\ntraining months {} ({}), test month {} complete\n",
        cfg.data_path.display(),
        raw.len(),
        raw.first_date().expect("nonempty"),
        raw.last_date().expect("nonempty"),
        filled.len() - raw.len(),
        cfg.train_range,
        train.len(),
        cfg.test_month,
    ))
}
