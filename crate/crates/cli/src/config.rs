//! Run configuration: a flat TOML file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use dtr_core::{
    AdjustmentUnit, AgentConfig, Forecaster, MonthRange, RewardRule, Tolerance, UpdateScope,
    YearMonth,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_TOLERANCE: Tolerance = Tolerance::Percent(0.2);
pub const DEFAULT_GRID_TOLERANCES: [Tolerance; 3] = [
    Tolerance::Percent(0.1),
    Tolerance::Percent(0.2),
    Tolerance::Percent(0.3),
];
pub const DEFAULT_GRID_EXPLORATIONS: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    Naive,
    #[value(name = "seasonal_naive")]
    SeasonalNaive,
    Drift,
    External,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardChoice {
    Actual,
    #[value(name = "actual_plus_accuracy_gain")]
    ActualPlusAccuracyGain,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeChoice {
    #[value(name = "taken_action")]
    TakenAction,
    #[value(name = "all_actions")]
    AllActions,
}

/// `tolerance`, `spread_over_cycle` or a fixed positive number.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct UnitSpec(pub AdjustmentUnit);

impl FromStr for UnitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "tolerance" => Ok(UnitSpec(AdjustmentUnit::Tolerance)),
            "spread_over_cycle" => Ok(UnitSpec(AdjustmentUnit::SpreadOverCycle)),
            other => match other.parse::<f64>() {
                Ok(u) if u.is_finite() && u > 0.0 => Ok(UnitSpec(AdjustmentUnit::Fixed(u))),
                _ => Err(format!("adjustment unit must be tolerance, spread_over_cycle or a positive number, got {other:?}")),
            },
        }
    }
}

impl TryFrom<String> for UnitSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for UnitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            AdjustmentUnit::Tolerance => f.write_str("tolerance"),
            AdjustmentUnit::SpreadOverCycle => f.write_str("spread_over_cycle"),
            AdjustmentUnit::Fixed(u) => write!(f, "{u}"),
        }
    }
}

impl From<UnitSpec> for String {
    fn from(u: UnitSpec) -> Self {
        u.to_string()
    }
}

/// Every setting, all optional. Used for both the config file and the flags.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Daily OHLCV CSV.
    #[arg(long = "data")]
    pub data_path: Option<PathBuf>,
    #[arg(long)]
    pub date_column: Option<String>,
    #[arg(long)]
    pub value_column: Option<String>,
    /// Training months, e.g. 2019-01..2020-02.
    #[arg(long = "train")]
    pub train_range: Option<MonthRange>,
    /// Test month, e.g. 2020-03. Defaults to the month after training.
    #[arg(long = "test")]
    pub test_range: Option<MonthRange>,
    /// Absolute tolerance or a percentage of the test month's base total, e.g. 20%.
    #[arg(long)]
    pub tolerance: Option<Tolerance>,
    #[arg(long)]
    pub exploration: Option<f64>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub discount: Option<f64>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub online_updates: Option<bool>,
    #[arg(long)]
    pub adjustment_unit: Option<UnitSpec>,
    #[arg(long, value_enum)]
    pub reward_rule: Option<RewardChoice>,
    #[arg(long, value_enum)]
    pub update_scope: Option<ScopeChoice>,
    #[arg(long)]
    pub clamp_nonnegative: Option<bool>,
    #[arg(long, value_enum)]
    pub forecaster: Option<ForecasterKind>,
    #[arg(long)]
    pub seasonal_period: Option<usize>,
    /// CSV `date,forecast` with an optional `monthly_total,<value>` row.
    #[arg(long = "external-forecast")]
    pub external_forecast_path: Option<PathBuf>,
    /// Forecaster for training months the external file does not cover.
    #[arg(long, value_enum)]
    pub fallback_forecaster: Option<ForecasterKind>,
    #[arg(long, value_delimiter = ',')]
    pub grid_tolerances: Option<Vec<Tolerance>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_explorations: Option<Vec<f64>>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(base, top;
            data_path, date_column, value_column, train_range, test_range, tolerance, exploration,
            step_size, discount, episodes, seed, online_updates, adjustment_unit, reward_rule,
            update_scope, clamp_nonnegative, forecaster, seasonal_period, external_forecast_path,
            fallback_forecaster, grid_tolerances, grid_explorations, output_dir,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ForecastSource {
    Builtin { forecaster: Forecaster },
    External { path: PathBuf, fallback: Forecaster },
}

/// Fully resolved run configuration. The agent's tolerance stays a
/// placeholder until the test month's base forecasts are known.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub date_column: String,
    pub value_column: String,
    pub train_range: MonthRange,
    pub test_month: YearMonth,
    pub tolerance: Tolerance,
    pub agent: AgentConfig,
    pub forecast: ForecastSource,
    pub grid_tolerances: Option<Vec<Tolerance>>,
    pub grid_explorations: Option<Vec<f64>>,
    pub output_dir: PathBuf,
}

fn builtin(kind: ForecasterKind, period: usize) -> CliResult<Forecaster> {
    match kind {
        ForecasterKind::Naive => Ok(Forecaster::Naive),
        ForecasterKind::SeasonalNaive => Ok(Forecaster::SeasonalNaive { period }),
        ForecasterKind::Drift => Ok(Forecaster::Drift),
        ForecasterKind::External => Err(CliError::Config(
            "the fallback forecaster cannot be external".into(),
        )),
    }
}

impl RunConfig {
    pub fn resolve(s: Settings) -> CliResult<Self> {
        let cfg_err = |m: &str| CliError::Config(m.to_string());
        let data_path = s
            .data_path
            .ok_or_else(|| cfg_err("data_path is required"))?;
        let train_range = s
            .train_range
            .ok_or_else(|| cfg_err("train_range is required"))?;
        let test = s
            .test_range
            .unwrap_or_else(|| MonthRange::single(train_range.end().succ()));
        if test.start() != test.end() {
            return Err(cfg_err("test_range must be a single month"));
        }
        let test_month = test.start();
        if test_month <= train_range.end() {
            return Err(CliError::Config(format!(
                "test month {test_month} must come after the training range {train_range}"
            )));
        }

        let period = s.seasonal_period.unwrap_or(7);
        if period == 0 {
            return Err(cfg_err("seasonal_period must be positive"));
        }
        let kind = s.forecaster.unwrap_or(ForecasterKind::Naive);
        let forecast = match (kind, s.external_forecast_path) {
            (ForecasterKind::External, Some(path)) => ForecastSource::External {
                path,
                fallback: builtin(
                    s.fallback_forecaster.unwrap_or(ForecasterKind::Naive),
                    period,
                )?,
            },
            (ForecasterKind::External, None) => {
                return Err(cfg_err(
                    "forecaster = external needs external_forecast_path",
                ));
            }
            (_, Some(_)) => {
                return Err(cfg_err(
                    "external_forecast_path is set but forecaster is not external",
                ));
            }
            (k, None) => ForecastSource::Builtin {
                forecaster: builtin(k, period)?,
            },
        };

        let defaults = AgentConfig::default();
        let agent = AgentConfig {
            // Placeholder; replaced once the tolerance is resolved.
            tolerance: 1.0,
            exploration: s.exploration.unwrap_or(defaults.exploration),
            step_size: s.step_size.unwrap_or(defaults.step_size),
            discount: s.discount.unwrap_or(defaults.discount),
            episodes: s.episodes.unwrap_or(defaults.episodes),
            seed: s.seed.unwrap_or(defaults.seed),
            online_updates: s.online_updates.unwrap_or(defaults.online_updates),
            adjustment_unit: s
                .adjustment_unit
                .map_or(AdjustmentUnit::SpreadOverCycle, |u| u.0),
            reward_rule: match s.reward_rule {
                Some(RewardChoice::Actual) => RewardRule::Actual,
                Some(RewardChoice::ActualPlusAccuracyGain) => RewardRule::ActualPlusAccuracyGain,
                None => defaults.reward_rule,
            },
            update_scope: match s.update_scope {
                Some(ScopeChoice::TakenAction) => UpdateScope::TakenAction,
                Some(ScopeChoice::AllActions) => UpdateScope::AllActions,
                None => defaults.update_scope,
            },
            clamp_nonnegative: s.clamp_nonnegative.unwrap_or(defaults.clamp_nonnegative),
        };
        agent
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        if let Some(list) = &s.grid_tolerances {
            if list.is_empty() {
                return Err(cfg_err("grid_tolerances is empty"));
            }
        }
        if let Some(list) = &s.grid_explorations {
            if list.is_empty() || list.iter().any(|e| !(0.0..=1.0).contains(e)) {
                return Err(cfg_err(
                    "grid_explorations must be a nonempty list of values in [0, 1]",
                ));
            }
        }

        Ok(Self {
            data_path,
            date_column: s
                .date_column
                .unwrap_or_else(|| dtr_core::data::DEFAULT_DATE_COLUMN.into()),
            value_column: s
                .value_column
                .unwrap_or_else(|| dtr_core::data::DEFAULT_VALUE_COLUMN.into()),
            train_range,
            test_month,
            tolerance: s.tolerance.unwrap_or(DEFAULT_TOLERANCE),
            agent,
            forecast,
            grid_tolerances: s.grid_tolerances,
            grid_explorations: s.grid_explorations,
            output_dir: s.output_dir.unwrap_or_else(|| PathBuf::from("dtr-out")),
        })
    }

    /// Configured grid, or the 3 × 3 default.
    pub fn grid_or_default(&self) -> (Vec<Tolerance>, Vec<f64>) {
        (
            self.grid_tolerances
                .clone()
                .unwrap_or_else(|| DEFAULT_GRID_TOLERANCES.to_vec()),
            self.grid_explorations
                .clone()
                .unwrap_or_else(|| DEFAULT_GRID_EXPLORATIONS.to_vec()),
        )
    }

    pub fn has_grid(&self) -> bool {
        self.grid_tolerances.is_some() || self.grid_explorations.is_some()
    }
}
