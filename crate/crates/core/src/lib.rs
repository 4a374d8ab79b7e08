//! Dynamic temporal reconciliation.
//!
//! A low-frequency (monthly) forecast is revised day by day as high-frequency
//! (daily) actuals arrive. The revision is driven by a tabular SARSA/TD(0)
//! agent whose states are the days of the cycle and whose three actions nudge
//! each daily forecast up, keep it, or nudge it down by a tolerance-derived
//! unit. The revised monthly forecast (RMF) is the sum of the adjusted daily
//! forecasts.
//!
//! Alongside the agent the crate ships the classical static reconciliation
//! baselines (`Ỹ = S·P·Ŷ` with bottom-up, top-down, OLS and WLS/GLS mappings),
//! simple base forecasters, data ingestion for daily OHLCV files and the
//! metric/grid harness used to evaluate revised forecasts.

pub mod agent;
pub mod baselines;
pub mod calendar;
pub mod data;
mod error;
pub mod evaluation;
pub mod forecasting;
pub mod hierarchy;
pub mod seed;

pub use agent::{
    build_action_set, egreedy_probabilities, greedy_action, init_state_values, reconcile_online,
    run_episode, sarsa_step, select_action, train, train_and_reconcile, Action, ActionSet,
    AdjustmentUnit, AgentConfig, EpisodeState, MonthlyEpisode, OnlineReconciler,
    ReconciliationTrace, RewardRule, TraceRow, UpdateScope, ValueTable,
};
pub use baselines::{
    p_bottom_up, p_gls, p_ols, p_top_down, p_wls, reconcile, MappingMatrix, MappingMethod,
};
pub use calendar::{MonthRange, YearMonth};
pub use data::{fill_calendar, load_ohlcv_csv, month_partition, read_ohlcv, MonthData};
pub use error::{Error, Result};
pub use evaluation::{
    mape, mape_rec, pct_improvement, run_grid, GridReport, GridRow, MetricReport, MetricRow,
    Tolerance,
};
pub use forecasting::{drift, naive, seasonal_naive, ForecastSet, Forecaster};
pub use hierarchy::{
    aggregate_bottom, build_two_level, coherence_residual, AggregationMatrix, HierarchyVector,
    TimeSeries,
};
pub use nalgebra::DMatrix;
