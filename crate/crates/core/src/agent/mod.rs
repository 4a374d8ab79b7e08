//! Tabular SARSA agent that revises a monthly forecast from daily actuals.
//!
//! One episode is one cycle of `n ≤ 31` days. The state is the day index
//! (the remaining monthly total travels with it as payload) and each day
//! offers three candidate adjustments of that day's base forecast
//! `ŷ_t`: `ŷ_t + u`, `ŷ_t` or `ŷ_t − u`, where `u` is the adjustment unit.
//!
//! After the actual `y_t` is observed the agent bootstraps
//! `Q(t,a) ← Q(t,a) + α(r + γ·Q(t+1,a') − Q(t,a))` with `a'` drawn
//! ε-greedily for the next day, and the revised monthly forecast is the sum
//! over every day of the cycle of the adjustment picked greedily from the
//! current table.
//!
//! The daily actual is the same whatever adjustment was picked, so a reward
//! equal to `y_t` alone cannot separate the actions. The default reward adds
//! the reduction in absolute error the adjustment would have bought on that
//! day, `max(0, |y_t − ŷ_t| − |y_t − adj_a(ŷ_t)|)`, and the default update
//! scope refreshes all three actions of the observed day against the same
//! sampled successor. Both literal variants remain selectable through
//! [`RewardRule::Actual`] and [`UpdateScope::TakenAction`].

mod policy;
pub mod snapshot;
mod table;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::forecasting::ForecastSet;
use crate::seed::rng_for;

pub use policy::{egreedy_probabilities, greedy_action, select_action};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
pub use table::{init_state_values, ValueTable};

/// Longest supported cycle.
pub const MAX_DAYS: usize = 31;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Increase = 0,
    Keep = 1,
    Decrease = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Increase, Action::Keep, Action::Decrease];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    /// Multiple of the adjustment unit added to the base forecast.
    pub fn direction(self) -> f64 {
        match self {
            Action::Increase => 1.0,
            Action::Keep => 0.0,
            Action::Decrease => -1.0,
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardRule {
    /// `r_t = y_t` for every action.
    Actual,
    /// `r_t(a) = y_t + max(0, |y_t − ŷ_t| − |y_t − adj_a(ŷ_t)|)`.
    #[default]
    ActualPlusAccuracyGain,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateScope {
    /// Only the action taken on day `t` is updated.
    TakenAction,
    /// All three actions of day `t` are updated against the shared successor.
    #[default]
    AllActions,
}

/// How the per-day adjustment unit `u` is derived from the tolerance `ε`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentUnit {
    /// `u = ε`.
    #[default]
    Tolerance,
    /// `u = ε / n` for an `n`-day cycle, so the whole cycle can move by at
    /// most `ε`.
    SpreadOverCycle,
    /// A fixed `u` independent of the tolerance.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// ε, in forecast units.
    pub tolerance: f64,
    /// ϵ of the ε-greedy policy.
    pub exploration: f64,
    /// α.
    pub step_size: f64,
    /// γ.
    pub discount: f64,
    /// Passes over the training history.
    pub episodes: usize,
    pub seed: u64,
    /// Keep learning while the test cycle streams in.
    pub online_updates: bool,
    pub adjustment_unit: AdjustmentUnit,
    pub reward_rule: RewardRule,
    pub update_scope: UpdateScope,
    /// Floor adjusted daily forecasts at zero.
    pub clamp_nonnegative: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            tolerance: 1.0,
            exploration: 0.05,
            step_size: 0.1,
            discount: 1.0,
            episodes: 5,
            seed: 0,
            online_updates: true,
            adjustment_unit: AdjustmentUnit::default(),
            reward_rule: RewardRule::default(),
            update_scope: UpdateScope::default(),
            clamp_nonnegative: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return fail(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return fail(format!(
                "exploration must lie in [0, 1], got {}",
                self.exploration
            ));
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return fail(format!(
                "step size must lie in (0, 1], got {}",
                self.step_size
            ));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return fail(format!(
                "discount must lie in [0, 1], got {}",
                self.discount
            ));
        }
        if let AdjustmentUnit::Fixed(u) = self.adjustment_unit {
            if !(u.is_finite() && u > 0.0) {
                return fail(format!("adjustment unit must be positive, got {u}"));
            }
        }
        Ok(())
    }

    /// Adjustment unit `u` for a cycle of `n` days.
    pub fn unit(&self, n: usize) -> f64 {
        match self.adjustment_unit {
            AdjustmentUnit::Tolerance => self.tolerance,
            AdjustmentUnit::SpreadOverCycle => self.tolerance / n.max(1) as f64,
            AdjustmentUnit::Fixed(u) => u,
        }
    }

    /// Hex SHA-256 of the JSON form of the config, truncated to 16 bytes.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)[..16]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Message when `α · max|r|` exceeds the scale of the initial values.
    pub fn reward_scale_warning(&self, max_abs_reward: f64, init_scale: f64) -> Option<String> {
        let step = self.step_size * max_abs_reward;
        (step > init_scale).then(|| {
            format!(
                "step size {} times reward magnitude {max_abs_reward:.4} exceeds the initial value scale {init_scale:.4}",
                self.step_size
            )
        })
    }
}

/// Day of the cycle plus the remaining monthly total `M − Σ_{i≤t} ŷ_i`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    day_index: usize,
    remaining_total: f64,
}

impl EpisodeState {
    pub fn new(day_index: usize, remaining_total: f64) -> Result<Self> {
        if !(1..=MAX_DAYS).contains(&day_index) {
            return Err(Error::Shape(format!(
                "day index {day_index} outside 1..={MAX_DAYS}"
            )));
        }
        if !remaining_total.is_finite() {
            return Err(Error::Numeric("remaining total is not finite".into()));
        }
        Ok(Self {
            day_index,
            remaining_total,
        })
    }

    pub fn day_index(&self) -> usize {
        self.day_index
    }

    pub fn remaining_total(&self) -> f64 {
        self.remaining_total
    }
}

/// Candidate adjusted forecasts for one day, in action order.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    candidates: [f64; 3],
}

impl ActionSet {
    pub fn candidates(&self) -> [f64; 3] {
        self.candidates
    }

    pub fn value(&self, action: Action) -> f64 {
        self.candidates[action.index()]
    }
}

/// `(ŷ_t + u, ŷ_t, ŷ_t − u)` with `u = cfg.unit(cycle_len)`.
pub fn build_action_set(y_hat_t: f64, cfg: &AgentConfig, cycle_len: usize) -> ActionSet {
    let u = cfg.unit(cycle_len);
    let candidates = Action::ALL.map(|a| {
        let x = y_hat_t + a.direction() * u;
        if cfg.clamp_nonnegative {
            x.max(0.0)
        } else {
            x
        }
    });
    ActionSet { candidates }
}

/// One SARSA backup of `Q(s,a)` and the matching TD(0) backup of `V(s)`.
/// `next = None` marks the terminal day, whose successor value is zero.
pub fn sarsa_step(
    table: &mut ValueTable,
    s: &EpisodeState,
    a: Action,
    r: f64,
    next: Option<(&EpisodeState, Action)>,
    cfg: &AgentConfig,
) {
    let q_next = next.map_or(0.0, |(s2, a2)| table.q(s2.day_index, a2));
    q_backup(table, s.day_index, a, r, q_next, cfg);
    v_backup(table, s.day_index, r, next.map(|(s2, _)| s2.day_index), cfg);
}

fn q_backup(table: &mut ValueTable, day: usize, a: Action, r: f64, q_next: f64, cfg: &AgentConfig) {
    let q = table.q(day, a);
    table.set_q(day, a, q + cfg.step_size * (r + cfg.discount * q_next - q));
}

fn v_backup(
    table: &mut ValueTable,
    day: usize,
    r: f64,
    next_day: Option<usize>,
    cfg: &AgentConfig,
) {
    let v = table.v(day);
    let v_next = next_day.map_or(0.0, |d| table.v(d));
    table.set_v(day, v + cfg.step_size * (r + cfg.discount * v_next - v));
}

/// Base forecasts, actuals and the monthly total of one cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonthlyEpisode {
    month: Option<YearMonth>,
    forecasts: Vec<f64>,
    actuals: Vec<f64>,
    monthly_total: f64,
}

impl MonthlyEpisode {
    /// The monthly total defaults to the sum of the daily forecasts.
    pub fn new(forecasts: Vec<f64>, actuals: Vec<f64>) -> Result<Self> {
        if forecasts.is_empty() {
            return Err(Error::EmptyCycle);
        }
        if forecasts.len() != actuals.len() {
            return Err(Error::Shape(format!(
                "{} daily forecasts but {} actuals",
                forecasts.len(),
                actuals.len()
            )));
        }
        if forecasts.len() > MAX_DAYS {
            return Err(Error::Shape(format!(
                "cycle of {} days exceeds {MAX_DAYS}",
                forecasts.len()
            )));
        }
        if forecasts.iter().chain(&actuals).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSeries("non-finite value in episode".into()));
        }
        let monthly_total = forecasts.iter().sum();
        Ok(Self {
            month: None,
            forecasts,
            actuals,
            monthly_total,
        })
    }

    pub fn from_forecast_set(forecast: &ForecastSet, actuals: Vec<f64>) -> Result<Self> {
        let mut ep = Self::new(forecast.daily().to_vec(), actuals)?;
        ep.month = Some(forecast.cycle());
        ep.monthly_total = forecast.monthly_total();
        Ok(ep)
    }

    pub fn with_month(mut self, month: YearMonth) -> Self {
        self.month = Some(month);
        self
    }

    pub fn with_monthly_total(mut self, total: f64) -> Result<Self> {
        if !total.is_finite() {
            return Err(Error::InvalidSeries("non-finite monthly total".into()));
        }
        self.monthly_total = total;
        Ok(self)
    }

    pub fn month(&self) -> Option<YearMonth> {
        self.month
    }

    pub fn forecasts(&self) -> &[f64] {
        &self.forecasts
    }

    pub fn actuals(&self) -> &[f64] {
        &self.actuals
    }

    pub fn monthly_total(&self) -> f64 {
        self.monthly_total
    }

    pub fn len(&self) -> usize {
        self.forecasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forecasts.is_empty()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub day: usize,
    /// Action taken on this day by the behaviour policy.
    pub action: Action,
    /// Day's base forecast adjusted by `action`.
    pub adjusted: f64,
    pub actual: f64,
    /// Revised monthly forecast after observing this day.
    pub rmf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationTrace {
    rows: Vec<TraceRow>,
    /// Greedy adjusted forecast of every day of the cycle after the last row.
    adjusted: Vec<f64>,
    monthly_total: f64,
}

impl ReconciliationTrace {
    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rmf(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rmf).collect()
    }

    pub fn final_rmf(&self) -> Option<f64> {
        self.rows.last().map(|r| r.rmf)
    }

    pub fn adjusted(&self) -> &[f64] {
        &self.adjusted
    }

    pub fn monthly_total(&self) -> f64 {
        self.monthly_total
    }
}

/// Streams one cycle of actuals through the agent, day by day.
pub struct OnlineReconciler<R> {
    table: ValueTable,
    cfg: AgentConfig,
    learn: bool,
    forecasts: Vec<f64>,
    monthly_total: f64,
    unit: f64,
    rng: R,
    next_day: usize,
    pending: Option<Action>,
    rows: Vec<TraceRow>,
    adjusted: Vec<f64>,
}

impl<R: Rng> OnlineReconciler<R> {
    /// Learning during the stream follows `cfg.online_updates`.
    pub fn new(
        table: ValueTable,
        forecasts: &[f64],
        monthly_total: f64,
        cfg: &AgentConfig,
        rng: R,
    ) -> Result<Self> {
        Self::build(
            table,
            forecasts,
            monthly_total,
            cfg,
            rng,
            cfg.online_updates,
        )
    }

    fn build(
        table: ValueTable,
        forecasts: &[f64],
        monthly_total: f64,
        cfg: &AgentConfig,
        rng: R,
        learn: bool,
    ) -> Result<Self> {
        cfg.validate()?;
        if forecasts.is_empty() {
            return Err(Error::EmptyCycle);
        }
        if forecasts.len() > MAX_DAYS {
            return Err(Error::Shape(format!(
                "cycle of {} days exceeds {MAX_DAYS}",
                forecasts.len()
            )));
        }
        if forecasts.iter().any(|x| !x.is_finite()) || !monthly_total.is_finite() {
            return Err(Error::InvalidSeries("non-finite forecast".into()));
        }
        let mut me = Self {
            table,
            cfg: cfg.clone(),
            learn,
            forecasts: forecasts.to_vec(),
            monthly_total,
            unit: cfg.unit(forecasts.len()),
            rng,
            next_day: 1,
            pending: None,
            rows: Vec::with_capacity(forecasts.len()),
            adjusted: Vec::new(),
        };
        me.adjusted = me.greedy_adjusted();
        Ok(me)
    }

    pub fn cycle_len(&self) -> usize {
        self.forecasts.len()
    }

    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn table(&self) -> &ValueTable {
        &self.table
    }

    pub fn is_complete(&self) -> bool {
        self.next_day > self.cycle_len()
    }

    /// RMF from the current table, before or between observations.
    pub fn current_rmf(&self) -> f64 {
        self.rmf_of(&self.adjusted)
    }

    fn adjust(&self, day: usize, action: Action) -> f64 {
        let x = self.forecasts[day - 1] + action.direction() * self.unit;
        if self.cfg.clamp_nonnegative {
            x.max(0.0)
        } else {
            x
        }
    }

    fn reward(&self, day: usize, action: Action, actual: f64) -> f64 {
        match self.cfg.reward_rule {
            RewardRule::Actual => actual,
            RewardRule::ActualPlusAccuracyGain => {
                let base = (actual - self.forecasts[day - 1]).abs();
                let moved = (actual - self.adjust(day, action)).abs();
                actual + (base - moved).max(0.0)
            }
        }
    }

    fn state(&self, day: usize) -> Result<EpisodeState> {
        let spent: f64 = self.forecasts[..day].iter().sum();
        EpisodeState::new(day, self.monthly_total - spent)
    }

    fn sample(&mut self, day: usize) -> Result<Action> {
        let probs = egreedy_probabilities(self.table.q_row(day), self.cfg.exploration)?;
        select_action(probs, &mut self.rng)
    }

    fn greedy_adjusted(&self) -> Vec<f64> {
        (1..=self.cycle_len())
            .map(|d| self.adjust(d, greedy_action(self.table.q_row(d))))
            .collect()
    }

    fn rmf_of(&self, adjusted: &[f64]) -> f64 {
        // Offset keeps RMF = M under the all-keep policy when M is not the
        // plain daily sum.
        let offset = self.monthly_total - self.forecasts.iter().sum::<f64>();
        adjusted.iter().sum::<f64>() + offset
    }

    /// Feeds the actual of `day` (1-based); days must arrive in order.
    pub fn observe(&mut self, day: usize, actual: f64) -> Result<&TraceRow> {
        if self.is_complete() {
            return Err(Error::Shape(format!(
                "all {} days already observed",
                self.cycle_len()
            )));
        }
        if day != self.next_day {
            return Err(Error::StreamOrder {
                expected: self.next_day,
                got: day,
            });
        }
        if !actual.is_finite() {
            return Err(Error::InvalidSeries(format!(
                "non-finite actual on day {day}"
            )));
        }
        let n = self.cycle_len();
        let action = match self.pending.take() {
            Some(a) => a,
            None => self.sample(day)?,
        };
        let next = if day < n {
            Some(self.sample(day + 1)?)
        } else {
            None
        };

        if self.learn {
            let s = self.state(day)?;
            let s_next = next.map(|_| self.state(day + 1)).transpose()?;
            let q_next = match (&s_next, next) {
                (Some(s2), Some(a2)) => self.table.q(s2.day_index(), a2),
                _ => 0.0,
            };
            let scope: &[Action] = match self.cfg.update_scope {
                UpdateScope::AllActions => &Action::ALL,
                UpdateScope::TakenAction => std::slice::from_ref(&action),
            };
            let rewards: Vec<(Action, f64)> = scope
                .iter()
                .map(|&a| (a, self.reward(day, a, actual)))
                .collect();
            for (a, r) in rewards {
                q_backup(&mut self.table, s.day_index(), a, r, q_next, &self.cfg);
            }
            v_backup(
                &mut self.table,
                s.day_index(),
                actual,
                s_next.map(|s2| s2.day_index()),
                &self.cfg,
            );
        }
        self.pending = next;
        self.next_day += 1;

        self.adjusted = self.greedy_adjusted();
        let row = TraceRow {
            day,
            action,
            adjusted: self.adjust(day, action),
            actual,
            rmf: self.rmf_of(&self.adjusted),
        };
        self.rows.push(row);
        Ok(self.rows.last().expect("row just pushed"))
    }

    pub fn trace(&self) -> ReconciliationTrace {
        ReconciliationTrace {
            rows: self.rows.clone(),
            adjusted: self.adjusted.clone(),
            monthly_total: self.monthly_total,
        }
    }

    pub fn into_parts(self) -> (ValueTable, ReconciliationTrace) {
        let trace = ReconciliationTrace {
            rows: self.rows,
            adjusted: self.adjusted,
            monthly_total: self.monthly_total,
        };
        (self.table, trace)
    }
}

/// Runs one full training episode, always learning.
pub fn run_episode<R: Rng>(
    episode: &MonthlyEpisode,
    table: &mut ValueTable,
    cfg: &AgentConfig,
    rng: &mut R,
) -> Result<ReconciliationTrace> {
    let mut agent = OnlineReconciler::build(
        table.clone(),
        &episode.forecasts,
        episode.monthly_total,
        cfg,
        rng,
        true,
    )?;
    for (i, &y) in episode.actuals.iter().enumerate() {
        agent.observe(i + 1, y)?;
    }
    let (learned, trace) = agent.into_parts();
    *table = learned;
    Ok(trace)
}

/// Streams a test cycle through a trained table. Learning follows
/// `cfg.online_updates`.
pub fn reconcile_online<R: Rng>(
    table: ValueTable,
    forecasts: &[f64],
    monthly_total: f64,
    actuals: impl IntoIterator<Item = (usize, f64)>,
    cfg: &AgentConfig,
    rng: R,
) -> Result<(ValueTable, ReconciliationTrace)> {
    let mut agent = OnlineReconciler::new(table, forecasts, monthly_total, cfg, rng)?;
    for (day, y) in actuals {
        agent.observe(day, y)?;
    }
    Ok(agent.into_parts())
}

/// Trains on `history`, then streams `test` with a `"reconcile"` random
/// source derived from `cfg.seed`.
pub fn train_and_reconcile(
    history: &[MonthlyEpisode],
    test: &MonthlyEpisode,
    cfg: &AgentConfig,
) -> Result<(ValueTable, ReconciliationTrace)> {
    let table = train(history, cfg)?;
    reconcile_online(
        table,
        &test.forecasts,
        test.monthly_total,
        test.actuals
            .iter()
            .copied()
            .enumerate()
            .map(|(i, y)| (i + 1, y)),
        cfg,
        rng_for(cfg.seed, "reconcile"),
    )
}

/// Trains a table over `cfg.episodes` chronological passes of `history`.
///
/// The table starts from [`init_state_values`] of the earliest month. Months
/// without a calendar label keep their given order.
pub fn train(history: &[MonthlyEpisode], cfg: &AgentConfig) -> Result<ValueTable> {
    cfg.validate()?;
    if history.is_empty() {
        if cfg.episodes == 0 {
            return Ok(ValueTable::zeros());
        }
        return Err(Error::InsufficientData("no training months".into()));
    }
    let mut ordered: Vec<&MonthlyEpisode> = history.iter().collect();
    ordered.sort_by_key(|e| e.month);

    let first = ordered[0];
    let mut table = init_state_values(first.monthly_total, &first.forecasts)?;
    let max_reward = ordered
        .iter()
        .flat_map(|e| e.actuals.iter())
        .fold(0.0f64, |m, y| m.max(y.abs()));
    if let Some(msg) = cfg.reward_scale_warning(max_reward, table.max_abs()) {
        warn!("{msg}");
    }

    let mut rng = rng_for(cfg.seed, "train");
    for _ in 0..cfg.episodes {
        for episode in &ordered {
            run_episode(episode, &mut table, cfg, &mut rng)?;
        }
    }
    if !table.is_finite() {
        return Err(Error::Numeric(
            "training diverged to non-finite values".into(),
        ));
    }
    Ok(table)
}
