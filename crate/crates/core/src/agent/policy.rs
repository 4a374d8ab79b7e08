use rand::Rng;

use super::Action;
use crate::error::{Error, Result};

const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Argmax over a Q row. Ties go to keep when it is among the maxima,
/// otherwise to the lowest action index.
pub fn greedy_action(q_row: [f64; 3]) -> Action {
    let best = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if q_row[Action::Keep.index()] == best {
        return Action::Keep;
    }
    Action::ALL
        .into_iter()
        .find(|a| q_row[a.index()] == best)
        .unwrap_or(Action::Keep)
}

/// ε-greedy probabilities in action-index order: the greedy action gets
/// `1 − ϵ + ϵ/3`, the other two `ϵ/3` each.
pub fn egreedy_probabilities(q_row: [f64; 3], epsilon: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidDistribution(format!(
            "exploration {epsilon} outside [0, 1]"
        )));
    }
    if q_row.iter().any(|q| !q.is_finite()) {
        return Err(Error::InvalidDistribution("non-finite action value".into()));
    }
    let explore = epsilon / 3.0;
    let mut probs = [explore; 3];
    probs[greedy_action(q_row).index()] = 1.0 - epsilon + explore;
    Ok(probs)
}

/// Draws one action from `probs` using exactly one uniform variate.
pub fn select_action<R: Rng + ?Sized>(probs: [f64; 3], rng: &mut R) -> Result<Action> {
    if probs
        .iter()
        .any(|p| !(p.is_finite() && (0.0..=1.0).contains(p)))
    {
        return Err(Error::InvalidDistribution(format!(
            "{probs:?} is not a probability vector"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "{probs:?} sums to {total}"
        )));
    }
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for action in Action::ALL {
        cumulative += probs[action.index()];
        if u < cumulative {
            return Ok(action);
        }
    }
    // Rounding left u above the final cumulative sum.
    Ok(Action::ALL
        .into_iter()
        .rev()
        .find(|a| probs[a.index()] > 0.0)
        .expect("a distribution summing to one has a positive entry"))
}
