//! The DIB-RM recurrence: forgetting, cumulative, and activity-period
//! factors folded into an O(1) per-user state.
//!
//! Updating on interaction `n`:
//!
//! ```text
//! delta_n = floor((t_n - t_{n-1}) / t_a)
//! A_n     = A_{n-1} + 1   if delta_n == 0, else 0
//! I_n     = I_b + I_b * alpha * (1 - 1 / (A_n + 1))
//! T_n     = T_{n-1} * beta^delta_n + I_n
//! ```
//!
//! Between interactions trust is evaluated lazily: the stored value is
//! decayed by `beta` per elapsed period, with no state mutation.

use thiserror::Error;

use crate::event::InteractionEvent;
use crate::params::ModelParams;
use crate::series::{DateWindow, ReputationSeries};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("corrupt event log: event at {curr} precedes previous interaction at {prev}")]
    OutOfOrderEvent { prev: i64, curr: i64 },
    #[error("corrupt event log: events for user {expected} mixed with user {found}")]
    MixedUserLog { expected: u64, found: u64 },
    #[error("query instant {query} precedes last interaction at {last}")]
    QueryBeforeLastInteraction { query: i64, last: i64 },
    #[error("trust became non-finite applying interaction at {timestamp}")]
    NonFiniteTrust { timestamp: i64 },
}

/// Running trust state for one user.
///
/// The recurrence folds the whole interaction history into this triple,
/// so memory stays constant no matter how many events a user has.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserTrustState {
    /// Accumulated trust value `T`.
    pub trust: f64,
    /// Number of sequential activity periods `A`.
    pub activity_streak: u64,
    /// Timestamp of the previous interaction, when there is one.
    pub last_interaction: Option<i64>,
}

impl UserTrustState {
    pub fn is_fresh(&self) -> bool {
        self.last_interaction.is_none()
    }
}

/// Streak bonus of one interaction: `I_b * alpha * (1 - 1/(A + 1))`.
///
/// Grows with the streak and saturates strictly below `I_b * alpha`.
pub fn cumulative_component(basic_value: f64, alpha: f64, streak: u64) -> f64 {
    basic_value * alpha * (1.0 - 1.0 / (streak as f64 + 1.0))
}

/// Whole activity periods elapsed between two instants:
/// `floor((t_curr - t_prev) / t_a)`.
pub fn delta_periods(t_prev: i64, t_curr: i64, params: &ModelParams) -> Result<u64, ModelError> {
    if t_curr < t_prev {
        return Err(ModelError::OutOfOrderEvent {
            prev: t_prev,
            curr: t_curr,
        });
    }
    let gap = (t_curr - t_prev) as f64;
    Ok((gap / params.period_seconds()).floor() as u64)
}

/// Folds one interaction into the state.
///
/// The current event's cumulative bonus uses the streak *after* applying
/// the gap rule, so the first event of a new burst gets no bonus carried
/// over from an old burst. The first-ever interaction yields `T = I_b`.
pub fn apply_interaction(
    state: &UserTrustState,
    event: &InteractionEvent,
    params: &ModelParams,
) -> Result<UserTrustState, ModelError> {
    let (decayed, streak) = match state.last_interaction {
        None => (0.0, 0),
        Some(prev) => {
            let delta = delta_periods(prev, event.timestamp, params)?;
            let streak = if delta == 0 {
                state.activity_streak + 1
            } else {
                0
            };
            (state.trust * params.beta.powf(delta as f64), streak)
        }
    };
    let interaction_value =
        event.basic_value + cumulative_component(event.basic_value, params.alpha, streak);
    let trust = decayed + interaction_value;
    if !trust.is_finite() {
        return Err(ModelError::NonFiniteTrust {
            timestamp: event.timestamp,
        });
    }
    Ok(UserTrustState {
        trust,
        activity_streak: streak,
        last_interaction: Some(event.timestamp),
    })
}

/// Trust as seen at `query`, decaying the stored value lazily.
///
/// No state is mutated; a user with no interactions reads as zero.
pub fn reputation_at(
    state: &UserTrustState,
    query: i64,
    params: &ModelParams,
) -> Result<f64, ModelError> {
    let Some(last) = state.last_interaction else {
        return Ok(0.0);
    };
    if query < last {
        return Err(ModelError::QueryBeforeLastInteraction { query, last });
    }
    let delta = delta_periods(last, query, params)?;
    Ok(state.trust * params.beta.powf(delta as f64))
}

fn check_single_user_sorted(events: &[InteractionEvent]) -> Result<(), ModelError> {
    let Some(first) = events.first() else {
        return Ok(());
    };
    for pair in events.windows(2) {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(ModelError::OutOfOrderEvent {
                prev: pair[0].timestamp,
                curr: pair[1].timestamp,
            });
        }
    }
    if let Some(other) = events.iter().find(|e| e.user_id != first.user_id) {
        return Err(ModelError::MixedUserLog {
            expected: first.user_id,
            found: other.user_id,
        });
    }
    Ok(())
}

/// One DIB-RM value per calendar day of the window for a single user.
///
/// Each day's value is the state after all events up to 23:59:59 UTC of
/// that day, lazily decayed to that instant. Events dated past the
/// window end never enter the fold.
pub fn daily_reputation_series(
    user_id: u64,
    events: &[InteractionEvent],
    params: &ModelParams,
    window: &DateWindow,
) -> Result<ReputationSeries, ModelError> {
    check_single_user_sorted(events)?;
    if let Some(first) = events.first() {
        if first.user_id != user_id {
            return Err(ModelError::MixedUserLog {
                expected: user_id,
                found: first.user_id,
            });
        }
    }
    let mut series = ReputationSeries::zeros(user_id, window);
    let mut state = UserTrustState::default();
    let mut next = 0;
    for day in 0..window.num_days() {
        let day_end = window.day_end_epoch(day);
        while next < events.len() && events[next].timestamp <= day_end {
            state = apply_interaction(&state, &events[next], params)?;
            next += 1;
        }
        series.values[day] = reputation_at(&state, day_end, params)?;
    }
    Ok(series)
}

/// Historical reputation: prefix sums of a daily series.
pub fn historical_series(daily: &ReputationSeries) -> ReputationSeries {
    daily.prefix_sums()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::InteractionKind;
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    const DAY: i64 = 86_400;

    fn params(ta: f64, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(ta, alpha, beta).unwrap()
    }

    fn event(user: u64, ts: i64, value: f64) -> InteractionEvent {
        InteractionEvent::new(user, ts, InteractionKind::Comment, value)
    }

    fn window(start: (i32, u32, u32), days: u64) -> DateWindow {
        let start = NaiveDate::from_ymd_opt(start.0, start.1, start.2).unwrap();
        DateWindow::new(start, start + chrono::Days::new(days - 1)).unwrap()
    }

    #[test]
    fn cumulative_zero_streak_is_zero() {
        assert_eq!(cumulative_component(2.0, 1.0, 0), 0.0);
    }

    #[test]
    fn cumulative_direct_substitution() {
        assert_eq!(cumulative_component(2.0, 1.0, 1), 1.0);
    }

    #[test]
    fn cumulative_approaches_asymptote_from_below() {
        // With basic value 2 and alpha 3 the bonus saturates below 6.
        let near = cumulative_component(2.0, 3.0, 1_000_000_000);
        assert!(near < 6.0);
        assert!(near > 6.0 - 1e-6);
        assert!(cumulative_component(2.0, 3.0, 1_000_000_001) > near);
    }

    #[test]
    fn delta_zero_gap() {
        let p = params(1.0, 1.0, 0.99);
        assert_eq!(delta_periods(100, 100, &p).unwrap(), 0);
    }

    #[test]
    fn delta_floors_partial_periods() {
        let p = params(2.0, 1.0, 0.99);
        assert_eq!(delta_periods(0, 5 * DAY, &p).unwrap(), 2);
    }

    #[test]
    fn delta_below_one_period_is_zero() {
        // A gap shorter than t_a keeps the streak growing.
        let p = params(2.0, 1.0, 0.99);
        let gap = (1.9 * DAY as f64) as i64;
        assert_eq!(delta_periods(0, gap, &p).unwrap(), 0);
    }

    #[test]
    fn delta_rejects_reversed_instants() {
        let p = params(1.0, 1.0, 0.99);
        assert!(matches!(
            delta_periods(10, 5, &p),
            Err(ModelError::OutOfOrderEvent { .. })
        ));
    }

    #[test]
    fn first_interaction_yields_basic_value() {
        let p = params(1.0, 1.0, 0.99);
        let s = apply_interaction(&UserTrustState::default(), &event(1, 1000, 1.0), &p).unwrap();
        assert_eq!(s.trust, 1.0);
        assert_eq!(s.activity_streak, 0);
        assert_eq!(s.last_interaction, Some(1000));
    }

    #[test]
    fn decay_then_add_direct_substitution() {
        // T = 100 * 0.99 + 1 over exactly one period, alpha 0 keeps I_n = I_b.
        let p = params(1.0, 0.0, 0.99);
        let state = UserTrustState {
            trust: 100.0,
            activity_streak: 3,
            last_interaction: Some(0),
        };
        let s = apply_interaction(&state, &event(1, DAY, 1.0), &p).unwrap();
        assert_relative_eq!(s.trust, 100.0, max_relative = 1e-12);
        assert_eq!(s.activity_streak, 0);
    }

    #[test]
    fn beta_one_accumulates_plain_sum() {
        let p = params(1.0, 0.0, 1.0);
        let mut state = UserTrustState::default();
        for i in 0..10 {
            state = apply_interaction(&state, &event(1, i * 3 * DAY, 2.0), &p).unwrap();
        }
        assert_relative_eq!(state.trust, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn out_of_order_event_is_rejected() {
        let p = params(1.0, 1.0, 0.99);
        let state = apply_interaction(&UserTrustState::default(), &event(1, 1000, 1.0), &p).unwrap();
        assert!(matches!(
            apply_interaction(&state, &event(1, 999, 1.0), &p),
            Err(ModelError::OutOfOrderEvent { .. })
        ));
    }

    #[test]
    fn reputation_at_last_interaction_is_unchanged() {
        let p = params(1.0, 1.0, 0.9);
        let state = UserTrustState {
            trust: 42.0,
            activity_streak: 2,
            last_interaction: Some(500),
        };
        assert_eq!(reputation_at(&state, 500, &p).unwrap(), 42.0);
    }

    #[test]
    fn reputation_decays_per_period() {
        let p = params(1.0, 1.0, 0.9);
        let state = UserTrustState {
            trust: 50.0,
            activity_streak: 0,
            last_interaction: Some(0),
        };
        let got = reputation_at(&state, 3 * DAY, &p).unwrap();
        assert_relative_eq!(got, 36.45, max_relative = 1e-12);
    }

    #[test]
    fn fresh_state_reads_zero() {
        let p = params(1.0, 1.0, 0.9);
        assert_eq!(reputation_at(&UserTrustState::default(), 123, &p).unwrap(), 0.0);
    }

    #[test]
    fn query_before_last_interaction_is_an_error() {
        let p = params(1.0, 1.0, 0.9);
        let state = UserTrustState {
            trust: 1.0,
            activity_streak: 0,
            last_interaction: Some(100),
        };
        assert!(matches!(
            reputation_at(&state, 99, &p),
            Err(ModelError::QueryBeforeLastInteraction { .. })
        ));
    }

    #[test]
    fn empty_log_gives_zero_series() {
        let p = params(1.0, 1.0, 0.99);
        let w = window((2010, 1, 1), 5);
        let s = daily_reputation_series(9, &[], &p, &w).unwrap();
        assert_eq!(s.values, vec![0.0; 5]);
    }

    #[test]
    fn beta_one_series_is_constant_after_event() {
        let p = params(1.0, 1.0, 1.0);
        let w = window((2010, 1, 1), 4);
        let ev = event(1, w.start_epoch() + 10, 3.0);
        let s = daily_reputation_series(1, &[ev], &p, &w).unwrap();
        assert_eq!(s.values, vec![3.0; 4]);
    }

    #[test]
    fn single_event_series_decays_geometrically() {
        let p = params(1.0, 1.0, 0.9);
        let w = window((2010, 1, 1), 3);
        let ev = event(1, w.start_epoch(), 10.0);
        let s = daily_reputation_series(1, &[ev], &p, &w).unwrap();
        assert_relative_eq!(s.values[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(s.values[1], 9.0, max_relative = 1e-12);
        assert_relative_eq!(s.values[2], 8.1, max_relative = 1e-12);
    }

    #[test]
    fn unsorted_series_input_is_rejected() {
        let p = params(1.0, 1.0, 0.9);
        let w = window((2010, 1, 1), 3);
        let evs = [event(1, w.start_epoch() + 100, 1.0), event(1, w.start_epoch(), 1.0)];
        assert!(matches!(
            daily_reputation_series(1, &evs, &p, &w),
            Err(ModelError::OutOfOrderEvent { .. })
        ));
    }

    #[test]
    fn mixed_user_log_is_rejected() {
        let p = params(1.0, 1.0, 0.9);
        let w = window((2010, 1, 1), 3);
        let evs = [event(1, w.start_epoch(), 1.0), event(2, w.start_epoch() + 1, 1.0)];
        assert!(matches!(
            daily_reputation_series(1, &evs, &p, &w),
            Err(ModelError::MixedUserLog { .. })
        ));
    }

    #[test]
    fn historical_is_prefix_sum() {
        let s = ReputationSeries {
            user_id: 1,
            start_day: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            values: vec![10.0, 9.0, 8.1],
        };
        assert_eq!(historical_series(&s).values, vec![10.0, 19.0, 27.1]);
        let zero = ReputationSeries {
            values: vec![0.0, 0.0, 0.0],
            ..s
        };
        assert_eq!(historical_series(&zero).values, vec![0.0, 0.0, 0.0]);
    }
}
