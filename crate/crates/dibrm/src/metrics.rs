//! Rank tables and the rating-approximation metrics.
//!
//! Two rating systems are compared by the rank places they assign, not
//! by raw values: rank 1 is the highest value on a day, ties break by
//! ascending user id. The similarity metric is
//!
//! ```text
//! mu = 1 - (1/N^2) * sum_i ( (1/D) * sum_j |R_ref[i][j] - R_model[i][j]| )
//! ```
//!
//! and its error estimate is the population standard deviation, over
//! users, of the per-user average rank difference divided by `N`.

use thiserror::Error;

use crate::event::UserId;
use crate::series::ReputationSeries;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("non-finite value for user {user_id} on day {day}")]
    NonFiniteValue { user_id: UserId, day: usize },
    #[error("value column has {values} entries for {users} users")]
    ColumnLengthMismatch { users: usize, values: usize },
    #[error("rank tables disagree in shape or user ordering")]
    TableMismatch,
    #[error("series have unequal lengths: {first} vs {other}")]
    SeriesLengthMismatch { first: usize, other: usize },
    #[error("rank table needs at least one user and one day")]
    Empty,
}

/// Rank places for a fixed set of users over consecutive days.
///
/// Stored user-major: `rank(i, j)` is user `i`'s 1-based place on day `j`,
/// and every day's column is a permutation of `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    users: Vec<UserId>,
    days: usize,
    ranks: Vec<u32>,
}

impl RankTable {
    /// Ranks one series per user, all sharing the same window.
    ///
    /// The user ordering of the table follows the input ordering.
    pub fn from_series(series: &[ReputationSeries]) -> Result<Self, MetricError> {
        let Some(first) = series.first() else {
            return Err(MetricError::Empty);
        };
        let days = first.len();
        if days == 0 {
            return Err(MetricError::Empty);
        }
        for s in series {
            if s.len() != days {
                return Err(MetricError::SeriesLengthMismatch {
                    first: days,
                    other: s.len(),
                });
            }
        }
        let users: Vec<UserId> = series.iter().map(|s| s.user_id).collect();
        let n = users.len();

        let rank_day = |day: usize| -> Result<Vec<u32>, MetricError> {
            let column: Vec<f64> = series.iter().map(|s| s.values[day]).collect();
            rank_users(&users, &column).map_err(|e| match e {
                MetricError::NonFiniteValue { user_id, .. } => {
                    MetricError::NonFiniteValue { user_id, day }
                }
                other => other,
            })
        };

        #[cfg(feature = "parallel")]
        let columns: Vec<Vec<u32>> = (0..days)
            .into_par_iter()
            .map(rank_day)
            .collect::<Result<_, _>>()?;
        #[cfg(not(feature = "parallel"))]
        let columns: Vec<Vec<u32>> = (0..days).map(rank_day).collect::<Result<_, _>>()?;

        let mut ranks = vec![0u32; n * days];
        for (day, column) in columns.iter().enumerate() {
            for (i, rank) in column.iter().enumerate() {
                ranks[i * days + day] = *rank;
            }
        }
        Ok(Self { users, days, ranks })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn rank(&self, user_index: usize, day: usize) -> u32 {
        self.ranks[user_index * self.days + day]
    }

    fn user_row(&self, user_index: usize) -> &[u32] {
        &self.ranks[user_index * self.days..(user_index + 1) * self.days]
    }
}

/// Rank places for one day of values, position-aligned with the input.
///
/// Higher value means better (lower) rank place; equal values order by
/// ascending user id so results are deterministic across runs.
pub fn rank_users(user_ids: &[UserId], values: &[f64]) -> Result<Vec<u32>, MetricError> {
    if user_ids.len() != values.len() {
        return Err(MetricError::ColumnLengthMismatch {
            users: user_ids.len(),
            values: values.len(),
        });
    }
    for (user, value) in user_ids.iter().zip(values) {
        if !value.is_finite() {
            return Err(MetricError::NonFiniteValue {
                user_id: *user,
                day: 0,
            });
        }
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("values checked finite")
            .then_with(|| user_ids[a].cmp(&user_ids[b]))
    });
    let mut ranks = vec![0u32; values.len()];
    for (place, index) in order.into_iter().enumerate() {
        ranks[index] = place as u32 + 1;
    }
    Ok(ranks)
}

/// Result of comparing a model rank table against the reference one.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Similarity in `(0, 1]`; 1 means identical rankings every day.
    pub mu: f64,
    /// Average absolute rank difference per user, `(1/D) * sum_j |diff|`.
    pub per_user_avg_diff: Vec<f64>,
}

/// Computes `mu` between two rank tables of identical shape and user order.
///
/// Per-user sums accumulate in integers, so the result is bit-stable
/// regardless of parallelism.
pub fn mu_metric(reference: &RankTable, model: &RankTable) -> Result<MetricReport, MetricError> {
    if reference.users != model.users || reference.days != model.days {
        return Err(MetricError::TableMismatch);
    }
    let n = reference.n_users();
    let days = reference.days();

    let user_sum = |i: usize| -> u64 {
        reference
            .user_row(i)
            .iter()
            .zip(model.user_row(i))
            .map(|(a, b)| u64::from(a.abs_diff(*b)))
            .sum()
    };

    #[cfg(feature = "parallel")]
    let sums: Vec<u64> = (0..n).into_par_iter().map(user_sum).collect();
    #[cfg(not(feature = "parallel"))]
    let sums: Vec<u64> = (0..n).map(user_sum).collect();

    let per_user_avg_diff: Vec<f64> = sums.iter().map(|&s| s as f64 / days as f64).collect();
    let mean_diff = per_user_avg_diff.iter().sum::<f64>() / n as f64;
    let mu = 1.0 - mean_diff / n as f64;
    Ok(MetricReport {
        mu,
        per_user_avg_diff,
    })
}

/// Error estimate: population standard deviation, over users, of the
/// normalized per-user average rank difference.
pub fn sigma_metric(report: &MetricReport) -> f64 {
    let n = report.per_user_avg_diff.len();
    if n == 0 {
        return 0.0;
    }
    let normalized: Vec<f64> = report
        .per_user_avg_diff
        .iter()
        .map(|d| d / n as f64)
        .collect();
    let mean = normalized.iter().sum::<f64>() / n as f64;
    let variance = normalized.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    variance.sqrt()
}
