//! Daily reputation series and the calendar window they are sampled on.

use std::io::{self, Write};

use chrono::NaiveDate;
use thiserror::Error;

use crate::event::UserId;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window end {end} precedes start {start}")]
    EndBeforeStart { start: NaiveDate, end: NaiveDate },
}

/// Inclusive range of calendar days (UTC) over which series are sampled.
///
/// A day's value is taken at 23:59:59 UTC of that day, so `day_end_epoch`
/// is the instant every series evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, WindowError> {
        if end < start {
            return Err(WindowError::EndBeforeStart { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    /// Number of calendar days in the window (inclusive bounds).
    pub fn num_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn day_date(&self, day_index: usize) -> NaiveDate {
        self.start + chrono::Days::new(day_index as u64)
    }

    /// First instant of the window: 00:00:00 UTC on the start day.
    pub fn start_epoch(&self) -> i64 {
        self.start.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()
    }

    /// Instant at which a day's value is sampled: 23:59:59 UTC.
    pub fn day_end_epoch(&self, day_index: usize) -> i64 {
        self.day_date(day_index)
            .and_hms_opt(23, 59, 59)
            .unwrap()
            .and_utc()
            .timestamp()
    }

    /// Last sampled instant of the window.
    pub fn end_epoch(&self) -> i64 {
        self.day_end_epoch(self.num_days() - 1)
    }

    /// Day index containing `epoch`, or `None` outside the window.
    pub fn day_index_of_epoch(&self, epoch: i64) -> Option<usize> {
        if epoch < self.start_epoch() || epoch > self.end_epoch() {
            return None;
        }
        Some(((epoch - self.start_epoch()) / 86_400) as usize)
    }

    pub fn contains_epoch(&self, epoch: i64) -> bool {
        self.day_index_of_epoch(epoch).is_some()
    }
}

/// Per-user daily values: one entry per calendar day of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct ReputationSeries {
    pub user_id: UserId,
    pub start_day: NaiveDate,
    pub values: Vec<f64>,
}

impl ReputationSeries {
    pub fn zeros(user_id: UserId, window: &DateWindow) -> Self {
        Self {
            user_id,
            start_day: window.start(),
            values: vec![0.0; window.num_days()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Running prefix sums of the daily values ("area under the curve").
    pub fn prefix_sums(&self) -> Self {
        let mut acc = 0.0;
        let values = self
            .values
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        Self {
            user_id: self.user_id,
            start_day: self.start_day,
            values,
        }
    }
}

/// Writes series in the long row format `user_id,day_index,value`.
///
/// The day-index column is anchored to the window in the header itself
/// (`day_index_from_<start ISO date>`) so files stay self-describing.
pub fn write_series_csv<'a, W, I>(writer: &mut W, window: &DateWindow, series: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a ReputationSeries>,
{
    writeln!(writer, "user_id,day_index_from_{},value", window.start())?;
    for s in series {
        for (day, value) in s.values.iter().enumerate() {
            writeln!(writer, "{},{},{}", s.user_id, day, value)?;
        }
    }
    Ok(())
}
