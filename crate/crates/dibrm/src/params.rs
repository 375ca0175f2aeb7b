//! Parameters of the DIB-RM recurrence.

use thiserror::Error;

/// Invalid parameter combinations.
#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("forgetting factor beta must lie in [0, 1], got {0}")]
    BetaOutOfRange(f64),
    #[error("cumulative weight alpha must be finite and non-negative, got {0}")]
    AlphaOutOfRange(f64),
    #[error("activity period must be finite and positive, got {0} days")]
    ActivityPeriodOutOfRange(f64),
    #[error("basic value must be finite and non-negative, got {0}")]
    BasicValueOutOfRange(f64),
    #[error("day length must be positive")]
    ZeroDayLength,
}

/// Tunable factors of the model plus the calendar conventions the
/// pipeline relies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Weight of the cumulative part. Bounds how large the streak bonus
    /// of a single interaction can grow (`alpha * basic_value`).
    pub alpha: f64,
    /// Forgetting factor in `[0, 1]`. Accumulated trust is multiplied by
    /// `beta` once per elapsed activity period.
    pub beta: f64,
    /// Activity period `t_a` in days. Gaps shorter than this extend a
    /// user's activity streak; longer gaps decay trust.
    pub activity_period_days: f64,
    /// Basic value credited for every interaction.
    pub default_basic_value: f64,
    /// Seconds per day when converting `activity_period_days` to seconds.
    pub day_length_seconds: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.99,
            activity_period_days: 1.0,
            default_basic_value: 1.0,
            day_length_seconds: 86_400,
        }
    }
}

impl ModelParams {
    /// Parameters for one sweep point, keeping the default basic value
    /// and day length.
    pub fn new(activity_period_days: f64, alpha: f64, beta: f64) -> Result<Self, ParamsError> {
        let params = Self {
            alpha,
            beta,
            activity_period_days,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if !self.beta.is_finite() || !(0.0..=1.0).contains(&self.beta) {
            return Err(ParamsError::BetaOutOfRange(self.beta));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(ParamsError::AlphaOutOfRange(self.alpha));
        }
        if !self.activity_period_days.is_finite() || self.activity_period_days <= 0.0 {
            return Err(ParamsError::ActivityPeriodOutOfRange(
                self.activity_period_days,
            ));
        }
        if !self.default_basic_value.is_finite() || self.default_basic_value < 0.0 {
            return Err(ParamsError::BasicValueOutOfRange(self.default_basic_value));
        }
        if self.day_length_seconds == 0 {
            return Err(ParamsError::ZeroDayLength);
        }
        Ok(())
    }

    /// Activity period `t_a` expressed in seconds.
    pub fn period_seconds(&self) -> f64 {
        self.activity_period_days * f64::from(self.day_length_seconds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_validate() {
        assert!(ModelParams::default().validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range_factors() {
        assert!(matches!(
            ModelParams::new(1.0, 1.0, 1.5),
            Err(ParamsError::BetaOutOfRange(_))
        ));
        assert!(matches!(
            ModelParams::new(1.0, -0.1, 0.9),
            Err(ParamsError::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            ModelParams::new(0.0, 1.0, 0.9),
            Err(ParamsError::ActivityPeriodOutOfRange(_))
        ));
        assert!(matches!(
            ModelParams::new(f64::NAN, 1.0, 0.9),
            Err(ParamsError::ActivityPeriodOutOfRange(_))
        ));
    }

    #[test]
    fn period_respects_day_length() {
        let mut p = ModelParams::new(2.0, 1.0, 0.99).unwrap();
        assert_eq!(p.period_seconds(), 2.0 * 86_400.0);
        p.day_length_seconds = 100;
        assert_eq!(p.period_seconds(), 200.0);
    }
}
