//! Deterministic synthetic wind forecasts and forecast errors.
//!
//! Forecasts follow a bounded AR(1) process per unit with a shared
//! innovation component; errors are Gaussian with a standard deviation that
//! grows with the forecast level, truncated so `forecast + error` stays in
//! `[0, W^max]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{HistoryRecord, ValidationRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub history_periods: usize,
    pub validation_periods: usize,
    /// AR(1) coefficient of the forecast series.
    pub ar_coef: f64,
    /// Innovation standard deviation as a fraction of capacity.
    pub noise_scale: f64,
    /// Long-run forecast mean as a fraction of capacity.
    pub mean_level: f64,
    /// Share of the innovation common to all units.
    pub correlation: f64,
    /// Error standard deviation at zero forecast, fraction of capacity.
    pub error_base: f64,
    /// Growth of the error standard deviation with `forecast / capacity`.
    pub error_slope: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            history_periods: 2000,
            validation_periods: 240,
            ar_coef: 0.95,
            noise_scale: 0.08,
            mean_level: 0.5,
            correlation: 0.5,
            error_base: 0.02,
            error_slope: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub history: Vec<HistoryRecord>,
    pub validation: Vec<ValidationRecord>,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |r: &str| Err(Error::invariant("synthetic generator", r.to_string()));
        if !(0.0..1.0).contains(&self.ar_coef) {
            return bad("ar_coef must lie in [0, 1)");
        }
        if !(self.noise_scale >= 0.0 && self.error_base >= 0.0 && self.error_slope >= 0.0) {
            return bad("noise and error scales must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.mean_level) || !(0.0..=1.0).contains(&self.correlation) {
            return bad("mean_level and correlation must lie in [0, 1]");
        }
        Ok(())
    }

    /// Error standard deviation at a forecast level.
    pub fn error_std(&self, forecast: f64, capacity: f64) -> f64 {
        capacity * (self.error_base + self.error_slope * forecast / capacity)
    }
}

pub fn generate(config: &SyntheticConfig, capacities: &[f64]) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let n = capacities.len();
    let mut level: Vec<f64> = vec![config.mean_level; n];
    let shared = config.correlation.sqrt();
    let own = (1.0 - config.correlation).sqrt();
    let total = config.history_periods + config.validation_periods;
    let mut history = Vec::with_capacity(config.history_periods);
    let mut validation = Vec::with_capacity(config.validation_periods);
    for t in 0..total {
        let common = std.sample(&mut rng);
        let mut forecast = Vec::with_capacity(n);
        let mut error = Vec::with_capacity(n);
        for j in 0..n {
            let shock = shared * common + own * std.sample(&mut rng);
            let x = config.mean_level
                + config.ar_coef * (level[j] - config.mean_level)
                + config.noise_scale * shock;
            level[j] = x.clamp(0.0, 1.0);
            let cap = capacities[j];
            let f = round6(level[j] * cap);
            let e = config.error_std(f, cap) * std.sample(&mut rng);
            let e = round6((f + e).clamp(0.0, cap) - f);
            forecast.push(f);
            error.push(e);
        }
        if t < config.history_periods {
            history.push(HistoryRecord {
                timestamp: t as i64,
                forecast,
                error,
            });
        } else {
            let observed = forecast
                .iter()
                .zip(&error)
                .map(|(f, e)| round6(f + e))
                .collect();
            validation.push(ValidationRecord {
                timestamp: t as i64,
                forecast,
                error,
                observed,
            });
        }
    }
    Ok(SyntheticData {
        history,
        validation,
    })
}

/// Values are stored at micro-MW resolution so CSV round trips are exact.
fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let cfg = SyntheticConfig {
            history_periods: 300,
            validation_periods: 20,
            ..SyntheticConfig::default()
        };
        let a = generate(&cfg, &[100.0, 50.0]).unwrap();
        let b = generate(&cfg, &[100.0, 50.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 300);
        assert_eq!(a.validation[0].timestamp, 300);
        for r in &a.history {
            for (j, cap) in [100.0, 50.0].iter().enumerate() {
                assert!(r.forecast[j] >= 0.0 && r.forecast[j] <= *cap);
                assert!(r.forecast[j] + r.error[j] >= -1e-9);
                assert!(r.forecast[j] + r.error[j] <= cap + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = SyntheticConfig {
            ar_coef: 1.5,
            ..SyntheticConfig::default()
        };
        assert!(generate(&cfg, &[1.0]).is_err());
    }
}
