//! Running nominal-behaviour baselines with k-sigma anomaly flags.

use serde::{Deserialize, Serialize};

use super::MapekError;

/// Minimum observations before the anomaly test is applied.
pub const MIN_OBSERVATIONS: u64 = 5;

/// Welford-style incremental mean/variance for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub metric: String,
    pub count: u64,
    pub mean: f64,
    /// Running sum of squared deviations.
    pub m2: f64,
    pub k_sigma: f64,
}

impl Baseline {
    pub fn new(metric: impl Into<String>, k_sigma: f64) -> Self {
        Baseline {
            metric: metric.into(),
            count: 0,
            mean: 0.0,
            m2: 0.0,
            k_sigma,
        }
    }

    /// Sample standard deviation; None below 2 observations.
    pub fn std(&self) -> Option<f64> {
        if self.count < 2 {
            None
        } else {
            Some((self.m2 / (self.count - 1) as f64).sqrt())
        }
    }

    /// Std with a relative epsilon floor (5% of |mean|, minimum 1e-9) so a
    /// constant stream does not flag on any deviation.
    pub fn floored_std(&self) -> f64 {
        let floor = (0.05 * self.mean.abs()).max(1e-9);
        self.std().unwrap_or(0.0).max(floor)
    }

    /// The mean + k_sigma * floored std detection threshold.
    pub fn threshold(&self) -> f64 {
        self.mean + self.k_sigma * self.floored_std()
    }

    /// Tests the observation against the pre-update baseline, then folds it
    /// in. Returns whether the observation was anomalous; the test only
    /// applies once the baseline holds at least `MIN_OBSERVATIONS` points.
    pub fn observe(&mut self, observation: f64) -> Result<bool, MapekError> {
        if !observation.is_finite() {
            return Err(MapekError::Argument(format!(
                "non-finite observation for metric {}",
                self.metric
            )));
        }
        let anomalous = self.count >= MIN_OBSERVATIONS
            && (observation - self.mean).abs() > self.k_sigma * self.floored_std();
        self.count += 1;
        let delta = observation - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (observation - self.mean);
        Ok(anomalous)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_observation_sets_mean() {
        let mut b = Baseline::new("m", 3.0);
        assert!(!b.observe(7.0).unwrap());
        assert_eq!(b.count, 1);
        assert_eq!(b.mean, 7.0);
        assert!(b.std().is_none());
    }

    #[test]
    fn constant_then_spike_flags() {
        let mut b = Baseline::new("m", 3.0);
        for _ in 0..5 {
            assert!(!b.observe(1.0).unwrap());
        }
        assert!(b.observe(100.0).unwrap());
    }

    #[test]
    fn constant_stream_never_anomalous() {
        let mut b = Baseline::new("m", 3.0);
        for _ in 0..50 {
            assert!(!b.observe(42.0).unwrap());
        }
        // mean exact, variance at the floor
        assert_eq!(b.mean, 42.0);
        assert!(b.std().unwrap() <= 1e-9);
    }

    #[test]
    fn non_finite_rejected() {
        let mut b = Baseline::new("m", 3.0);
        assert!(b.observe(f64::NAN).is_err());
        assert!(b.observe(f64::INFINITY).is_err());
    }

    #[test]
    fn welford_matches_batch_stats() {
        let values = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut b = Baseline::new("m", 3.0);
        for v in values {
            b.observe(v).unwrap();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((b.mean - mean).abs() < 1e-12);
        assert!((b.std().unwrap() - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn no_flags_under_min_observations() {
        let mut b = Baseline::new("m", 3.0);
        for _ in 0..4 {
            b.observe(1.0).unwrap();
        }
        // 5th observation is still within the warm-up
        assert!(!b.observe(1000.0).unwrap());
    }
}
