use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion_counts, metrics, ConfusionCounts, Metrics, Statistic};
use crate::error::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    /// 1000 resamples at the 95% level.
    pub fn new(seed: u64) -> Self {
        BootstrapConfig {
            resamples: 1000,
            level: 0.95,
            seed,
        }
    }

    fn check(&self) -> Result<(), StatsError> {
        if self.resamples == 0 {
            return Err(StatsError::InvalidArgument(
                "resamples must be positive".into(),
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(StatsError::InvalidArgument(format!(
                "level {} outside (0, 1)",
                self.level
            )));
        }
        Ok(())
    }
}

/// Percentile bootstrap interval for one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub statistic: Statistic,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

/// Resample `b` draws its indices from ChaCha8 seeded with `seed` on stream
/// `b`, so the result does not depend on how resamples are scheduled.
fn resample(gold: &[u8], pred: &[u8], seed: u64, b: usize) -> Metrics {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    let n = gold.len();
    let mut c = ConfusionCounts::default();
    for _ in 0..n {
        let i = rng.random_range(0..n);
        match (gold[i] == 1, pred[i] == 1) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    metrics(&c).expect("n >= 1")
}

fn percentile_bounds(values: &mut [f64], level: f64) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let b = values.len() as f64;
    let alpha = 1.0 - level;
    let lo = ((alpha / 2.0) * b + 1e-9).floor() as usize;
    let hi = (((1.0 - alpha / 2.0) * b - 1e-9).ceil() as usize).saturating_sub(1);
    let last = values.len() - 1;
    (values[lo.min(last)], values[hi.min(last)])
}

/// Intervals for all four statistics from one shared set of resamples.
pub fn bootstrap_all(
    gold: &[u8],
    pred: &[u8],
    config: BootstrapConfig,
) -> Result<Vec<BootstrapCI>, StatsError> {
    config.check()?;
    let point = metrics(&confusion_counts(gold, pred)?)?;
    let samples: Vec<Metrics> = (0..config.resamples)
        .into_par_iter()
        .map(|b| resample(gold, pred, config.seed, b))
        .collect();
    Ok(Statistic::ALL
        .iter()
        .map(|&s| {
            let mut values: Vec<f64> = samples.iter().map(|m| s.of(m)).collect();
            let (lower, upper) = percentile_bounds(&mut values, config.level);
            BootstrapCI {
                statistic: s,
                point: s.of(&point),
                lower,
                upper,
                resamples: config.resamples,
                level: config.level,
                seed: config.seed,
            }
        })
        .collect())
}

pub fn bootstrap_ci(
    gold: &[u8],
    pred: &[u8],
    statistic: Statistic,
    config: BootstrapConfig,
) -> Result<BootstrapCI, StatsError> {
    let all = bootstrap_all(gold, pred, config)?;
    Ok(*all
        .iter()
        .find(|ci| ci.statistic == statistic)
        .expect("all statistics computed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_indices_for_1000() {
        let mut v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(percentile_bounds(&mut v, 0.95), (25.0, 974.0));
        let mut v: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(percentile_bounds(&mut v, 0.9), (0.0, 9.0));
    }

    #[test]
    fn degenerate_predictors() {
        let gold = [1, 0, 1, 1, 0, 0, 1];
        let ci = bootstrap_ci(&gold, &gold, Statistic::Accuracy, BootstrapConfig::new(7)).unwrap();
        assert_eq!((ci.lower, ci.point, ci.upper), (1.0, 1.0, 1.0));
        let wrong: Vec<u8> = gold.iter().map(|g| 1 - g).collect();
        let ci = bootstrap_ci(&gold, &wrong, Statistic::Accuracy, BootstrapConfig::new(7)).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.0, 0.0));
    }

    #[test]
    fn seeded_and_ordered() {
        let gold: Vec<u8> = (0..200).map(|i| (i % 3 == 0) as u8).collect();
        let pred: Vec<u8> = (0..200).map(|i| (i % 5 == 0) as u8).collect();
        let a = bootstrap_all(&gold, &pred, BootstrapConfig::new(42)).unwrap();
        let b = bootstrap_all(&gold, &pred, BootstrapConfig::new(42)).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_all(&gold, &pred, BootstrapConfig::new(43)).unwrap();
        assert_ne!(a, c);
        for ci in &a {
            assert!(ci.lower <= ci.upper);
        }
        assert!(bootstrap_all(&[], &[], BootstrapConfig::new(1)).is_err());
    }
}
