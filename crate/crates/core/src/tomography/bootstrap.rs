//! Nonparametric bootstrap over reconstructions.

use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MaxLikProblem;
use crate::error::{Error, Result};
use crate::fock::DensityOperator;

pub const MIN_RESAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSettings {
    pub resamples: usize,
    /// Central coverage of the percentile interval.
    pub confidence: f64,
    pub seed: u64,
    /// Largest tolerated fraction of failed resamples.
    pub max_failure_fraction: f64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            resamples: 100,
            confidence: 0.95,
            seed: 0,
            max_failure_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    /// Statistic of each successful resample, in resample order.
    pub values: Vec<f64>,
    pub failures: usize,
}

impl BootstrapSummary {
    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

/// Resamples the samples with replacement, reconstructs each resample
/// (warm-started from `warm_start`) and summarizes `statistic`. Resample `i`
/// draws from stream `i` of a generator seeded with `settings.seed`.
pub fn bootstrap<F>(
    problem: &MaxLikProblem,
    warm_start: Option<&DensityOperator>,
    settings: &BootstrapSettings,
    mut statistic: F,
) -> Result<BootstrapSummary>
where
    F: FnMut(&DensityOperator) -> f64,
{
    if settings.resamples < MIN_RESAMPLES {
        return Err(Error::Domain {
            what: "bootstrap resamples",
            value: settings.resamples as f64,
        });
    }
    if !(settings.confidence > 0.0 && settings.confidence < 1.0) {
        return Err(Error::Domain {
            what: "bootstrap confidence",
            value: settings.confidence,
        });
    }
    let cells = problem.sample_cells();
    let n = cells.len();
    let template = problem.counts();
    let mut values = Vec::with_capacity(settings.resamples);
    let mut failures = 0;
    for i in 0..settings.resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(i as u64);
        let mut counts = alloc::vec![0.0; template.len()];
        for _ in 0..n {
            counts[cells[rng.random_range(0..n)] as usize] += 1.0;
        }
        match problem.reconstruct_counts(&counts, warm_start) {
            Ok(result) => {
                let v = statistic(&result.rho_hat);
                if v.is_finite() {
                    values.push(v);
                } else {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    if failures as f64 > settings.max_failure_fraction * settings.resamples as f64
        || values.is_empty()
    {
        return Err(Error::BootstrapFailures {
            failed: failures,
            total: settings.resamples,
        });
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - settings.confidence);
    Ok(BootstrapSummary {
        mean,
        std: var.sqrt(),
        ci_low: percentile(&sorted, tail),
        ci_high: percentile(&sorted, 1.0 - tail),
        confidence: settings.confidence,
        values,
        failures,
    })
}
