use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Resamples per RNG stream. Stream `c` always produces resamples
/// `c·CHUNK .. (c+1)·CHUNK`, so results do not depend on thread count.
const CHUNK: usize = 512;

/// Percentile bootstrap interval for a sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    pub seed: u64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn bootstrap_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<BootstrapCI, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty("bootstrap sample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Level(level));
    }
    if resamples == 0 {
        return Err(StatsError::Resamples);
    }
    check_finite(values)?;
    let n = values.len();
    let chunks = resamples.div_ceil(CHUNK);
    let mut means: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(resamples - c * CHUNK);
            (0..count)
                .map(|_| {
                    let mut sum = 0.0;
                    for _ in 0..n {
                        sum += values[rng.random_range(0..n)];
                    }
                    sum / n as f64
                })
                .collect::<Vec<_>>()
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok(BootstrapCI {
        mean: mean(values),
        lo: quantile(&means, alpha / 2.0),
        hi: quantile(&means, 1.0 - alpha / 2.0),
        resamples,
        seed,
    })
}
