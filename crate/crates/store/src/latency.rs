use rand::Rng;
use serde::{Deserialize, Serialize};

/// One-way message delay, in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatencyModel {
    Fixed { us: u64 },
    Uniform { min_us: u64, max_us: u64 },
}

impl LatencyModel {
    pub fn zero() -> Self {
        LatencyModel::Fixed { us: 0 }
    }

    /// Uniform on `[0, 2 * mean]`.
    pub fn uniform_with_mean_ms(mean_ms: f64) -> Self {
        let mean_us = (mean_ms * 1000.0).round().max(0.0) as u64;
        LatencyModel::Uniform { min_us: 0, max_us: 2 * mean_us }
    }

    pub fn mean_us(&self) -> f64 {
        match *self {
            LatencyModel::Fixed { us } => us as f64,
            LatencyModel::Uniform { min_us, max_us } => (min_us + max_us) as f64 / 2.0,
        }
    }

    pub fn max_us(&self) -> u64 {
        match *self {
            LatencyModel::Fixed { us } => us,
            LatencyModel::Uniform { max_us, .. } => max_us,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            LatencyModel::Fixed { us } => us,
            LatencyModel::Uniform { min_us, max_us } if min_us >= max_us => min_us,
            LatencyModel::Uniform { min_us, max_us } => rng.gen_range(min_us..=max_us),
        }
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::zero()
    }
}
