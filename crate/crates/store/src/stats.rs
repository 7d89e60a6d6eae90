use serde::{Deserialize, Serialize};

const BUCKETS: usize = 32;

/// Latency summary for one operation kind. Bucket `i` counts latencies in
/// `[2^(i-1), 2^i)` microseconds; bucket 0 counts zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub count: u64,
    pub failures: u64,
    pub total_us: u64,
    pub max_us: u64,
    pub histogram: Vec<u64>,
}

impl OpStats {
    pub fn record(&mut self, latency_us: u64) {
        if self.histogram.is_empty() {
            self.histogram = vec![0; BUCKETS];
        }
        self.count += 1;
        self.total_us += latency_us;
        self.max_us = self.max_us.max(latency_us);
        let bucket = (64 - latency_us.leading_zeros() as usize).min(BUCKETS - 1);
        self.histogram[bucket] += 1;
    }

    pub fn mean_us(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total_us as f64 / self.count as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreStats {
    pub get: OpStats,
    pub put: OpStats,
    pub ping: OpStats,
    /// Keys whose resolved read value differed from the oracle at completion.
    pub stale_reads: u64,
    pub retries: u64,
}
