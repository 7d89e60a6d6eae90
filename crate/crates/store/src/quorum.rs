use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StoreError};

pub const DEFAULT_TIMEOUT_MS: u64 = 500;
pub const DEFAULT_ATTEMPTS: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Consistency {
    Sequential,
    Eventual,
}

/// Replication factor `n`, read quorum `r`, write quorum `w`, and the
/// per-round timeout and number of rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuorumConfig {
    pub n: usize,
    pub r: usize,
    pub w: usize,
    pub timeout_ms: u64,
    pub attempts: u32,
}

impl QuorumConfig {
    pub fn new(n: usize, r: usize, w: usize) -> Result<Self> {
        QuorumConfig { n, r, w, timeout_ms: DEFAULT_TIMEOUT_MS, attempts: DEFAULT_ATTEMPTS }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |msg: String| Err(StoreError::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(1..=self.n).contains(&self.r) {
            return bad(format!("r={} not in 1..={}", self.r, self.n));
        }
        if !(1..=self.n).contains(&self.w) {
            return bad(format!("w={} not in 1..={}", self.w, self.n));
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive".into());
        }
        if self.attempts == 0 {
            return bad("attempts must be at least 1".into());
        }
        Ok(self)
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Self {
        self.timeout_ms = ms;
        self
    }

    pub fn with_attempts(mut self, attempts: u32) -> Self {
        self.attempts = attempts;
        self
    }

    pub fn timeout_us(&self) -> u64 {
        self.timeout_ms * 1000
    }

    pub fn classify(&self) -> Consistency {
        classify(self)
    }

    /// Short label such as `R1W1`.
    pub fn label(&self) -> String {
        format!("R{}W{}", self.r, self.w)
    }
}

pub fn classify(q: &QuorumConfig) -> Consistency {
    if q.r + q.w > q.n && 2 * q.w > q.n {
        Consistency::Sequential
    } else {
        Consistency::Eventual
    }
}

impl fmt::Display for QuorumConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}R{}W{}", self.n, self.r, self.w)
    }
}

/// Parses `N3R1W1`, or `R1W1` with three replicas.
impl FromStr for QuorumConfig {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let err = || StoreError::InvalidConfig(format!("cannot parse quorum `{s}`"));
        let rest = upper.strip_prefix('N');
        let (n, rest) = match rest {
            Some(rest) => {
                let end = rest.find('R').ok_or_else(err)?;
                (rest[..end].parse::<usize>().map_err(|_| err())?, &rest[end..])
            }
            None => (3, upper.as_str()),
        };
        let rest = rest.strip_prefix('R').ok_or_else(err)?;
        let end = rest.find('W').ok_or_else(err)?;
        let r = rest[..end].parse::<usize>().map_err(|_| err())?;
        let w = rest[end + 1..].parse::<usize>().map_err(|_| err())?;
        QuorumConfig::new(n, r, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        assert_eq!(QuorumConfig::new(3, 2, 2).unwrap().classify(), Consistency::Sequential);
        assert_eq!(QuorumConfig::new(3, 1, 1).unwrap().classify(), Consistency::Eventual);
        assert_eq!(QuorumConfig::new(3, 3, 1).unwrap().classify(), Consistency::Eventual);
        assert_eq!(QuorumConfig::new(3, 1, 3).unwrap().classify(), Consistency::Sequential);
    }

    #[test]
    fn parse_and_display() {
        let q: QuorumConfig = "N3R1W1".parse().unwrap();
        assert_eq!((q.n, q.r, q.w), (3, 1, 1));
        assert_eq!(q.to_string(), "N3R1W1");
        let q: QuorumConfig = "r2w2".parse().unwrap();
        assert_eq!((q.n, q.r, q.w), (3, 2, 2));
        assert!("N3R4W1".parse::<QuorumConfig>().is_err());
        assert!("N3R1".parse::<QuorumConfig>().is_err());
    }

    #[test]
    fn defaults() {
        let q = QuorumConfig::new(3, 1, 1).unwrap();
        assert_eq!(q.timeout_ms, 500);
        assert_eq!(q.attempts, 2);
        assert!(q.with_attempts(0).validated().is_err());
    }
}
