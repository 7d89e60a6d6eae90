//! Experiment configuration, loadable from TOML or assembled from CLI flags.

use std::fmt;
use std::str::FromStr;

use kvstab_engine::{DetectorConfig, EngineConfig, StopCondition};
use kvstab_store::{LatencyModel, QuorumConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProtocolChoice {
    Matching,
    /// Dijkstra's ring over all topology nodes with `k` states per node.
    TokenRing {
        k: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    Ring,
    RandomRegular { degree: usize },
    Gnp { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    #[serde(flatten)]
    pub generator: Generator,
    pub nodes: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialMode {
    /// Every pointer null and every flag false.
    NoMatch,
    /// Every variable uniform over its domain.
    RandomMatch,
    /// A legitimate state with a `fraction` of the nodes randomized.
    PerturbedMatch { fraction: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    DiscreteEvent,
    Threaded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub id: String,
    pub protocol: ProtocolChoice,
    pub topology: TopologyConfig,
    pub initial: InitialMode,
    #[serde(with = "quorum_label")]
    pub quorum: QuorumConfig,
    pub lme: bool,
    pub clients: usize,
    /// Mean one-way delay; delays are uniform on `[0, 2 * latency_ms]`.
    pub latency_ms: f64,
    pub repetitions: u32,
    pub seed: u64,
    pub mode: RunMode,
    pub max_time_s: f64,
    /// Matched-fraction sampling period, for convergence patterns.
    pub sample_interval_ms: Option<f64>,
    /// Run repetitions on separate threads. Output order is unaffected.
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            id: "experiment".into(),
            protocol: ProtocolChoice::Matching,
            topology: TopologyConfig { generator: Generator::RandomRegular { degree: 4 }, nodes: 1000, seed: 0 },
            initial: InitialMode::RandomMatch,
            quorum: QuorumConfig::new(3, 1, 1).expect("valid default quorum"),
            lme: true,
            clients: 15,
            latency_ms: 1.0,
            repetitions: 3,
            seed: 0,
            mode: RunMode::DiscreteEvent,
            max_time_s: 3600.0,
            sample_interval_ms: None,
            parallel: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if let InitialMode::PerturbedMatch { fraction } = self.initial {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return bad(format!("perturbed fraction {fraction} not in (0, 1]"));
            }
        }
        if let ProtocolChoice::TokenRing { .. } = self.protocol {
            if self.initial == InitialMode::NoMatch {
                return bad("no-match applies to matching only".into());
            }
            if self.topology.generator != Generator::Ring {
                return bad("the token ring runs on a ring topology".into());
            }
        }
        let n = self.topology.nodes;
        if n < 2 {
            return bad(format!("{n} nodes; at least 2 are needed"));
        }
        match self.topology.generator {
            Generator::RandomRegular { degree } if degree >= n || (n * degree) % 2 == 1 => {
                return bad(format!("no {degree}-regular graph on {n} nodes"));
            }
            Generator::Gnp { p } if !(0.0..=1.0).contains(&p) => return bad(format!("edge probability {p}")),
            _ => {}
        }
        if self.clients == 0 || self.clients > n {
            return bad(format!("{} clients for {n} nodes", self.clients));
        }
        if !(self.latency_ms >= 0.0 && self.latency_ms.is_finite()) {
            return bad(format!("latency {} ms", self.latency_ms));
        }
        if !(self.max_time_s > 0.0) {
            return bad(format!("time limit {} s", self.max_time_s));
        }
        if let Some(ms) = self.sample_interval_ms {
            if !(ms > 0.0) {
                return bad(format!("sample interval {ms} ms"));
            }
        }
        self.quorum.validated()?;
        Ok(())
    }

    pub fn latency(&self) -> LatencyModel {
        LatencyModel::uniform_with_mean_ms(self.latency_ms)
    }

    /// Engine settings for one repetition. Silent protocols stop on the
    /// detector; the token ring, which never goes quiet, stops on entering
    /// its invariant.
    pub fn engine_config(&self, seed: u64) -> EngineConfig {
        let latency = self.latency();
        let mut config = EngineConfig::new(self.quorum, self.lme, self.clients, latency, seed);
        config.max_time_us = (self.max_time_s * 1e6) as u64;
        config.sample_interval_us = self.sample_interval_ms.map(|ms| ((ms * 1000.0) as u64).max(1));
        if let ProtocolChoice::TokenRing { .. } = self.protocol {
            config.detector = None;
            config.stop = StopCondition::Invariant;
        } else {
            config.detector = Some(DetectorConfig::for_latency(&latency));
        }
        config
    }

    /// Short description of the variant, such as `R1W1-lme`.
    pub fn variant_label(&self) -> String {
        format!("{}-{}", self.quorum.label(), if self.lme { "lme" } else { "nolme" })
    }
}

mod quorum_label {
    use kvstab_store::QuorumConfig;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &QuorumConfig, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(q)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<QuorumConfig, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn parse_suffix<T: FromStr>(text: &str, what: &str) -> Result<T> {
    text.parse().map_err(|_| HarnessError::Config(format!("cannot parse {what} `{text}`")))
}

/// `matching` or `token-ring:K`.
impl FromStr for ProtocolChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "matching" => Ok(ProtocolChoice::Matching),
            Some(("token-ring", k)) => Ok(ProtocolChoice::TokenRing { k: parse_suffix(k, "K")? }),
            _ => Err(HarnessError::Config(format!("unknown protocol `{s}`"))),
        }
    }
}

impl fmt::Display for ProtocolChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolChoice::Matching => f.write_str("matching"),
            ProtocolChoice::TokenRing { k } => write!(f, "token-ring:{k}"),
        }
    }
}

/// `ring`, `random-regular:D` or `gnp:P`.
impl FromStr for Generator {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "ring" => Ok(Generator::Ring),
            None if s == "random-regular" => Ok(Generator::RandomRegular { degree: 4 }),
            Some(("random-regular", d)) => Ok(Generator::RandomRegular { degree: parse_suffix(d, "degree")? }),
            Some(("gnp", p)) => Ok(Generator::Gnp { p: parse_suffix(p, "edge probability")? }),
            _ => Err(HarnessError::Config(format!("unknown topology `{s}`"))),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Ring => f.write_str("ring"),
            Generator::RandomRegular { degree } => write!(f, "random-regular:{degree}"),
            Generator::Gnp { p } => write!(f, "gnp:{p}"),
        }
    }
}

/// `no-match`, `random-match` or `perturbed-match[:FRACTION]`.
impl FromStr for InitialMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "no-match" => Ok(InitialMode::NoMatch),
            None if s == "random-match" => Ok(InitialMode::RandomMatch),
            None if s == "perturbed-match" => Ok(InitialMode::PerturbedMatch { fraction: 0.1 }),
            Some(("perturbed-match", f)) => Ok(InitialMode::PerturbedMatch { fraction: parse_suffix(f, "fraction")? }),
            _ => Err(HarnessError::Config(format!("unknown initial mode `{s}`"))),
        }
    }
}

impl fmt::Display for InitialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialMode::NoMatch => f.write_str("no-match"),
            InitialMode::RandomMatch => f.write_str("random-match"),
            InitialMode::PerturbedMatch { fraction } => write!(f, "perturbed-match:{fraction}"),
        }
    }
}

impl FromStr for RunMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete-event" | "des" => Ok(RunMode::DiscreteEvent),
            "threaded" => Ok(RunMode::Threaded),
            _ => Err(HarnessError::Config(format!("unknown mode `{s}`"))),
        }
    }
}
