//! One-dimensional parameter sweeps sharing seeds across values.

use std::fmt;
use std::str::FromStr;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment_logged, ExperimentReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Clients,
    Latency,
    Quorum,
    Size,
}

impl FromStr for Dimension {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clients" => Ok(Dimension::Clients),
            "latency" => Ok(Dimension::Latency),
            "quorum" => Ok(Dimension::Quorum),
            "size" => Ok(Dimension::Size),
            _ => Err(HarnessError::Config(format!("unknown sweep dimension `{s}`"))),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Clients => "clients",
            Dimension::Latency => "latency",
            Dimension::Quorum => "quorum",
            Dimension::Size => "size",
        })
    }
}

fn parse<T: FromStr>(value: &str, dimension: Dimension) -> Result<T> {
    value.trim().parse().map_err(|_| HarnessError::Config(format!("bad {dimension} value `{value}`")))
}

/// `base` with `dimension` set to `value`, under an id naming the value.
pub fn with_value(base: &ExperimentConfig, dimension: Dimension, value: &str) -> Result<ExperimentConfig> {
    let mut config = base.clone();
    match dimension {
        Dimension::Clients => config.clients = parse(value, dimension)?,
        Dimension::Latency => config.latency_ms = parse(value, dimension)?,
        Dimension::Quorum => config.quorum = value.trim().parse()?,
        Dimension::Size => config.topology.nodes = parse(value, dimension)?,
    }
    config.id = format!("{}-{dimension}={}", base.id, value.trim());
    config.validate()?;
    Ok(config)
}

pub fn sweep(
    base: &ExperimentConfig,
    dimension: Dimension,
    values: &[String],
    mut events: Option<&mut dyn std::io::Write>,
) -> Result<Vec<ExperimentReport>> {
    if values.is_empty() {
        return Err(HarnessError::Config("a sweep needs at least one value".into()));
    }
    let configs = values.iter().map(|v| with_value(base, dimension, v)).collect::<Result<Vec<_>>>()?;
    configs
        .iter()
        .map(|c| run_experiment_logged(c, events.as_mut().map(|e| &mut **e as &mut dyn std::io::Write)))
        .collect()
}
