use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kvstab_core::ProtocolInstance;
use kvstab_harness::{
    build_instance, build_topology, convergence_pattern, edge_list, render, run_experiment_logged, speedup, sweep,
    topology_hash, verify_instance, write_pattern_csv, write_report_csv, write_report_json, Dimension,
    ExperimentConfig, ExperimentReport, Generator, HarnessError, InitialMode, ProtocolChoice, Result, RunMode,
    TopologyConfig,
};
use kvstab_store::QuorumConfig;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "kvstab", version, about = "Run self-stabilizing programs over a quorum key-value store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration for a number of repetitions.
    Run {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one configuration per value of a parameter.
    Sweep {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// clients, latency, quorum or size.
        #[arg(long)]
        dimension: Dimension,
        /// Comma-separated values, such as `15,30,45` or `R1W1,R2W2`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Variant label (value) that speedups are computed against.
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sample the matched fraction over time.
    Pattern {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(long, default_value_t = 50.0)]
        interval_ms: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Exhaustively check stabilization properties of a small instance.
    Verify {
        #[arg(long, default_value = "token-ring:4")]
        protocol: ProtocolChoice,
        #[arg(long, default_value_t = 4)]
        nodes: usize,
        #[arg(long, default_value = "ring")]
        topology: Generator,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write a generated topology as an edge list.
    GenTopology {
        #[arg(long, default_value = "random-regular:4")]
        topology: Generator,
        #[arg(long, default_value_t = 1000)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags override the config file, which overrides the defaults.
#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    id: Option<String>,
    /// `matching` or `token-ring:K`.
    #[arg(long)]
    protocol: Option<ProtocolChoice>,
    #[arg(long)]
    nodes: Option<usize>,
    /// `ring`, `random-regular:D` or `gnp:P`.
    #[arg(long)]
    topology: Option<Generator>,
    #[arg(long)]
    topology_seed: Option<u64>,
    /// `no-match`, `random-match` or `perturbed-match[:FRACTION]`.
    #[arg(long)]
    initial: Option<InitialMode>,
    /// Such as `R1W1` or `N3R2W2`.
    #[arg(long)]
    quorum: Option<QuorumConfig>,
    #[arg(long, overrides_with = "no_lme")]
    lme: bool,
    #[arg(long, overrides_with = "lme")]
    no_lme: bool,
    #[arg(long)]
    clients: Option<usize>,
    #[arg(long)]
    latency_ms: Option<f64>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// `discrete-event` or `threaded`.
    #[arg(long)]
    mode: Option<RunMode>,
    #[arg(long)]
    max_time_s: Option<f64>,
    /// Run repetitions in parallel.
    #[arg(long)]
    parallel: bool,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_toml_str(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.id {
            c.id = v.clone();
        }
        if let Some(v) = self.protocol {
            c.protocol = v;
            if let ProtocolChoice::TokenRing { .. } = v {
                c.topology.generator = Generator::Ring;
            }
        }
        if let Some(v) = self.nodes {
            c.topology.nodes = v;
        }
        if let Some(v) = self.topology {
            c.topology.generator = v;
        }
        if let Some(v) = self.topology_seed {
            c.topology.seed = v;
        }
        if let Some(v) = self.initial {
            c.initial = v;
        }
        if let Some(v) = self.quorum {
            c.quorum = v;
        }
        if self.lme {
            c.lme = true;
        }
        if self.no_lme {
            c.lme = false;
        }
        if let Some(v) = self.clients {
            c.clients = v;
        }
        if let Some(v) = self.latency_ms {
            c.latency_ms = v;
        }
        if let Some(v) = self.reps {
            c.repetitions = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.max_time_s {
            c.max_time_s = v;
        }
        if self.parallel {
            c.parallel = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_reports(dir: &Path, reports: &[ExperimentReport]) -> Result<()> {
    write_report_csv(create(dir, "report.csv")?, reports)?;
    write_report_json(create(dir, "report.json")?, reports)?;
    Ok(())
}

fn print_summary(reports: &[ExperimentReport], baseline: Option<&ExperimentReport>) {
    println!(
        "{:<40} {:>9} {:>12} {:>10} {:>10} {:>8}",
        "experiment", "converged", "mean time s", "stutter", "changing", "speedup"
    );
    for r in reports {
        let s = &r.summary;
        let time = s.mean_convergence_time_s.map_or("-".to_string(), |t| format!("{t:.3}"));
        let up = baseline.and_then(|b| speedup(b, r)).map_or("-".to_string(), |x| format!("{x:.2}"));
        println!(
            "{:<40} {:>9} {:>12} {:>10.1} {:>10.1} {:>8}",
            r.config().id,
            format!("{}/{}", s.converged_runs, s.runs),
            time,
            s.mean_cvf_stuttering,
            s.mean_cvf_state_changing,
            up
        );
        if r.partial {
            println!("  (partial: some repetitions hit the time limit)");
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { experiment, out } => {
            let config = experiment.resolve()?;
            let mut events = create(&out, "events.log")?;
            let report = run_experiment_logged(&config, Some(&mut events))?;
            let reports = [report];
            write_reports(&out, &reports)?;
            print_summary(&reports, None);
        }
        Command::Sweep { experiment, dimension, values, baseline, out } => {
            let config = experiment.resolve()?;
            let mut events = create(&out, "events.log")?;
            let reports = sweep(&config, dimension, &values, Some(&mut events))?;
            write_reports(&out, &reports)?;
            let base = match baseline {
                Some(b) => {
                    let i = values
                        .iter()
                        .position(|v| v.trim() == b.trim())
                        .ok_or_else(|| HarnessError::Config(format!("baseline `{b}` is not among the sweep values")))?;
                    Some(&reports[i])
                }
                None => None,
            };
            print_summary(&reports, base);
        }
        Command::Pattern { experiment, interval_ms, out } => {
            let config = experiment.resolve()?;
            let report = convergence_pattern(&config, interval_ms)?;
            let reports = [report];
            write_pattern_csv(create(&out, "pattern.csv")?, &reports)?;
            write_reports(&out, &reports)?;
            print_summary(&reports, None);
        }
        Command::Verify { protocol, nodes, topology, seed, out } => {
            let (instance, label) = match protocol {
                ProtocolChoice::TokenRing { k } => {
                    (ProtocolInstance::token_ring(nodes, k)?, format!("token ring, {nodes} nodes, K={k}"))
                }
                ProtocolChoice::Matching => {
                    let config = ExperimentConfig {
                        protocol,
                        topology: TopologyConfig { generator: topology, nodes, seed },
                        clients: 1,
                        ..ExperimentConfig::default()
                    };
                    let instance = build_instance(&config)?;
                    (instance, format!("matching, {topology}, {nodes} nodes, seed {seed}"))
                }
            };
            let summary = verify_instance(&instance, &label)?;
            let text = render(&summary);
            let mut file = create(&out, "verify.txt")?;
            std::io::Write::write_all(&mut file, text.as_bytes())?;
            print!("{text}");
        }
        Command::GenTopology { topology, nodes, seed, out } => {
            let graph = build_topology(&TopologyConfig { generator: topology, nodes, seed })?;
            let text = format!("# {topology} seed {seed} sha256 {}\n{}", topology_hash(&graph), edge_list(&graph));
            match out {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
