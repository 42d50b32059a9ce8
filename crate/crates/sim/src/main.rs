use std::{
    collections::BTreeMap,
    path::{Path, PathBuf},
    process::ExitCode,
};

use clap::{Parser, Subcommand};
use rcmimo::{
    codebook::write_codebook,
    experiment::{failure_rate, run_experiment, RunOptions},
    output::{emit_csv, fmt_real, write_traces},
    ConfigError, ExperimentResult, ScenarioConfig,
};
use rcmimo_core::su::random_codebook;

/// Region-constrained MIMO precoding experiments.
#[derive(Parser)]
#[command(name = "rcmimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep in a config and write results.csv (and traces.csv) to
    /// the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Record per-trial wall time (makes the CSV non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Worst-case interference at random boundary points, summarized per
    /// method and sweep point on stdout.
    Probe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the full per-trial results here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random orthonormal codebook file.
    MakeCodebook {
        #[arg(long, default_value_t = 7)]
        bits: u32,
        #[arg(long, default_value_t = 36)]
        mt: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(ConfigError),
    Other(String),
    /// Results were written, but too many trials failed.
    FailureRate(f64, f64),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn other(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn load(path: &Path, trials: Option<usize>, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(t) = trials {
        if t == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()).into());
        }
        cfg.experiment.trials = t;
    }
    if let Some(s) = seed {
        cfg.experiment.master_seed = s;
    }
    Ok(cfg)
}

fn write_outputs(results: &[ExperimentResult], dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| other(format!("{}: {e}", dir.display())))?;
    emit_csv(results, &dir.join("results.csv")).map_err(other)?;
    if results.iter().any(|r| !r.rate_trace.is_empty()) {
        let path = dir.join("traces.csv");
        let file = std::fs::File::create(&path).map_err(|e| other(format!("{}: {e}", path.display())))?;
        write_traces(results, std::io::BufWriter::new(file)).map_err(|e| other(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn check_failures(cfg: &ScenarioConfig, results: &[ExperimentResult]) -> Result<(), Failure> {
    let rate = failure_rate(results);
    if rate > cfg.experiment.max_failure_rate {
        return Err(Failure::FailureRate(rate, cfg.experiment.max_failure_rate));
    }
    Ok(())
}

fn probe_summary(results: &[ExperimentResult]) {
    let mut groups: BTreeMap<(String, usize, usize, String, String), Vec<&ExperimentResult>> = BTreeMap::new();
    for r in results {
        let key = (r.method.name().to_owned(), r.k, r.samples, fmt_real(r.p_dbm), fmt_real(r.q_dbm));
        groups.entry(key).or_default().push(r);
    }
    println!("method,k,samples,p_dbm,q_dbm,trials,worst_probe_interference_dbm,exceed_fraction");
    for ((method, k, samples, p, q), rows) in groups {
        let q_dbm = rows[0].q_dbm;
        let probes: Vec<f64> = rows.iter().filter_map(|r| r.worst_probe_interference_dbm).collect();
        let worst = probes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exceed = probes.iter().filter(|&&v| v > q_dbm).count() as f64 / rows.len() as f64;
        println!("{method},{k},{samples},{p},{q},{},{},{}", rows.len(), fmt_real(worst), fmt_real(exceed));
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, trials, seed, threads, timing } => {
            let mut cfg = load(&config, trials, seed)?;
            cfg.experiment.timing |= timing;
            let results = run_experiment(&cfg, &RunOptions { threads }).map_err(other)?;
            write_outputs(&results, &out)?;
            check_failures(&cfg, &results)
        }
        Command::Probe { config, points, seed, trials, threads, out } => {
            if points == 0 {
                return Err(ConfigError::Invalid("--points must be at least 1".into()).into());
            }
            let mut cfg = load(&config, trials, None)?;
            cfg.experiment.probe_points = points;
            cfg.experiment.probe_seed = seed;
            let results = run_experiment(&cfg, &RunOptions { threads }).map_err(other)?;
            if let Some(dir) = out {
                write_outputs(&results, &dir)?;
            }
            probe_summary(&results);
            check_failures(&cfg, &results)
        }
        Command::MakeCodebook { bits, mt, m, seed, out } => {
            let cb = random_codebook(bits, mt, m, seed).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            write_codebook(&cb, &out).map_err(other)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::FailureRate(rate, max)) => {
            eprintln!("error: {:.1}% of trials failed (limit {:.1}%)", rate * 100.0, max * 100.0);
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
