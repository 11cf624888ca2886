//! Command-line harness: episode generation, policy training, scenario
//! evaluation and dataset validation. Exit codes: 0 success, 1 configuration
//! error, 2 data error, 3 numerical failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use rlc_ekf::bench::config::{resolve_seed, BenchConfig, ScenarioOverrides};
use rlc_ekf::bench::{dataset, run_scenario, write_report_files};
use rlc_ekf::error::{Error, Result};
use rlc_ekf::rl::{
    select_policy_from, train_policies_from, EpisodeSource, TrainingLog,
};
use rlc_ekf::sim::derive_seed;

#[derive(Parser)]
#[command(
    name = "rlc-ekf",
    about = "Attitude estimation benchmarks for an RL-compensated extended Kalman filter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate simulated measurement episodes as CSV files.
    Simulate {
        /// JSON configuration file mirroring all flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of episodes to generate.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Train compensation policies, select the best by validation cost, and
    /// save it.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Where the selected policy and the training logs go.
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
        /// Output path for the selected policy (default <out-dir>/policy.rlc).
        #[arg(long, value_name = "FILE")]
        policy: Option<PathBuf>,
        /// Train on the first half of a recorded dataset instead of the
        /// simulator.
        #[arg(long, value_name = "CSV")]
        dataset: Option<PathBuf>,
    },
    /// Run a benchmark scenario and write aggregate reports.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario: 1, 2, 3 or real.
        #[arg(long)]
        scenario: Option<String>,
        /// Comma-separated subset of ekf, cf, gyro, rlc-ekf.
        #[arg(long, value_name = "LIST")]
        filters: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Policy file, required when rlc-ekf is evaluated.
        #[arg(long, value_name = "FILE")]
        policy: Option<PathBuf>,
        /// Dataset for the real scenario.
        #[arg(long, value_name = "CSV")]
        dataset: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Validate a dataset and print a summary.
    Ingest {
        /// Dataset to validate.
        path: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<BenchConfig> {
    match path {
        Some(p) => BenchConfig::load(p),
        None => Ok(BenchConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            runs,
            seed,
            out_dir,
        } => {
            let file = load_config(&config)?;
            let sim = file.sim_config()?;
            let episodes = runs.or(file.episodes).or(file.runs).unwrap_or(1);
            let seed = resolve_seed(seed, file.seed)?;
            let dir = out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&dir)?;
            for k in 0..episodes {
                let record = sim.generate(derive_seed(seed, k as u64))?;
                let path = dir.join(format!("episode_{k}.csv"));
                dataset::write_episode_csv(&record, &path)?;
                println!("wrote {} ({} frames)", path.display(), record.len());
            }
            Ok(())
        }
        Command::Train {
            config,
            seed,
            out_dir,
            policy,
            dataset: dataset_path,
        } => {
            let file = load_config(&config)?;
            let sim = file.sim_config()?;
            let params = sim.matched_ekf_params();
            let training = file.training.clone().unwrap_or_default();
            let seed = resolve_seed(seed, file.seed)?;
            let dir = out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&dir)?;

            let dataset_path = dataset_path.or(file.dataset.clone());
            let record;
            let train_half;
            let source = match &dataset_path {
                Some(path) => {
                    record = dataset::ingest_dataset(path)?;
                    let (head, _) = dataset::split_halves(&record);
                    train_half = head;
                    EpisodeSource::Windows {
                        record: &train_half,
                        window_len: file.window_len.unwrap_or(1000),
                    }
                }
                None => EpisodeSource::Sim(&sim),
            };

            println!(
                "training {} policies ({} phases x {} episodes, {} gradient steps each) ...",
                training.policy_count,
                training.phases,
                training.episodes_per_phase,
                training.grad_steps_per_phase
            );
            let trained = train_policies_from(&source, &params, &training, seed)?;
            let candidates: Vec<_> = trained.iter().map(|(p, _)| p.clone()).collect();
            let (best, scores) = select_policy_from(
                &candidates,
                &source,
                &params,
                training.validation_episodes,
                derive_seed(seed, 42),
            )?;
            for (i, s) in scores.iter().enumerate() {
                let mark = if i == best { " <- selected" } else { "" };
                println!("policy {i}: validation cost {s:.6}{mark}");
            }

            let policy_path = policy.unwrap_or_else(|| dir.join("policy.rlc"));
            candidates[best].save(&policy_path)?;
            println!("saved {}", policy_path.display());
            write_training_logs(&dir, &trained, &scores, best)?;
            Ok(())
        }
        Command::Evaluate {
            config,
            scenario,
            filters,
            runs,
            seed,
            policy,
            dataset,
            out_dir,
        } => {
            let file = load_config(&config)?;
            let overrides = ScenarioOverrides {
                scenario,
                filters: filters.map(|f| f.split(',').map(|s| s.trim().to_string()).collect()),
                runs,
                seed,
                policy,
                dataset,
            };
            let spec = file.scenario_spec(&overrides)?;
            let report = run_scenario(&spec, None)?;
            let dir = out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("out"));
            write_report_files(&report, &dir)?;
            println!(
                "{:<14} {:>9} {:>9} {:>9} {:>12} {:>12}",
                "filter", "yaw", "pitch", "roll", "conv (med s)", "total rmse"
            );
            for e in &report.entries {
                println!(
                    "{:<14} {:>9.4} {:>9.4} {:>9.4} {:>12.2} {:>12.4}",
                    e.label, e.rmse[0], e.rmse[1], e.rmse[2], e.median_convergence, e.mean_total_rmse
                );
            }
            println!("reports written to {}", dir.display());
            Ok(())
        }
        Command::Ingest { path } => {
            let record = dataset::ingest_dataset(&path)?;
            println!("{}: ok", path.display());
            println!("  frames:        {}", record.len());
            println!("  sample period: {:.6} s ({:.1} Hz)", record.dt, 1.0 / record.dt);
            println!("  duration:      {:.2} s", record.duration());
            println!(
                "  ground truth:  {}",
                if record.truth.is_some() { "present" } else { "absent" }
            );
            Ok(())
        }
    }
}

fn write_training_logs(
    dir: &std::path::Path,
    trained: &[(rlc_ekf::rl::CompensatorPolicy, TrainingLog)],
    scores: &[f64],
    best: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("training_log.csv"))
        .map_err(|e| Error::Data(e.to_string()))?;
    w.write_record(["policy", "episode", "mean_cost"])
        .map_err(|e| Error::Data(e.to_string()))?;
    for (i, (_, log)) in trained.iter().enumerate() {
        for (e, c) in log.episode_costs.iter().enumerate() {
            w.write_record(&[i.to_string(), e.to_string(), c.to_string()])
                .map_err(|e| Error::Data(e.to_string()))?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("selection.csv"))
        .map_err(|e| Error::Data(e.to_string()))?;
    w.write_record(["policy", "validation_cost", "selected"])
        .map_err(|e| Error::Data(e.to_string()))?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record(&[i.to_string(), s.to_string(), (i == best).to_string()])
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
