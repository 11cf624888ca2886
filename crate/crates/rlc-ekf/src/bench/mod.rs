//! Scenario benchmark harness: runs a set of filters over identical
//! per-run episodes, aggregates Euler-angle error bands, RMSE and
//! convergence times across runs, and writes plot-ready CSV reports.

pub mod config;
pub mod dataset;

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ekf::EkfParams;
use crate::error::{Error, Result};
use crate::filters::{
    run_estimator, AttitudeEstimator, CfFilter, EkfFilter, FilterKind, GyroFilter, RlcEkfFilter,
};
use crate::metrics::{attitude_error_angle, convergence_time, euler_error, median_of_optional};
use crate::rl::CompensatorPolicy;
use crate::rotation::Quaternion;
use crate::sim::{derive_seed, sample_initial_quaternion, EpisodeRecord, SimConfig};

/// The evaluation scenarios: random initial estimates, mis-specified filter
/// gains, a gyro bias absent from the filter's noise model, and real logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    One,
    Two,
    Three,
    Real,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "one" => Ok(Self::One),
            "2" | "two" => Ok(Self::Two),
            "3" | "three" => Ok(Self::Three),
            "real" => Ok(Self::Real),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected 1, 2, 3 or real)"
            ))),
        }
    }
}

/// Full description of one benchmark invocation.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub filters: Vec<FilterKind>,
    pub runs: usize,
    pub seed_base: u64,
    pub sim: SimConfig,
    /// Measurement-covariance multipliers swept in scenario 2.
    pub ekf_r_multipliers: Vec<f64>,
    /// Complementary-filter gain outside scenario 2.
    pub cf_beta: f64,
    /// Gains swept in scenario 2.
    pub cf_betas: Vec<f64>,
    /// Constant gyro bias injected into the simulated measurements in
    /// scenario 3 (the filters keep their nominal noise model).
    pub gyro_bias: Vector3<f64>,
    pub policy_path: Option<PathBuf>,
    /// Dataset for the real scenario.
    pub dataset: Option<PathBuf>,
    /// Override for the filters' initial covariance (scalar times identity).
    /// The gain-sensitivity scenario uses a confident value so the transient
    /// gain is covariance-limited by the assumed measurement noise rather
    /// than by the initialization.
    pub initial_cov: Option<f64>,
    /// Total attitude error threshold defining convergence.
    pub convergence_threshold: f64,
    /// Start of the RMSE evaluation window as a fraction of the episode.
    pub eval_window_frac: f64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            filters: vec![FilterKind::Ekf, FilterKind::Cf],
            runs: 50,
            seed_base: 0,
            sim: SimConfig::default(),
            ekf_r_multipliers: vec![1.0, 10.0, 100.0],
            cf_beta: 0.041,
            cf_betas: vec![0.041, 0.41, 4.1],
            gyro_bias: Vector3::new(0.02, 0.02, 0.02),
            policy_path: None,
            dataset: None,
            initial_cov: match scenario {
                Scenario::Two => Some(0.01),
                _ => None,
            },
            convergence_threshold: 0.1,
            eval_window_frac: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("run count must be at least 1".into()));
        }
        if !(self.eval_window_frac >= 0.0 && self.eval_window_frac < 1.0) {
            return Err(Error::Config("evaluation window fraction must lie in [0, 1)".into()));
        }
        if self.scenario == Scenario::Real && self.dataset.is_none() {
            return Err(Error::Config("the real scenario needs a dataset path".into()));
        }
        Ok(())
    }
}

/// One concrete filter configuration inside a report.
#[derive(Debug, Clone)]
struct FilterVariant {
    label: String,
    kind: FilterKind,
    r_scale: f64,
    beta: f64,
}

/// Aggregated results for one filter variant.
#[derive(Debug, Clone)]
pub struct FilterReport {
    pub label: String,
    pub kind: FilterKind,
    /// Mean signed Euler error (yaw, pitch, roll) per time step across runs.
    pub mean_err: Vec<Vector3<f64>>,
    /// Standard deviation bands matching `mean_err`.
    pub std_err: Vec<Vector3<f64>>,
    /// Per-run per-angle RMSE over the evaluation window.
    pub per_run_rmse: Vec<Vector3<f64>>,
    /// Mean of `per_run_rmse` across runs.
    pub rmse: Vector3<f64>,
    /// Per-run convergence time (None = never settled).
    pub convergence_times: Vec<Option<f64>>,
    pub median_convergence: f64,
    /// Per-run total-attitude-angle RMSE over the evaluation window.
    pub per_run_total_rmse: Vec<f64>,
    pub mean_total_rmse: f64,
    /// Per-run signed Euler error series, [run][time].
    pub per_run_errors: Vec<Vec<Vector3<f64>>>,
}

/// Results of one scenario invocation.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub time: Vec<f64>,
    pub runs: usize,
    pub entries: Vec<FilterReport>,
}

impl RunReport {
    pub fn get(&self, label: &str) -> Option<&FilterReport> {
        self.entries.iter().find(|e| e.label == label)
    }
}

fn format_multiplier(m: f64) -> String {
    if (m - m.round()).abs() < 1e-12 {
        format!("{}", m.round() as i64)
    } else {
        format!("{m}")
    }
}

fn build_variants(spec: &ScenarioSpec) -> Vec<FilterVariant> {
    let mut variants = Vec::new();
    for kind in &spec.filters {
        match (spec.scenario, kind) {
            (Scenario::Two, FilterKind::Ekf | FilterKind::RlcEkf) => {
                for &m in &spec.ekf_r_multipliers {
                    variants.push(FilterVariant {
                        label: format!("{}_x{}", kind.label(), format_multiplier(m)),
                        kind: *kind,
                        r_scale: m,
                        beta: spec.cf_beta,
                    });
                }
            }
            (Scenario::Two, FilterKind::Cf) => {
                for &b in &spec.cf_betas {
                    variants.push(FilterVariant {
                        label: format!("CF_b{b}"),
                        kind: *kind,
                        r_scale: 1.0,
                        beta: b,
                    });
                }
            }
            _ => variants.push(FilterVariant {
                label: kind.label().to_string(),
                kind: *kind,
                r_scale: 1.0,
                beta: spec.cf_beta,
            }),
        }
    }
    variants
}

fn build_filter(
    variant: &FilterVariant,
    q0: Quaternion,
    base_params: &EkfParams,
    initial_cov: Option<f64>,
    policy: Option<&CompensatorPolicy>,
) -> Result<Box<dyn AttitudeEstimator>> {
    let mut params = EkfParams {
        accel_cov_scale: variant.r_scale,
        mag_cov_scale: variant.r_scale,
        ..base_params.clone()
    };
    if let Some(scale) = initial_cov {
        params.initial_cov = nalgebra::Matrix4::identity() * scale;
    }
    Ok(match variant.kind {
        FilterKind::Ekf => Box::new(EkfFilter::new(q0, params)),
        FilterKind::Cf => Box::new(CfFilter::new(q0, variant.beta, params)),
        FilterKind::Gyro => Box::new(GyroFilter::new(q0)),
        FilterKind::RlcEkf => {
            let policy = policy.ok_or_else(|| {
                Error::Config("RLC-EKF requested but no policy available".into())
            })?;
            Box::new(RlcEkfFilter::new(q0, params, policy.clone()))
        }
    })
}

/// Execute a scenario. `policy` overrides the spec's policy file; when absent
/// and RLC-EKF is requested, the policy is loaded from `spec.policy_path`.
pub fn run_scenario(spec: &ScenarioSpec, policy: Option<&CompensatorPolicy>) -> Result<RunReport> {
    spec.validate()?;
    let loaded_policy = match (policy, &spec.policy_path) {
        (Some(_), _) => None,
        (None, Some(path)) if spec.filters.contains(&FilterKind::RlcEkf) => {
            Some(CompensatorPolicy::load(path)?)
        }
        (None, None) if spec.filters.contains(&FilterKind::RlcEkf) => {
            return Err(Error::Config(
                "RLC-EKF requested but no policy file supplied".into(),
            ));
        }
        _ => None,
    };
    let policy = policy.or(loaded_policy.as_ref());

    // Scenario 3 biases the simulated measurements only; the filters keep the
    // nominal noise model.
    let mut episode_sim = spec.sim.clone();
    if spec.scenario == Scenario::Three {
        episode_sim.noise.gyro_bias = spec.gyro_bias;
    }
    let base_params = spec.sim.matched_ekf_params();

    let real_eval = if spec.scenario == Scenario::Real {
        let record = dataset::ingest_dataset(spec.dataset.as_ref().unwrap())?;
        let (_, eval) = dataset::split_halves(&record);
        if eval.truth.is_none() {
            return Err(Error::Data(
                "real-data evaluation needs ground-truth columns".into(),
            ));
        }
        Some(eval)
    } else {
        None
    };

    let variants = build_variants(spec);
    let mut per_variant_errors: Vec<Vec<Vec<Vector3<f64>>>> =
        vec![Vec::with_capacity(spec.runs); variants.len()];
    let mut per_variant_conv: Vec<Vec<Option<f64>>> = vec![Vec::new(); variants.len()];
    let mut per_variant_rmse: Vec<Vec<Vector3<f64>>> = vec![Vec::new(); variants.len()];
    let mut per_variant_total: Vec<Vec<f64>> = vec![Vec::new(); variants.len()];
    let mut time: Vec<f64> = Vec::new();

    for run in 0..spec.runs {
        let run_seed = derive_seed(spec.seed_base, run as u64);
        let episode: EpisodeRecord = match &real_eval {
            Some(eval) => eval.clone(),
            None => episode_sim.generate(run_seed)?,
        };
        let truth = episode
            .truth
            .as_ref()
            .ok_or_else(|| Error::Data("benchmark episodes need ground truth".into()))?
            .clone();
        if time.is_empty() {
            time = episode.frames.iter().map(|f| f.t).collect();
        }
        let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, 11));
        let q0_est = sample_initial_quaternion(&mut init_rng);

        let window_start = (spec.eval_window_frac * episode.frames.len() as f64) as usize;
        for (vi, variant) in variants.iter().enumerate() {
            let mut filter = build_filter(variant, q0_est, &base_params, spec.initial_cov, policy)?;
            let estimates = run_estimator(filter.as_mut(), &episode)?;
            let errors: Vec<Vector3<f64>> = truth
                .iter()
                .zip(&estimates)
                .map(|(t, e)| euler_error(t, e))
                .collect();
            let total: Vec<f64> = truth
                .iter()
                .zip(&estimates)
                .map(|(t, e)| attitude_error_angle(t, e))
                .collect();
            per_variant_conv[vi].push(convergence_time(
                &time,
                &total,
                spec.convergence_threshold,
            ));
            per_variant_rmse[vi].push(crate::metrics::rmse(&errors[window_start..]));
            let steady = &total[window_start..];
            let total_rmse = (steady.iter().map(|e| e * e).sum::<f64>()
                / steady.len().max(1) as f64)
                .sqrt();
            per_variant_total[vi].push(total_rmse);
            per_variant_errors[vi].push(errors);
        }
    }

    let entries = variants
        .iter()
        .enumerate()
        .map(|(vi, variant)| {
            let errors = &per_variant_errors[vi];
            let steps = time.len();
            let n = errors.len() as f64;
            let mut mean_err = vec![Vector3::zeros(); steps];
            for run in errors {
                for (m, e) in mean_err.iter_mut().zip(run) {
                    *m += e;
                }
            }
            for m in mean_err.iter_mut() {
                *m /= n;
            }
            let mut std_err = vec![Vector3::zeros(); steps];
            if errors.len() > 1 {
                for run in errors {
                    for ((s, e), m) in std_err.iter_mut().zip(run).zip(&mean_err) {
                        let d = e - m;
                        *s += d.component_mul(&d);
                    }
                }
                for s in std_err.iter_mut() {
                    *s = (*s / (n - 1.0)).map(f64::sqrt);
                }
            }
            let rmse_mean = per_variant_rmse[vi]
                .iter()
                .fold(Vector3::zeros(), |acc: Vector3<f64>, r| acc + r)
                / n;
            let mean_total =
                per_variant_total[vi].iter().sum::<f64>() / per_variant_total[vi].len() as f64;
            FilterReport {
                label: variant.label.clone(),
                kind: variant.kind,
                mean_err,
                std_err,
                per_run_rmse: per_variant_rmse[vi].clone(),
                rmse: rmse_mean,
                convergence_times: per_variant_conv[vi].clone(),
                median_convergence: median_of_optional(&per_variant_conv[vi]),
                per_run_total_rmse: per_variant_total[vi].clone(),
                mean_total_rmse: mean_total,
                per_run_errors: errors.clone(),
            }
        })
        .collect();

    Ok(RunReport {
        time,
        runs: spec.runs,
        entries,
    })
}

const ANGLES: [&str; 3] = ["yaw", "pitch", "roll"];

/// Write `report.csv`, `rmse.csv`, per-run series under `runs/`, and a small
/// plotting script into `out_dir`.
pub fn write_report_files(report: &RunReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir.join("runs"))?;

    let mut w = csv::Writer::from_path(out_dir.join("report.csv"))
        .map_err(|e| Error::Data(e.to_string()))?;
    let mut header = vec!["t".to_string()];
    for e in &report.entries {
        for angle in ANGLES {
            header.push(format!("{}_{}_mean", e.label, angle));
            header.push(format!("{}_{}_std", e.label, angle));
        }
    }
    w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
    for (i, t) in report.time.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for e in &report.entries {
            for a in 0..3 {
                row.push(e.mean_err[i][a].to_string());
                row.push(e.std_err[i][a].to_string());
            }
        }
        w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("rmse.csv"))
        .map_err(|e| Error::Data(e.to_string()))?;
    w.write_record([
        "filter",
        "yaw_rmse",
        "pitch_rmse",
        "roll_rmse",
        "median_convergence_s",
        "mean_total_rmse",
    ])
    .map_err(|e| Error::Data(e.to_string()))?;
    for e in &report.entries {
        w.write_record(&[
            e.label.clone(),
            e.rmse[0].to_string(),
            e.rmse[1].to_string(),
            e.rmse[2].to_string(),
            e.median_convergence.to_string(),
            e.mean_total_rmse.to_string(),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;

    for run in 0..report.runs {
        let mut w = csv::Writer::from_path(out_dir.join(format!("runs/run_{run}.csv")))
            .map_err(|e| Error::Data(e.to_string()))?;
        let mut header = vec!["t".to_string()];
        for e in &report.entries {
            for angle in ANGLES {
                header.push(format!("{}_{}_err", e.label, angle));
            }
        }
        w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
        for (i, t) in report.time.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for e in &report.entries {
                for a in 0..3 {
                    row.push(e.per_run_errors[run][i][a].to_string());
                }
            }
            w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush()?;
    }

    std::fs::write(out_dir.join("plot_report.py"), PLOT_SCRIPT)?;
    Ok(())
}

/// Independent aggregation pass: re-read the per-run CSV files, recompute the
/// mean/std bands, and compare with the in-memory report.
pub fn verify_report_files(report: &RunReport, out_dir: &Path) -> Result<()> {
    let steps = report.time.len();
    let cols = report.entries.len() * 3;
    let mut sums = vec![vec![0.0_f64; cols]; steps];
    let mut vals: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); cols]; steps];
    for run in 0..report.runs {
        let path = out_dir.join(format!("runs/run_{run}.csv"));
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::Data(e.to_string()))?;
        for (i, row) in r.records().enumerate() {
            let row = row.map_err(|e| Error::Data(e.to_string()))?;
            for c in 0..cols {
                let v: f64 = row[c + 1]
                    .parse()
                    .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
                sums[i][c] += v;
                vals[i][c].push(v);
            }
        }
    }
    let n = report.runs as f64;
    for (i, row) in sums.iter().enumerate() {
        for (c, sum) in row.iter().enumerate() {
            let (entry, angle) = (c / 3, c % 3);
            let mean = sum / n;
            let expect = report.entries[entry].mean_err[i][angle];
            if (mean - expect).abs() > 1e-12 {
                return Err(Error::Data(format!(
                    "mean mismatch at step {i} column {c}: {mean} vs {expect}"
                )));
            }
            if report.runs > 1 {
                let var = vals[i][c]
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    / (n - 1.0);
                let expect_std = report.entries[entry].std_err[i][angle];
                if (var.sqrt() - expect_std).abs() > 1e-12 {
                    return Err(Error::Data(format!(
                        "std mismatch at step {i} column {c}: {} vs {expect_std}",
                        var.sqrt()
                    )));
                }
            }
        }
    }
    Ok(())
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot the aggregate error bands produced next to this script.

Usage: python3 plot_report.py [report.csv]
"""
import csv
import sys

try:
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit("matplotlib is required to plot; the CSV files are self-contained otherwise")

path = sys.argv[1] if len(sys.argv) > 1 else "report.csv"
with open(path) as f:
    rows = list(csv.reader(f))
header, data = rows[0], rows[1:]
t = [float(r[0]) for r in data]
series = {h: [float(r[i]) for r in data] for i, h in enumerate(header) if i > 0}
labels = sorted({h.rsplit("_", 2)[0] for h in series})
angles = ["yaw", "pitch", "roll"]

fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
for ax, angle in zip(axes, angles):
    for label in labels:
        mean = series[f"{label}_{angle}_mean"]
        std = series[f"{label}_{angle}_std"]
        ax.plot(t, mean, label=label)
        ax.fill_between(t, [m - s for m, s in zip(mean, std)],
                        [m + s for m, s in zip(mean, std)], alpha=0.2)
    ax.set_ylabel(f"{angle} error [rad]")
axes[0].legend()
axes[-1].set_xlabel("time [s]")
fig.tight_layout()
fig.savefig("report.png", dpi=150)
print("wrote report.png")
"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(scenario: Scenario) -> ScenarioSpec {
        ScenarioSpec {
            runs: 3,
            sim: SimConfig {
                duration_s: 2.0,
                ..SimConfig::default()
            },
            ..ScenarioSpec::new(scenario)
        }
    }

    #[test]
    fn single_run_fixed_seed_is_reproducible() {
        let mut spec = small_spec(Scenario::One);
        spec.runs = 1;
        spec.seed_base = 77;
        let a = run_scenario(&spec, None).unwrap();
        let b = run_scenario(&spec, None).unwrap();
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            assert_eq!(ea.rmse, eb.rmse);
            assert_eq!(ea.convergence_times, eb.convergence_times);
            for (ra, rb) in ea.per_run_errors.iter().zip(&eb.per_run_errors) {
                for (va, vb) in ra.iter().zip(rb) {
                    assert_eq!(va.map(f64::to_bits), vb.map(f64::to_bits));
                }
            }
        }
    }

    #[test]
    fn scenario_three_with_zero_bias_reduces_to_scenario_one() {
        let mut s1 = small_spec(Scenario::One);
        s1.seed_base = 5;
        let mut s3 = small_spec(Scenario::Three);
        s3.seed_base = 5;
        s3.gyro_bias = Vector3::zeros();
        let r1 = run_scenario(&s1, None).unwrap();
        let r3 = run_scenario(&s3, None).unwrap();
        for (e1, e3) in r1.entries.iter().zip(&r3.entries) {
            assert_eq!(e1.rmse, e3.rmse);
            assert_eq!(e1.per_run_total_rmse, e3.per_run_total_rmse);
        }
    }

    #[test]
    fn scenario_two_builds_swept_variants() {
        let mut spec = small_spec(Scenario::Two);
        spec.runs = 1;
        spec.filters = vec![FilterKind::Ekf, FilterKind::Cf];
        let report = run_scenario(&spec, None).unwrap();
        let labels: Vec<&str> = report.entries.iter().map(|e| e.label.as_str()).collect();
        assert!(labels.contains(&"EKF_x1"));
        assert!(labels.contains(&"EKF_x100"));
        assert!(labels.contains(&"CF_b0.041"));
        assert!(labels.contains(&"CF_b4.1"));
    }

    #[test]
    fn rlc_without_policy_is_a_config_error() {
        let mut spec = small_spec(Scenario::One);
        spec.filters = vec![FilterKind::RlcEkf];
        assert!(matches!(run_scenario(&spec, None), Err(Error::Config(_))));
    }

    #[test]
    fn report_files_roundtrip_and_verify() {
        let mut spec = small_spec(Scenario::One);
        spec.runs = 3;
        spec.filters = vec![FilterKind::Ekf, FilterKind::Gyro];
        let report = run_scenario(&spec, None).unwrap();
        let dir = std::env::temp_dir().join(format!("rlc_ekf_report_{}", std::process::id()));
        write_report_files(&report, &dir).unwrap();
        verify_report_files(&report, &dir).unwrap();
        assert!(dir.join("report.csv").exists());
        assert!(dir.join("rmse.csv").exists());
        assert!(dir.join("runs/run_2.csv").exists());
        assert!(dir.join("plot_report.py").exists());
        std::fs::remove_dir_all(dir).ok();
    }
}
