//! File-backed configuration for the command-line tool. Every flag has a
//! counterpart here; flags take precedence over the file.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bench::{Scenario, ScenarioSpec};
use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::rl::TrainingConfig;
use crate::sim::{AngularVelocityProfile, NoiseModel, ReferenceVectors, SimConfig};

/// Serializable angular-velocity profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileConfig {
    Zero,
    Constant {
        rate: [f64; 3],
    },
    Sinusoid {
        amplitude: [f64; 3],
        frequency_hz: [f64; 3],
        #[serde(default)]
        phase: [f64; 3],
    },
    PiecewiseConstant {
        segments: Vec<(f64, [f64; 3])>,
    },
}

impl ProfileConfig {
    pub fn to_profile(&self) -> AngularVelocityProfile {
        match self {
            Self::Zero => AngularVelocityProfile::Zero,
            Self::Constant { rate } => AngularVelocityProfile::Constant(Vector3::from(*rate)),
            Self::Sinusoid {
                amplitude,
                frequency_hz,
                phase,
            } => AngularVelocityProfile::Sinusoid {
                amplitude: Vector3::from(*amplitude),
                frequency_hz: Vector3::from(*frequency_hz),
                phase: Vector3::from(*phase),
            },
            Self::PiecewiseConstant { segments } => AngularVelocityProfile::PiecewiseConstant(
                segments.iter().map(|(t, w)| (*t, Vector3::from(*w))).collect(),
            ),
        }
    }
}

/// Everything the CLI can read from a JSON configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: Option<String>,
    pub filters: Option<Vec<String>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub policy: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    /// Episode count for the `simulate` subcommand.
    pub episodes: Option<usize>,

    pub sample_rate_hz: Option<f64>,
    pub duration_s: Option<f64>,
    /// Per-axis gyro noise variance ((rad/s)²).
    pub gyro_var: Option<f64>,
    pub accel_var: Option<f64>,
    pub mag_var: Option<f64>,
    pub mag_dip_deg: Option<f64>,
    pub gyro_bias: Option<[f64; 3]>,
    pub profile: Option<ProfileConfig>,

    pub ekf_r_multipliers: Option<Vec<f64>>,
    pub cf_beta: Option<f64>,
    pub cf_betas: Option<Vec<f64>>,
    pub convergence_threshold: Option<f64>,
    pub eval_window_frac: Option<f64>,
    /// Episode length (samples) for training on recorded logs.
    pub window_len: Option<usize>,

    pub training: Option<TrainingConfig>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let mut sim = SimConfig::default();
        if let Some(v) = self.sample_rate_hz {
            if !(v > 0.0) {
                return Err(Error::Config("sample rate must be positive".into()));
            }
            sim.sample_rate_hz = v;
        }
        if let Some(v) = self.duration_s {
            if !(v > 0.0) {
                return Err(Error::Config("duration must be positive".into()));
            }
            sim.duration_s = v;
        }
        let mut noise = NoiseModel::default();
        if let Some(v) = self.gyro_var {
            noise.gyro_cov = nalgebra::Matrix3::identity() * v;
        }
        if let Some(v) = self.accel_var {
            noise.accel_cov = nalgebra::Matrix3::identity() * v;
        }
        if let Some(v) = self.mag_var {
            noise.mag_cov = nalgebra::Matrix3::identity() * v;
        }
        if let Some(b) = self.gyro_bias {
            noise.gyro_bias = Vector3::from(b);
        }
        noise.validate()?;
        sim.noise = noise;
        if let Some(dip) = self.mag_dip_deg {
            sim.refs = ReferenceVectors::with_dip_angle(dip.to_radians());
        }
        if let Some(p) = &self.profile {
            sim.profile = p.to_profile();
        }
        sim.profile.validate(sim.max_rate)?;
        Ok(sim)
    }

    /// Assemble the scenario, applying any command-line overrides first.
    pub fn scenario_spec(&self, overrides: &ScenarioOverrides) -> Result<ScenarioSpec> {
        let scenario_name = overrides
            .scenario
            .clone()
            .or_else(|| self.scenario.clone())
            .unwrap_or_else(|| "1".to_string());
        let scenario = Scenario::parse(&scenario_name)?;
        let mut spec = ScenarioSpec::new(scenario);
        spec.sim = self.sim_config()?;

        let filters = overrides
            .filters
            .clone()
            .or_else(|| self.filters.clone())
            .unwrap_or_else(|| vec!["ekf".into(), "cf".into()]);
        spec.filters = filters
            .iter()
            .map(|f| FilterKind::parse(f))
            .collect::<Result<Vec<_>>>()?;

        if let Some(r) = overrides.runs.or(self.runs) {
            spec.runs = r;
        }
        spec.seed_base = resolve_seed(overrides.seed, self.seed)?;
        spec.policy_path = overrides.policy.clone().or_else(|| self.policy.clone());
        spec.dataset = overrides.dataset.clone().or_else(|| self.dataset.clone());
        if let Some(m) = &self.ekf_r_multipliers {
            spec.ekf_r_multipliers = m.clone();
        }
        if let Some(b) = self.cf_beta {
            spec.cf_beta = b;
        }
        if let Some(b) = &self.cf_betas {
            spec.cf_betas = b.clone();
        }
        if let Some(bias) = self.gyro_bias {
            spec.gyro_bias = Vector3::from(bias);
        }
        if let Some(t) = self.convergence_threshold {
            spec.convergence_threshold = t;
        }
        if let Some(f) = self.eval_window_frac {
            spec.eval_window_frac = f;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct ScenarioOverrides {
    pub scenario: Option<String>,
    pub filters: Option<Vec<String>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub policy: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
}

/// Seed precedence: the `RLC_EKF_SEED` environment variable beats the flag,
/// which beats the configuration file, which beats the default of 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Ok(text) = std::env::var("RLC_EKF_SEED") {
        return text
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("RLC_EKF_SEED: {e}")));
    }
    Ok(flag.or(file).unwrap_or(0))
}
