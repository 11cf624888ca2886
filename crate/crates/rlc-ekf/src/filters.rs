//! Uniform steppable drivers for the four estimators the benchmarks compare.
//!
//! All drivers share the same protocol: the first frame only seeds the
//! internal gyro history and returns the initial estimate unchanged; every
//! later frame advances the filter one cycle. The EKF-family drivers apply
//! prediction with the *previous* frame's gyro sample and correction with the
//! current frame's accelerometer/magnetometer pair, then normalize, so an
//! unnormalized state is never visible from outside.

use nalgebra::Vector3;

use crate::baselines::{cf_step, gyro_integrate_step, CfState};
use crate::ekf::{correct, normalize_with_jacobian, predict, EkfParams, FilterState};
use crate::error::{Error, Result};
use crate::rl::{compensate, policy_input, CompensatorPolicy};
use crate::rotation::Quaternion;
use crate::sim::{EpisodeRecord, MeasurementFrame};

/// Which estimator a benchmark run refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Ekf,
    Cf,
    Gyro,
    RlcEkf,
}

impl FilterKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ekf" => Ok(Self::Ekf),
            "cf" => Ok(Self::Cf),
            "gyro" => Ok(Self::Gyro),
            "rlc-ekf" | "rlcekf" | "rlc_ekf" => Ok(Self::RlcEkf),
            other => Err(Error::Config(format!(
                "unknown filter '{other}' (expected ekf, cf, gyro or rlc-ekf)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ekf => "EKF",
            Self::Cf => "CF",
            Self::Gyro => "GYRO",
            Self::RlcEkf => "RLC-EKF",
        }
    }
}

pub trait AttitudeEstimator {
    /// Advance one frame and return the current attitude estimate.
    fn step(&mut self, frame: &MeasurementFrame, dt: f64) -> Result<Quaternion>;
    fn estimate(&self) -> Quaternion;
}

/// Plain extended Kalman filter driver.
pub struct EkfFilter {
    pub state: FilterState,
    pub params: EkfParams,
    prev_gyro: Option<Vector3<f64>>,
    /// Frames on which the correction was refused for a singular innovation
    /// covariance.
    pub skipped_corrections: usize,
}

impl EkfFilter {
    pub fn new(q0: Quaternion, params: EkfParams) -> Self {
        Self {
            state: params.initial_state(q0),
            params,
            prev_gyro: None,
            skipped_corrections: 0,
        }
    }

    fn started(&self) -> bool {
        self.prev_gyro.is_some()
    }
}

impl AttitudeEstimator for EkfFilter {
    fn step(&mut self, frame: &MeasurementFrame, dt: f64) -> Result<Quaternion> {
        if let Some(gyro) = self.prev_gyro {
            self.state = predict(&self.state, &gyro, dt, &self.params);
            match correct(&self.state, &frame.stacked(), &self.params) {
                Ok((s, _)) => self.state = s,
                Err(Error::SingularInnovation { .. }) => self.skipped_corrections += 1,
                Err(e) => return Err(e),
            }
            self.state = normalize_with_jacobian(&self.state, self.params.normalization)?;
        }
        self.prev_gyro = Some(frame.gyro);
        Ok(self.state.q)
    }

    fn estimate(&self) -> Quaternion {
        self.state.q
    }
}

/// EKF with the learned residual-gain compensation stage appended. With a
/// zero policy it is bit-identical to [`EkfFilter`].
pub struct RlcEkfFilter {
    pub ekf: EkfFilter,
    pub policy: CompensatorPolicy,
    pub prev_residual: Vector3<f64>,
}

impl RlcEkfFilter {
    pub fn new(q0: Quaternion, params: EkfParams, policy: CompensatorPolicy) -> Self {
        Self {
            ekf: EkfFilter::new(q0, params),
            policy,
            prev_residual: Vector3::zeros(),
        }
    }
}

impl AttitudeEstimator for RlcEkfFilter {
    fn step(&mut self, frame: &MeasurementFrame, dt: f64) -> Result<Quaternion> {
        let started = self.ekf.started();
        self.ekf.step(frame, dt)?;
        if started {
            let input = policy_input(
                &self.ekf.state.q,
                frame,
                &self.ekf.params,
                &self.prev_residual,
            );
            let (state, eta) = compensate(&self.ekf.state, &input, &self.policy);
            self.ekf.state = state;
            self.prev_residual = eta;
        }
        Ok(self.ekf.state.q)
    }

    fn estimate(&self) -> Quaternion {
        self.ekf.state.q
    }
}

/// Complementary-filter driver.
pub struct CfFilter {
    pub state: CfState,
    pub params: EkfParams,
    started: bool,
}

impl CfFilter {
    pub fn new(q0: Quaternion, beta: f64, params: EkfParams) -> Self {
        Self {
            state: CfState::new(q0, beta),
            params,
            started: false,
        }
    }
}

impl AttitudeEstimator for CfFilter {
    fn step(&mut self, frame: &MeasurementFrame, dt: f64) -> Result<Quaternion> {
        if self.started {
            self.state = cf_step(&self.state, frame, dt, &self.params);
        }
        self.started = true;
        Ok(self.state.q)
    }

    fn estimate(&self) -> Quaternion {
        self.state.q
    }
}

/// Dead-reckoning gyro integration.
pub struct GyroFilter {
    pub q: Quaternion,
    prev_gyro: Option<Vector3<f64>>,
}

impl GyroFilter {
    pub fn new(q0: Quaternion) -> Self {
        Self { q: q0, prev_gyro: None }
    }
}

impl AttitudeEstimator for GyroFilter {
    fn step(&mut self, frame: &MeasurementFrame, dt: f64) -> Result<Quaternion> {
        if let Some(gyro) = self.prev_gyro {
            self.q = gyro_integrate_step(&self.q, &gyro, dt);
        }
        self.prev_gyro = Some(frame.gyro);
        Ok(self.q)
    }

    fn estimate(&self) -> Quaternion {
        self.q
    }
}

/// Run an estimator over a full episode; returns one estimate per frame, the
/// first being the initial estimate.
pub fn run_estimator(
    estimator: &mut dyn AttitudeEstimator,
    episode: &EpisodeRecord,
) -> Result<Vec<Quaternion>> {
    let mut out = Vec::with_capacity(episode.frames.len());
    for frame in &episode.frames {
        out.push(estimator.step(frame, episode.dt)?);
    }
    Ok(out)
}
