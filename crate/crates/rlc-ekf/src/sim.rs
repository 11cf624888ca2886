//! Synthetic IMU episodes: ground-truth attitude trajectories plus noisy
//! gyroscope, accelerometer and magnetometer streams.
//!
//! Generation is pure given `(config, seed)` — identical inputs produce a
//! bit-identical [`EpisodeRecord`] — so episodes can be produced concurrently
//! with independent seeds. Accelerometer and magnetometer outputs are
//! normalized direction measurements; their covariances apply in that
//! normalized scale.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ekf::{EkfParams, Vector6};
use crate::error::{Error, Result};
use crate::rotation::Quaternion;

/// SplitMix64 step, used to derive independent sub-seeds from a base seed.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reference field directions in the navigation frame, shared between the
/// simulator and the filters. Both are unit vectors; the magnetic direction
/// is parameterized by its dip angle below horizontal.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceVectors {
    pub gravity: Vector3<f64>,
    pub magnetic: Vector3<f64>,
}

impl ReferenceVectors {
    pub fn with_dip_angle(dip_rad: f64) -> Self {
        Self {
            gravity: Vector3::new(0.0, 0.0, 1.0),
            magnetic: Vector3::new(dip_rad.cos(), 0.0, -dip_rad.sin()),
        }
    }
}

impl Default for ReferenceVectors {
    fn default() -> Self {
        Self::with_dip_angle(71.0_f64.to_radians())
    }
}

/// Deterministic angular-velocity profile `t ↦ ω(t)` in rad/s.
#[derive(Debug, Clone)]
pub enum AngularVelocityProfile {
    Zero,
    Constant(Vector3<f64>),
    /// Independent sinusoid per axis: `amplitude·sin(2π·frequency·t + phase)`.
    Sinusoid {
        amplitude: Vector3<f64>,
        frequency_hz: Vector3<f64>,
        phase: Vector3<f64>,
    },
    /// Constant segments; each entry holds until its end time, the last rate
    /// extends beyond the final end time.
    PiecewiseConstant(Vec<(f64, Vector3<f64>)>),
}

impl AngularVelocityProfile {
    /// Default training profile: unit-amplitude sinusoids at 0.3/0.4/0.5 Hz
    /// exciting all three axes.
    pub fn training_default() -> Self {
        Self::Sinusoid {
            amplitude: Vector3::new(1.0, 1.0, 1.0),
            frequency_hz: Vector3::new(0.3, 0.4, 0.5),
            phase: Vector3::zeros(),
        }
    }

    pub fn eval(&self, t: f64) -> Vector3<f64> {
        match self {
            Self::Zero => Vector3::zeros(),
            Self::Constant(w) => *w,
            Self::Sinusoid {
                amplitude,
                frequency_hz,
                phase,
            } => Vector3::from_fn(|i, _| {
                amplitude[i] * (2.0 * std::f64::consts::PI * frequency_hz[i] * t + phase[i]).sin()
            }),
            Self::PiecewiseConstant(segments) => {
                for (end, w) in segments {
                    if t < *end {
                        return *w;
                    }
                }
                segments.last().map(|(_, w)| *w).unwrap_or_else(Vector3::zeros)
            }
        }
    }

    /// Check the rate bound `‖ω(t)‖ ≤ max_rate` where it can be verified
    /// without sampling (amplitude bounds for sinusoids, exact for the rest).
    pub fn validate(&self, max_rate: f64) -> Result<()> {
        let peak = match self {
            Self::Zero => 0.0,
            Self::Constant(w) => w.norm(),
            Self::Sinusoid { amplitude, .. } => amplitude.norm(),
            Self::PiecewiseConstant(segments) => segments
                .iter()
                .map(|(_, w)| w.norm())
                .fold(0.0, f64::max),
        };
        if peak > max_rate {
            return Err(Error::Config(format!(
                "angular velocity profile peaks at {peak:.3} rad/s, above the {max_rate:.3} rad/s bound"
            )));
        }
        Ok(())
    }
}

/// Per-interval covariance multipliers emulating time-varying noise levels.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceScale {
    pub start: f64,
    pub end: f64,
    pub gyro: f64,
    pub accel: f64,
    pub mag: f64,
}

/// Sensor noise description: Gaussian covariances per sensor, an optional
/// constant gyro bias, and an optional covariance-scale schedule.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub gyro_cov: Matrix3<f64>,
    pub accel_cov: Matrix3<f64>,
    pub mag_cov: Matrix3<f64>,
    pub gyro_bias: Vector3<f64>,
    pub scale_schedule: Vec<CovarianceScale>,
}

impl Default for NoiseModel {
    /// The training noise levels: Σ_ω = 0.0003·I, Σ_a = 0.0005·I,
    /// Σ_m = 0.0003·I, no bias.
    fn default() -> Self {
        Self {
            gyro_cov: Matrix3::identity() * 3e-4,
            accel_cov: Matrix3::identity() * 5e-4,
            mag_cov: Matrix3::identity() * 3e-4,
            gyro_bias: Vector3::zeros(),
            scale_schedule: Vec::new(),
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            gyro_cov: Matrix3::zeros(),
            accel_cov: Matrix3::zeros(),
            mag_cov: Matrix3::zeros(),
            gyro_bias: Vector3::zeros(),
            scale_schedule: Vec::new(),
        }
    }

    pub fn with_gyro_bias(mut self, bias: Vector3<f64>) -> Self {
        self.gyro_bias = bias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, cov) in [
            ("gyro", &self.gyro_cov),
            ("accel", &self.accel_cov),
            ("mag", &self.mag_cov),
        ] {
            if (cov - cov.transpose()).abs().max() > 1e-12 {
                return Err(Error::Config(format!("{name} covariance is not symmetric")));
            }
            let min_eig = cov.symmetric_eigenvalues().min();
            if min_eig < -1e-12 {
                return Err(Error::Config(format!(
                    "{name} covariance is not positive semidefinite (min eigenvalue {min_eig:.3e})"
                )));
            }
        }
        for s in &self.scale_schedule {
            if !(s.gyro > 0.0 && s.accel > 0.0 && s.mag > 0.0) {
                return Err(Error::Config(
                    "covariance scale multipliers must be positive".into(),
                ));
            }
            if !(s.end > s.start) {
                return Err(Error::Config(
                    "covariance scale interval must have end > start".into(),
                ));
            }
        }
        Ok(())
    }

    fn scale_at(&self, t: f64) -> (f64, f64, f64) {
        let mut scales = (1.0, 1.0, 1.0);
        for s in &self.scale_schedule {
            if t >= s.start && t < s.end {
                scales.0 *= s.gyro;
                scales.1 *= s.accel;
                scales.2 *= s.mag;
            }
        }
        scales
    }
}

/// Symmetric PSD square root via eigendecomposition; tolerates exactly
/// singular covariances (zero noise).
fn psd_sqrt(cov: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = cov.symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix3::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
}

/// One timestep of sensor output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementFrame {
    pub t: f64,
    pub gyro: Vector3<f64>,
    pub accel: Vector3<f64>,
    pub mag: Vector3<f64>,
}

impl MeasurementFrame {
    /// Stacked accelerometer/magnetometer observation consumed by the
    /// correction update.
    pub fn stacked(&self) -> Vector6 {
        Vector6::new(
            self.accel.x,
            self.accel.y,
            self.accel.z,
            self.mag.x,
            self.mag.y,
            self.mag.z,
        )
    }
}

/// A measurement trajectory, simulated or ingested. Simulated records carry
/// the ground-truth quaternions; ingested ones only when the dataset provides
/// them. Frames are equally spaced `dt` apart.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub dt: f64,
    pub truth: Option<Vec<Quaternion>>,
    pub frames: Vec<MeasurementFrame>,
    pub seed: Option<u64>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.frames.len().saturating_sub(1)) as f64
    }

    /// A copy restricted to frames `[start, end)`, with timestamps rebased
    /// to zero.
    pub fn window(&self, start: usize, end: usize) -> EpisodeRecord {
        let t0 = self.frames[start].t;
        EpisodeRecord {
            dt: self.dt,
            truth: self.truth.as_ref().map(|t| t[start..end].to_vec()),
            frames: self.frames[start..end]
                .iter()
                .map(|f| MeasurementFrame { t: f.t - t0, ..*f })
                .collect(),
            seed: self.seed,
        }
    }
}

/// Integrate the quaternion kinematics at fixed rate: returns `steps + 1`
/// quaternions `q_0 … q_n` with `q_k = q_{k−1} ⊗ exp(dt·ω(t_{k−1}))`, each
/// renormalized.
pub fn integrate_truth(
    q0: Quaternion,
    profile: &AngularVelocityProfile,
    dt: f64,
    steps: usize,
) -> Vec<Quaternion> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(q0);
    let mut q = q0;
    for k in 0..steps {
        let t = k as f64 * dt;
        q = q.multiply(&Quaternion::exp(&(profile.eval(t) * dt)));
        out.push(q);
    }
    out
}

/// Draw a standard-normal 3-vector.
fn normal3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

/// Produce noisy measurements along a ground-truth trajectory:
/// `y_ω = ω + bias + e_ω`, `y_a = −Rᵀg + e_a`, `y_m = Rᵀm + e_m`, with
/// Gaussian noise of the configured covariances and the scale schedule
/// applied multiplicatively per interval.
pub fn synthesize_measurements(
    truth: &[Quaternion],
    profile: &AngularVelocityProfile,
    noise: &NoiseModel,
    refs: &ReferenceVectors,
    dt: f64,
    seed: u64,
) -> Result<EpisodeRecord> {
    noise.validate()?;
    if truth.len() < 2 {
        return Err(Error::Config("an episode needs at least two frames".into()));
    }
    let lg = psd_sqrt(&noise.gyro_cov);
    let la = psd_sqrt(&noise.accel_cov);
    let lm = psd_sqrt(&noise.mag_cov);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(truth.len());
    for (k, q) in truth.iter().enumerate() {
        let t = k as f64 * dt;
        let (sg, sa, sm) = noise.scale_at(t);
        let rt = q.rotation_matrix().transpose();
        let gyro = profile.eval(t) + noise.gyro_bias + lg * normal3(&mut rng) * sg.sqrt();
        let accel = -(rt * refs.gravity) + la * normal3(&mut rng) * sa.sqrt();
        let mag = rt * refs.magnetic + lm * normal3(&mut rng) * sm.sqrt();
        frames.push(MeasurementFrame { t, gyro, accel, mag });
    }
    Ok(EpisodeRecord {
        dt,
        truth: Some(truth.to_vec()),
        frames,
        seed: Some(seed),
    })
}

/// Uniform random unit quaternion: four i.i.d. draws on [−1, 1], rejected
/// below norm 1e-3, then normalized. The sign is left as drawn.
pub fn sample_initial_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if q.norm() >= 1e-3 {
            return q.normalized();
        }
    }
}

/// Everything needed to generate one family of episodes.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub profile: AngularVelocityProfile,
    pub noise: NoiseModel,
    pub refs: ReferenceVectors,
    /// Rate bound enforced on the profile.
    pub max_rate: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 100.0,
            duration_s: 10.0,
            profile: AngularVelocityProfile::training_default(),
            noise: NoiseModel::default(),
            refs: ReferenceVectors::default(),
            max_rate: 10.0,
        }
    }
}

impl SimConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn steps(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Generate a full episode: random initial attitude, integrated truth,
    /// noisy measurements. Bit-deterministic in `seed`.
    pub fn generate(&self, seed: u64) -> Result<EpisodeRecord> {
        self.profile.validate(self.max_rate)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
        let q0 = sample_initial_quaternion(&mut rng);
        let truth = integrate_truth(q0, &self.profile, self.dt(), self.steps());
        synthesize_measurements(
            &truth,
            &self.profile,
            &self.noise,
            &self.refs,
            self.dt(),
            derive_seed(seed, 1),
        )
    }

    /// Filter parameters that assume exactly this configuration's noise and
    /// reference directions (a correctly specified filter).
    pub fn matched_ekf_params(&self) -> EkfParams {
        EkfParams {
            gyro_cov: self.noise.gyro_cov,
            accel_cov: self.noise.accel_cov,
            mag_cov: self.noise.mag_cov,
            gravity_ref: self.refs.gravity,
            magnetic_ref: self.refs.magnetic,
            ..EkfParams::default()
        }
    }
}
