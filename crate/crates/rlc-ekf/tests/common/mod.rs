#![allow(dead_code)]

//! Shared oracles for the integration suites: finite-difference Jacobians,
//! a Joseph-form covariance check, and a bootstrap particle filter used to
//! pin attainable accuracy. Everything here is independent of the filter
//! implementation paths it checks.

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rlc_ekf::ekf::{measurement_model, EkfParams, Vector6};
use rlc_ekf::rotation::Quaternion;
use rlc_ekf::sim::EpisodeRecord;

pub fn random_unit_quat(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if q.norm() > 1e-3 {
            return q.normalized();
        }
    }
}

pub fn random_vector3(rng: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    Vector3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

/// Central finite differences of a map R⁴ → R^N in the quaternion
/// components.
pub fn fd_jacobian_wrt_quat<const N: usize>(
    f: &dyn Fn(&Quaternion) -> SMatrix<f64, N, 1>,
    q: &Quaternion,
    h: f64,
) -> SMatrix<f64, N, 4> {
    let mut j = SMatrix::<f64, N, 4>::zeros();
    for col in 0..4 {
        let mut qp = q.as_vector();
        let mut qm = q.as_vector();
        qp[col] += h;
        qm[col] -= h;
        let fp = f(&Quaternion::from_vector(&qp));
        let fm = f(&Quaternion::from_vector(&qm));
        j.set_column(col, &((fp - fm) / (2.0 * h)));
    }
    j
}

/// Central finite differences of a map R³ → R^N.
pub fn fd_jacobian_wrt_vec3<const N: usize>(
    f: &dyn Fn(&Vector3<f64>) -> SMatrix<f64, N, 1>,
    v: &Vector3<f64>,
    h: f64,
) -> SMatrix<f64, N, 3> {
    let mut j = SMatrix::<f64, N, 3>::zeros();
    for col in 0..3 {
        let mut vp = *v;
        let mut vm = *v;
        vp[col] += h;
        vm[col] -= h;
        let fp = f(&vp);
        let fm = f(&vm);
        j.set_column(col, &((fp - fm) / (2.0 * h)));
    }
    j
}

/// Joseph-form covariance update `(I−KH)P(I−KH)ᵀ + KRKᵀ`, algebraically
/// equal to `P − KSKᵀ` when `K` is the optimal gain.
pub fn joseph_form(
    p: &Matrix4<f64>,
    h: &SMatrix<f64, 6, 4>,
    r: &SMatrix<f64, 6, 6>,
    k: &SMatrix<f64, 4, 6>,
) -> Matrix4<f64> {
    let ikh = Matrix4::identity() - k * h;
    ikh * p * ikh.transpose() + k * r * k.transpose()
}

/// Bootstrap particle filter over the attitude quaternion. Propagates
/// particles through gyro kinematics with sampled gyro noise, weights them by
/// the accelerometer/magnetometer likelihood, and resamples systematically.
/// Used once to establish what accuracy is attainable on an episode.
pub struct ParticleFilter {
    particles: Vec<Quaternion>,
    weights: Vec<f64>,
    gyro_std: f64,
    meas_info: SMatrix<f64, 6, 6>,
    params: EkfParams,
    rng: ChaCha8Rng,
}

impl ParticleFilter {
    pub fn new(q0: Quaternion, count: usize, params: EkfParams, seed: u64) -> Self {
        let gyro_std = params.gyro_cov[(0, 0)].sqrt();
        let mut r = SMatrix::<f64, 6, 6>::zeros();
        r.fixed_view_mut::<3, 3>(0, 0).copy_from(&params.accel_cov);
        r.fixed_view_mut::<3, 3>(3, 3).copy_from(&params.mag_cov);
        let meas_info = r.try_inverse().expect("measurement covariance invertible");
        Self {
            particles: vec![q0; count],
            weights: vec![1.0 / count as f64; count],
            gyro_std,
            meas_info,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn normal3(&mut self) -> Vector3<f64> {
        Vector3::new(
            self.rng.sample(StandardNormal),
            self.rng.sample(StandardNormal),
            self.rng.sample(StandardNormal),
        )
    }

    pub fn step(&mut self, gyro: &Vector3<f64>, meas: &Vector6, dt: f64) {
        for i in 0..self.particles.len() {
            let noise = self.normal3() * self.gyro_std;
            self.particles[i] = self.particles[i]
                .multiply(&Quaternion::exp(&((gyro + noise) * dt)));
        }
        let mut max_log = f64::NEG_INFINITY;
        let mut logs = vec![0.0; self.particles.len()];
        for (i, q) in self.particles.iter().enumerate() {
            let residual = meas - measurement_model(q, &self.params);
            let l = -0.5 * (residual.transpose() * self.meas_info * residual)[0];
            logs[i] = l;
            max_log = max_log.max(l);
        }
        let mut total = 0.0;
        for (w, l) in self.weights.iter_mut().zip(&logs) {
            *w *= (l - max_log).exp();
            total += *w;
        }
        for w in self.weights.iter_mut() {
            *w /= total;
        }
        let effective: f64 = 1.0 / self.weights.iter().map(|w| w * w).sum::<f64>();
        if effective < self.particles.len() as f64 / 2.0 {
            self.resample();
        }
    }

    fn resample(&mut self) {
        let n = self.particles.len();
        let step = 1.0 / n as f64;
        let start: f64 = self.rng.random_range(0.0..step);
        let mut new = Vec::with_capacity(n);
        let mut cum = self.weights[0];
        let mut idx = 0;
        for k in 0..n {
            let u = start + k as f64 * step;
            while u > cum && idx < n - 1 {
                idx += 1;
                cum += self.weights[idx];
            }
            new.push(self.particles[idx]);
        }
        self.particles = new;
        self.weights.iter_mut().for_each(|w| *w = step);
    }

    /// Weighted mean quaternion, signs aligned to the heaviest particle.
    pub fn estimate(&self) -> Quaternion {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        let reference = self.particles[best];
        let mut acc = nalgebra::Vector4::<f64>::zeros();
        for (q, w) in self.particles.iter().zip(&self.weights) {
            let aligned = if q.dot(&reference) < 0.0 {
                Quaternion::new(-q.w, -q.x, -q.y, -q.z)
            } else {
                *q
            };
            acc += aligned.as_vector() * *w;
        }
        Quaternion::from_vector(&acc).normalized()
    }
}

/// Steady-state total-attitude RMSE of the particle filter over the last
/// half of an episode, starting from the exact initial attitude.
pub fn particle_filter_rmse(record: &EpisodeRecord, params: &EkfParams, count: usize, seed: u64) -> f64 {
    let truth = record.truth.as_ref().expect("oracle needs ground truth");
    let mut pf = ParticleFilter::new(truth[0], count, params.clone(), seed);
    let mut errors = Vec::new();
    let n = record.frames.len();
    for t in 1..n {
        pf.step(
            &record.frames[t - 1].gyro,
            &record.frames[t].stacked(),
            record.dt,
        );
        if t >= n / 2 {
            errors.push(truth[t].angle_to(&pf.estimate()));
        }
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Matrix3 helper used by a few suites.
pub fn identity_error(m: &Matrix3<f64>) -> f64 {
    (m - Matrix3::identity()).abs().max()
}
