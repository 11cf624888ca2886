//! Comparison filters: the gradient-descent complementary filter and raw
//! gyro integration.

use nalgebra::Vector3;

use crate::ekf::{measurement_jacobian, measurement_model, EkfParams, Vector6};
use crate::rotation::Quaternion;
use crate::sim::MeasurementFrame;

/// Complementary-filter state: orientation plus the scalar gain β (rad/s)
/// weighting the gradient-descent correction.
#[derive(Debug, Clone, Copy)]
pub struct CfState {
    pub q: Quaternion,
    pub beta: f64,
}

impl CfState {
    pub fn new(q0: Quaternion, beta: f64) -> Self {
        debug_assert!(beta >= 0.0);
        Self { q: q0, beta }
    }
}

/// One complementary-filter update:
/// `q̇ = ½ q ⊗ (0, y_ω) − β·∇f/‖∇f‖`, `q ← normalize(q + dt·q̇)`, where `f`
/// stacks the gravity and magnetic direction objectives against the same
/// reference vectors the EKF uses. Accelerometer and magnetometer readings
/// are normalized before entering the objective; a zero-norm gradient (or a
/// zero-norm measurement) skips the corrective term for the step.
pub fn cf_step(state: &CfState, frame: &MeasurementFrame, dt: f64, params: &EkfParams) -> CfState {
    let q = state.q;
    let rate_quat = Quaternion::new(0.0, frame.gyro.x, frame.gyro.y, frame.gyro.z);
    let mut q_dot = q.product(&rate_quat).as_vector() * 0.5;

    let a_norm = frame.accel.norm();
    let m_norm = frame.mag.norm();
    if a_norm > 0.0 && m_norm > 0.0 {
        let a = frame.accel / a_norm;
        let m = frame.mag / m_norm;
        let y = Vector6::new(a.x, a.y, a.z, m.x, m.y, m.z);
        let objective = measurement_model(&q, params) - y;
        let gradient = measurement_jacobian(&q, params).transpose() * objective;
        let g_norm = gradient.norm();
        if g_norm > 0.0 {
            q_dot -= state.beta * gradient / g_norm;
        }
    }

    let next = q.as_vector() + q_dot * dt;
    CfState {
        q: Quaternion::from_vector(&next).normalized(),
        beta: state.beta,
    }
}

/// Dead-reckoning step: `q ⊗ exp(dt·y_ω)`, renormalized.
pub fn gyro_integrate_step(q: &Quaternion, gyro: &Vector3<f64>, dt: f64) -> Quaternion {
    q.multiply(&Quaternion::exp(&(*gyro * dt)))
}
