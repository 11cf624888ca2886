//! Quaternion-state extended Kalman filter for attitude estimation.
//!
//! The state is the orientation quaternion with a full 4×4 covariance in
//! quaternion coordinates. One filter cycle is: [`predict`] with the previous
//! gyro sample, [`correct`] with the stacked accelerometer/magnetometer
//! observation, then [`normalize_with_jacobian`]. `correct` returns an
//! intentionally unnormalized quaternion (the update is additive); callers
//! must normalize before using the state, and the drivers in
//! [`crate::filters`] enforce that ordering.

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::rotation::{exp_jacobian, Quaternion};

pub type Vector6 = SVector<f64, 6>;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type GainMatrix = SMatrix<f64, 4, 6>;

/// Condition-number limit above which the innovation covariance is treated
/// as singular and the correction is refused.
const CONDITION_LIMIT: f64 = 1e12;

/// Norm below which quaternion normalization is considered a divergence.
const DIVERGENCE_NORM: f64 = 1e-6;

/// Orientation estimate and its covariance.
///
/// `cov` is kept symmetric by construction (every update symmetrizes); its
/// eigenvalues may touch zero but must not go meaningfully negative.
#[derive(Debug, Clone, Copy)]
pub struct FilterState {
    pub q: Quaternion,
    pub cov: Matrix4<f64>,
}

impl FilterState {
    pub fn new(q: Quaternion, cov: Matrix4<f64>) -> Self {
        Self { q, cov }
    }
}

/// Which Jacobian transforms the covariance in the normalization step.
///
/// The rank-one form `q qᵀ/‖q‖³` collapses the covariance onto the gauge
/// direction: the tangent-space uncertainty is wiped out every cycle, the
/// gain starves, and the filter stops converging from coarse initial
/// estimates. It is kept selectable for study; the projector is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationJacobian {
    /// `J = q qᵀ / ‖q‖³`, rank one.
    RankOne,
    /// `J = (I − q̂ q̂ᵀ) / ‖q‖`, the tangent-space projector. The default.
    #[default]
    Projector,
}

/// Filter parameters: assumed noise covariances, reference directions, and
/// per-sensor covariance multipliers used for gain-sensitivity studies.
#[derive(Debug, Clone)]
pub struct EkfParams {
    /// Gyroscope noise covariance, feeds the process noise.
    pub gyro_cov: Matrix3<f64>,
    pub accel_cov: Matrix3<f64>,
    pub mag_cov: Matrix3<f64>,
    /// Unit gravity direction in the navigation frame.
    pub gravity_ref: Vector3<f64>,
    /// Unit magnetic field direction in the navigation frame.
    pub magnetic_ref: Vector3<f64>,
    /// Multipliers on the assumed covariances (gyro, accel, mag). All 1 for a
    /// correctly specified filter.
    pub gyro_cov_scale: f64,
    pub accel_cov_scale: f64,
    pub mag_cov_scale: f64,
    pub normalization: NormalizationJacobian,
    /// Initial covariance `P₀`.
    pub initial_cov: Matrix4<f64>,
}

impl Default for EkfParams {
    fn default() -> Self {
        let dip = 71.0_f64.to_radians();
        Self {
            gyro_cov: Matrix3::identity() * 3e-4,
            accel_cov: Matrix3::identity() * 5e-4,
            mag_cov: Matrix3::identity() * 3e-4,
            gravity_ref: Vector3::new(0.0, 0.0, 1.0),
            magnetic_ref: Vector3::new(dip.cos(), 0.0, -dip.sin()),
            gyro_cov_scale: 1.0,
            accel_cov_scale: 1.0,
            mag_cov_scale: 1.0,
            normalization: NormalizationJacobian::default(),
            initial_cov: Matrix4::identity() * 0.5,
        }
    }
}

impl EkfParams {
    pub fn initial_state(&self, q0: Quaternion) -> FilterState {
        FilterState::new(q0, self.initial_cov)
    }

    /// Block-diagonal measurement covariance with multipliers applied.
    pub fn measurement_cov(&self) -> Matrix6 {
        let mut r = Matrix6::zeros();
        r.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(self.accel_cov * self.accel_cov_scale));
        r.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(self.mag_cov * self.mag_cov_scale));
        r
    }
}

/// Innovation data from one correction update.
#[derive(Debug, Clone)]
pub struct Innovation {
    /// `ε = y − h(q̃)`.
    pub residual: Vector6,
    /// `S = H P Hᵀ + R`.
    pub residual_cov: Matrix6,
    /// `K = P Hᵀ S⁻¹`.
    pub gain: GainMatrix,
}

fn symmetrize4(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// Propagate the state through the gyro-driven kinematics over one sample
/// period: `q̃ = q̂ ⊗ exp(dt·y_ω)`, `P = F P Fᵀ + G Q Gᵀ`.
pub fn predict(state: &FilterState, gyro: &Vector3<f64>, dt: f64, params: &EkfParams) -> FilterState {
    let step = *gyro * dt;
    let prop = Quaternion::exp(&step);
    let q = state.q.multiply(&prop);
    // F is exact: the propagation map is linear in q. G is the Jacobian of
    // the propagation with respect to additive gyro noise, evaluated at zero
    // noise.
    let f = prop.right_product_matrix();
    let g: SMatrix<f64, 4, 3> = state.q.left_product_matrix() * exp_jacobian(&step) * (-dt);
    let q_noise = params.gyro_cov * params.gyro_cov_scale;
    let cov = symmetrize4(&(f * state.cov * f.transpose() + g * q_noise * g.transpose()));
    FilterState::new(q, cov)
}

/// Predicted measurement `h(q) = (−Rᵀ g ; Rᵀ m)`: gravity and magnetic field
/// directions expressed in the body frame.
pub fn measurement_model(q: &Quaternion, params: &EkfParams) -> Vector6 {
    let rt = q.rotation_matrix().transpose();
    let a = -(rt * params.gravity_ref);
    let m = rt * params.magnetic_ref;
    Vector6::new(a.x, a.y, a.z, m.x, m.y, m.z)
}

/// Jacobian of `R(q)ᵀ v` with respect to the four quaternion components,
/// treating the quadratic rotation-matrix formula as a free function of `q`.
fn body_direction_jacobian(q: &Quaternion, v: &Vector3<f64>) -> SMatrix<f64, 3, 4> {
    let pure = Quaternion::new(0.0, v.x, v.y, v.z);
    // d(q* ⊗ v ⊗ q) = Right(v ⊗ q)·C·dq + Left(q* ⊗ v)·dq, C = conjugation.
    let mut m = pure.product(q).right_product_matrix();
    for col in 1..4 {
        for row in 0..4 {
            m[(row, col)] = -m[(row, col)];
        }
    }
    m += q.conjugate().product(&pure).left_product_matrix();
    m.fixed_view::<3, 4>(1, 0).into_owned()
}

/// Analytic Jacobian of [`measurement_model`] with respect to the quaternion.
pub fn measurement_jacobian(q: &Quaternion, params: &EkfParams) -> SMatrix<f64, 6, 4> {
    let mut h = SMatrix::<f64, 6, 4>::zeros();
    h.fixed_view_mut::<3, 4>(0, 0)
        .copy_from(&(-body_direction_jacobian(q, &params.gravity_ref)));
    h.fixed_view_mut::<3, 4>(3, 0)
        .copy_from(&body_direction_jacobian(q, &params.magnetic_ref));
    h
}

/// Fuse one stacked accelerometer/magnetometer observation.
///
/// Returns the updated state with an *unnormalized* quaternion (the update is
/// additive) together with the innovation. Fails with
/// [`Error::SingularInnovation`] when `S` is numerically singular; the caller
/// may skip the correction for that frame.
pub fn correct(
    state: &FilterState,
    measurement: &Vector6,
    params: &EkfParams,
) -> Result<(FilterState, Innovation)> {
    let h = measurement_jacobian(&state.q, params);
    let predicted = measurement_model(&state.q, params);
    let residual = measurement - predicted;

    let mut s = h * state.cov * h.transpose() + params.measurement_cov();
    s = (s + s.transpose()) * 0.5;

    let eigs = s.symmetric_eigenvalues();
    let max_eig = eigs.max();
    let min_eig = eigs.min();
    if !(min_eig > 0.0) || max_eig / min_eig > CONDITION_LIMIT {
        return Err(Error::SingularInnovation {
            condition: if min_eig > 0.0 {
                max_eig / min_eig
            } else {
                f64::INFINITY
            },
        });
    }
    let s_inv = s
        .cholesky()
        .ok_or(Error::SingularInnovation {
            condition: max_eig / min_eig,
        })?
        .inverse();

    let gain: GainMatrix = state.cov * h.transpose() * s_inv;
    let q_vec = state.q.as_vector() + gain * residual;
    let cov = symmetrize4(&(state.cov - gain * s * gain.transpose()));
    Ok((
        FilterState::new(Quaternion::from_vector(&q_vec), cov),
        Innovation {
            residual,
            residual_cov: s,
            gain,
        },
    ))
}

/// Normalize the quaternion and transform the covariance with the
/// normalization Jacobian selected in `mode`.
pub fn normalize_with_jacobian(
    state: &FilterState,
    mode: NormalizationJacobian,
) -> Result<FilterState> {
    let n = state.q.norm();
    if !(n > DIVERGENCE_NORM) {
        return Err(Error::FilterDivergence(format!(
            "quaternion norm {n:.3e} below {DIVERGENCE_NORM:.0e} in normalization"
        )));
    }
    let qv = state.q.as_vector();
    let j = match mode {
        NormalizationJacobian::RankOne => (qv * qv.transpose()) / (n * n * n),
        NormalizationJacobian::Projector => {
            let unit = qv / n;
            (Matrix4::identity() - unit * unit.transpose()) / n
        }
    };
    let cov = symmetrize4(&(j * state.cov * j.transpose()));
    Ok(FilterState::new(state.q.normalized(), cov))
}
