//! Quaternion and SO(3) primitives shared by every filter in this crate.
//!
//! Conventions, stated once:
//!
//! * Quaternions are scalar-first `(w, x, y, z)` and use the Hamilton product.
//! * A quaternion carries the sensor-to-navigation orientation: its
//!   [`rotation_matrix`](Quaternion::rotation_matrix) maps body-frame vectors
//!   into the navigation frame, and the body-frame expression of a navigation
//!   vector uses the transpose.
//! * `exp` is the half-angle map: `Quaternion::exp(v)` rotates by `‖v‖`
//!   radians about `v/‖v‖`. [`Quaternion::log`] is its inverse with range
//!   `‖log(q)‖ ≤ π`.
//! * The double cover is resolved (`w ≥ 0`) only when extracting errors and
//!   metrics, never inside filter updates, because the filter's additive
//!   quaternion update is sign-sensitive. Use
//!   [`canonicalized`](Quaternion::canonicalized) at extraction points.

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3, Vector4};

/// Switch point between the closed-form and Taylor branches of `exp`, `log`
/// and `exp_jacobian`. Below this angle the closed forms lose precision to
/// cancellation.
const TAYLOR_THRESHOLD: f64 = 1e-8;

/// Scalar-first quaternion `(w, x, y, z)`.
///
/// Rotation-producing constructors (`exp`, `from_euler`, `multiply`)
/// renormalize, so their outputs are unit to within 1e-9. The raw
/// [`new`](Quaternion::new) constructor and [`product`](Quaternion::product)
/// do not normalize; the filter relies on that for its additive update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Components as a 4-vector, scalar first.
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Representative of the double cover with `w ≥ 0`; a tie at `w = 0` is
    /// broken by making the first nonzero vector component positive.
    pub fn canonicalized(&self) -> Self {
        if self.w > 0.0 {
            return *self;
        }
        if self.w < 0.0 {
            return self.negated();
        }
        for c in [self.x, self.y, self.z] {
            if c > 0.0 {
                return *self;
            }
            if c < 0.0 {
                return self.negated();
            }
        }
        *self
    }

    fn negated(&self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }

    /// Raw Hamilton product `self ⊗ rhs`, bilinear, no normalization.
    pub fn product(&self, rhs: &Quaternion) -> Self {
        let (aw, ax, ay, az) = (self.w, self.x, self.y, self.z);
        let (bw, bx, by, bz) = (rhs.w, rhs.x, rhs.y, rhs.z);
        Self::new(
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        )
    }

    /// Unit-quaternion product: Hamilton product followed by renormalization.
    /// The sign is not canonicalized; it matters mid-computation.
    pub fn multiply(&self, rhs: &Quaternion) -> Self {
        self.product(rhs).normalized()
    }

    /// Half-angle exponential map: rotation by `‖v‖` radians about `v/‖v‖`.
    pub fn exp(v: &Vector3<f64>) -> Self {
        let angle_sq = v.norm_squared();
        if angle_sq < TAYLOR_THRESHOLD * TAYLOR_THRESHOLD {
            // w ≈ 1 − θ²/8, vec ≈ v/2·(1 − θ²/24)
            let w = 1.0 - angle_sq / 8.0;
            let k = 0.5 * (1.0 - angle_sq / 24.0);
            Self::new(w, k * v.x, k * v.y, k * v.z)
        } else {
            let angle = angle_sq.sqrt();
            let (s, c) = (0.5 * angle).sin_cos();
            let k = s / angle;
            Self::new(c, k * v.x, k * v.y, k * v.z)
        }
    }

    /// Inverse of [`exp`](Quaternion::exp). The sign is canonicalized first,
    /// so `‖log(q)‖ ≤ π`.
    pub fn log(&self) -> Vector3<f64> {
        let q = self.canonicalized();
        let vec = Vector3::new(q.x, q.y, q.z);
        let vec_norm = vec.norm();
        if q.w.abs() > 1.0 - 1e-10 {
            // factor = 2·atan2(n, w)/n expanded about n = 0
            let t = vec_norm / q.w;
            let factor = (2.0 / q.w) * (1.0 - t * t / 3.0);
            factor * vec
        } else {
            let angle = 2.0 * vec_norm.atan2(q.w);
            (angle / vec_norm) * vec
        }
    }

    /// Rotation matrix `R` with `R·v_body = v_nav`, i.e. the sandwich
    /// `q ⊗ v ⊗ q*` as a matrix. Assumes unit input.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            w * w + x * x - y * y - z * z,
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            w * w - x * x + y * y - z * z,
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            w * w - x * x - y * y + z * z,
        )
    }

    /// Apply the rotation to a body-frame vector: `R(q)·v`.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * v
    }

    /// Apply the inverse rotation: `R(q)ᵀ·v`, expressing a navigation-frame
    /// vector in the body frame.
    pub fn inverse_rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix().transpose() * v
    }

    /// Matrix `L(q)` with `L(q)·vec(p) = vec(q ⊗ p)`.
    pub fn left_product_matrix(&self) -> Matrix4<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, -z, y, //
            y, z, w, -x, //
            z, -y, x, w,
        )
    }

    /// Matrix `R(q)` with `R(q)·vec(p) = vec(p ⊗ q)`.
    pub fn right_product_matrix(&self) -> Matrix4<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, z, -y, //
            y, -z, w, x, //
            z, y, -x, w,
        )
    }

    /// ZYX intrinsic (aerospace) Euler angles `(yaw, pitch, roll)` in radians.
    ///
    /// At gimbal lock (`|pitch|` within 1e-7 of `π/2`) the free angle goes to
    /// yaw and roll is reported as zero.
    pub fn to_euler(&self) -> (f64, f64, f64) {
        let r = self.rotation_matrix();
        let sin_pitch = (-r[(2, 0)]).clamp(-1.0, 1.0);
        let pitch = sin_pitch.asin();
        if std::f64::consts::FRAC_PI_2 - pitch.abs() < 1e-7 {
            // R reduces to a pure yaw-roll coupling; put it all in yaw.
            let yaw = if pitch > 0.0 {
                -f64::atan2(r[(0, 1)], r[(1, 1)])
            } else {
                f64::atan2(-r[(0, 1)], r[(1, 1)])
            };
            (yaw, pitch, 0.0)
        } else {
            let yaw = f64::atan2(r[(1, 0)], r[(0, 0)]);
            let roll = f64::atan2(r[(2, 1)], r[(2, 2)]);
            (yaw, pitch, roll)
        }
    }

    /// Quaternion for ZYX intrinsic Euler angles: yaw about z, then pitch
    /// about the new y, then roll about the new x.
    pub fn from_euler(yaw: f64, pitch: f64, roll: f64) -> Self {
        let qz = Self::exp(&Vector3::new(0.0, 0.0, yaw));
        let qy = Self::exp(&Vector3::new(0.0, pitch, 0.0));
        let qx = Self::exp(&Vector3::new(roll, 0.0, 0.0));
        qz.multiply(&qy).multiply(&qx)
    }

    /// Geodesic angle in radians between the rotations carried by two unit
    /// quaternions, insensitive to the double cover.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        self.multiply(&other.conjugate()).log().norm()
    }
}

/// Jacobian of [`Quaternion::exp`] with respect to its rotation-vector
/// argument, as a 4×3 matrix (scalar row first). At `v = 0` it equals
/// `[0₁ₓ₃; ½·I₃]`.
pub fn exp_jacobian(v: &Vector3<f64>) -> SMatrix<f64, 4, 3> {
    let angle_sq = v.norm_squared();
    // vec(exp) = s·v with s = sin(θ/2)/θ; lower block is s·I + c₂·v·vᵀ with
    // c₂ = ds/dθ / θ; top row is −½·s·vᵀ.
    let (s, c2) = if angle_sq < TAYLOR_THRESHOLD * TAYLOR_THRESHOLD {
        (0.5 * (1.0 - angle_sq / 24.0), -1.0 / 24.0)
    } else {
        let angle = angle_sq.sqrt();
        let (sin_h, cos_h) = (0.5 * angle).sin_cos();
        let s = sin_h / angle;
        let c2 = (0.5 * angle * cos_h - sin_h) / (angle_sq * angle);
        (s, c2)
    };
    let mut j = SMatrix::<f64, 4, 3>::zeros();
    for col in 0..3 {
        j[(0, col)] = -0.5 * s * v[col];
        for row in 0..3 {
            j[(row + 1, col)] = c2 * v[row] * v[col] + if row == col { s } else { 0.0 };
        }
    }
    j
}
