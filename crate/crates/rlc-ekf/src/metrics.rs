//! Error metrics shared by the benchmark harness and the tests: wrapped
//! Euler-angle errors, per-angle RMSE, and convergence times.

use nalgebra::Vector3;

use crate::rotation::Quaternion;

/// Wrap an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Per-angle estimation error `(yaw, pitch, roll)`, truth minus estimate,
/// each wrapped to `(−π, π]`.
pub fn euler_error(truth: &Quaternion, estimate: &Quaternion) -> Vector3<f64> {
    let (ty, tp, tr) = truth.to_euler();
    let (ey, ep, er) = estimate.to_euler();
    Vector3::new(wrap_angle(ty - ey), wrap_angle(tp - ep), wrap_angle(tr - er))
}

/// Total attitude error: geodesic angle between the two orientations.
pub fn attitude_error_angle(truth: &Quaternion, estimate: &Quaternion) -> f64 {
    truth.angle_to(estimate)
}

/// Squared total attitude error, the per-step cost driving the compensation
/// policy. Symmetric in its arguments and insensitive to the double cover.
pub fn squared_attitude_error(truth: &Quaternion, estimate: &Quaternion) -> f64 {
    let a = attitude_error_angle(truth, estimate);
    a * a
}

/// Root-mean-square of each error component over a window of per-sample
/// Euler errors.
pub fn rmse(errors: &[Vector3<f64>]) -> Vector3<f64> {
    if errors.is_empty() {
        return Vector3::zeros();
    }
    let n = errors.len() as f64;
    let sum_sq = errors
        .iter()
        .fold(Vector3::zeros(), |acc: Vector3<f64>, e| {
            acc + e.component_mul(e)
        });
    (sum_sq / n).map(f64::sqrt)
}

/// First time after which the total attitude error stays below `threshold`
/// for the rest of the series. `None` when the series never settles.
pub fn convergence_time(times: &[f64], total_error: &[f64], threshold: f64) -> Option<f64> {
    debug_assert_eq!(times.len(), total_error.len());
    let mut settled_from = total_error.len();
    for (i, e) in total_error.iter().enumerate().rev() {
        if *e >= threshold {
            break;
        }
        settled_from = i;
    }
    if settled_from == total_error.len() {
        None
    } else {
        Some(times[settled_from])
    }
}

/// Median of a sample; `None` values (never converged) sort as +∞.
pub fn median_of_optional(values: &[Option<f64>]) -> f64 {
    let mut v: Vec<f64> = values
        .iter()
        .map(|x| x.unwrap_or(f64::INFINITY))
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn wrap_is_invariant_to_full_turns() {
        for a in [-3.5, -0.2, 0.0, 1.2, 3.0] {
            assert_relative_eq!(wrap_angle(a + 2.0 * PI), wrap_angle(a), epsilon = 1e-12);
            assert!(wrap_angle(a) > -PI && wrap_angle(a) <= PI);
        }
        assert_relative_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn rmse_known_values() {
        let zeros = vec![Vector3::zeros(); 10];
        assert_relative_eq!(rmse(&zeros), Vector3::zeros());
        let constant = vec![Vector3::new(0.1, 0.0, 0.0); 25];
        assert_relative_eq!(rmse(&constant), Vector3::new(0.1, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn rmse_invariant_to_two_pi_in_raw_error() {
        let raw = [0.3, -0.7, 1.1];
        let direct: Vec<Vector3<f64>> = raw.iter().map(|e| Vector3::new(wrap_angle(*e), 0.0, 0.0)).collect();
        let shifted: Vec<Vector3<f64>> = raw
            .iter()
            .map(|e| Vector3::new(wrap_angle(*e + 2.0 * PI), 0.0, 0.0))
            .collect();
        assert_relative_eq!(rmse(&direct), rmse(&shifted), epsilon = 1e-12);
    }

    #[test]
    fn convergence_time_finds_last_crossing() {
        let times: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let errors = vec![0.5, 0.05, 0.3, 0.05, 0.04, 0.03];
        assert_eq!(convergence_time(&times, &errors, 0.1), Some(3.0));
        let never = vec![0.5; 6];
        assert_eq!(convergence_time(&times, &never, 0.1), None);
        let always = vec![0.01; 6];
        assert_eq!(convergence_time(&times, &always, 0.1), Some(0.0));
    }

    #[test]
    fn cost_symmetry_and_antipode() {
        let q1 = Quaternion::from_euler(0.2, 0.1, -0.3);
        let q2 = Quaternion::from_euler(-0.5, 0.4, 0.8);
        assert_relative_eq!(
            squared_attitude_error(&q1, &q2),
            squared_attitude_error(&q2, &q1),
            epsilon = 1e-12
        );
        let flipped = Quaternion::exp(&Vector3::new(PI, 0.0, 0.0)).multiply(&q1);
        assert_relative_eq!(squared_attitude_error(&q1, &flipped), PI * PI, epsilon = 1e-9);
        assert_relative_eq!(squared_attitude_error(&q1, &q1), 0.0);
    }
}
