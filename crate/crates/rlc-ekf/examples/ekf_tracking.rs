//! Track a noisy simulated episode with the quaternion EKF from an exact
//! initial estimate and report steady-state accuracy.
//!
//! ```bash
//! cargo run --example ekf_tracking
//! ```

use rlc_ekf::filters::{run_estimator, EkfFilter};
use rlc_ekf::metrics::attitude_error_angle;
use rlc_ekf::sim::SimConfig;

fn main() -> rlc_ekf::Result<()> {
    let config = SimConfig::default();
    let record = config.generate(11)?;
    let truth = record.truth.clone().unwrap();

    // The filter assumes exactly the simulator's noise and reference vectors.
    let mut filter = EkfFilter::new(truth[0], config.matched_ekf_params());
    let estimates = run_estimator(&mut filter, &record)?;

    let errors: Vec<f64> = truth
        .iter()
        .zip(&estimates)
        .map(|(t, e)| attitude_error_angle(t, e))
        .collect();
    let n = errors.len();
    let steady = &errors[n / 2..];
    let rmse = (steady.iter().map(|e| e * e).sum::<f64>() / steady.len() as f64).sqrt();

    println!("steps: {n}, skipped corrections: {}", filter.skipped_corrections);
    println!("max error over the run:        {:.5} rad", errors.iter().fold(0.0_f64, |a, b| a.max(*b)));
    println!("steady-state RMSE (last half): {:.5} rad", rmse);
    let eigs = filter.state.cov.symmetric_eigenvalues();
    println!("final covariance eigenvalues:  {:?}", eigs.as_slice());
    Ok(())
}
