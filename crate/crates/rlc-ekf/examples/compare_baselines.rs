//! Run the EKF, the complementary filter and raw gyro integration over the
//! same episode from the same coarse initial estimate.
//!
//! ```bash
//! cargo run --example compare_baselines
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rlc_ekf::filters::{run_estimator, AttitudeEstimator, CfFilter, EkfFilter, GyroFilter};
use rlc_ekf::metrics::{attitude_error_angle, convergence_time};
use rlc_ekf::sim::{derive_seed, sample_initial_quaternion, SimConfig};

fn main() -> rlc_ekf::Result<()> {
    let config = SimConfig {
        duration_s: 20.0,
        ..SimConfig::default()
    };
    let seed = 3;
    let record = config.generate(seed)?;
    let truth = record.truth.clone().unwrap();
    let params = config.matched_ekf_params();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 11));
    let q0 = sample_initial_quaternion(&mut rng);
    println!(
        "initial estimation error: {:.3} rad",
        attitude_error_angle(&truth[0], &q0)
    );

    let mut filters: Vec<(&str, Box<dyn AttitudeEstimator>)> = vec![
        ("EKF", Box::new(EkfFilter::new(q0, params.clone()))),
        ("CF (beta 0.041)", Box::new(CfFilter::new(q0, 0.041, params.clone()))),
        ("gyro only", Box::new(GyroFilter::new(q0))),
    ];

    let times: Vec<f64> = record.frames.iter().map(|f| f.t).collect();
    println!("{:<16} {:>12} {:>14}", "filter", "conv [s]", "final err [rad]");
    for (name, filter) in filters.iter_mut() {
        let estimates = run_estimator(filter.as_mut(), &record)?;
        let total: Vec<f64> = truth
            .iter()
            .zip(&estimates)
            .map(|(t, e)| attitude_error_angle(t, e))
            .collect();
        let conv = convergence_time(&times, &total, 0.1)
            .map(|t| format!("{t:.2}"))
            .unwrap_or_else(|| "never".into());
        println!("{name:<16} {conv:>12} {:>14.4}", total.last().unwrap());
    }
    Ok(())
}
