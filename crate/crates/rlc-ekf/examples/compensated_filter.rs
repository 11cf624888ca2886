//! Step the compensated filter next to the plain EKF on the same episode.
//! With a zero policy the two are bit-identical; with a trained policy the
//! compensation stage pulls the estimate toward the measurements whenever
//! the innovation is error-dominated.
//!
//! ```bash
//! cargo run --example compensated_filter [policy.rlc]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rlc_ekf::filters::{run_estimator, EkfFilter, RlcEkfFilter};
use rlc_ekf::metrics::attitude_error_angle;
use rlc_ekf::rl::CompensatorPolicy;
use rlc_ekf::sim::{derive_seed, sample_initial_quaternion, SimConfig};

fn main() -> rlc_ekf::Result<()> {
    let policy = match std::env::args().nth(1) {
        Some(path) => {
            println!("loading policy from {path}");
            CompensatorPolicy::load(std::path::Path::new(&path))?
        }
        None => {
            println!("no policy argument; using the zero policy (identical to the EKF)");
            CompensatorPolicy::zeroed(1.0, 0.99)
        }
    };

    let config = SimConfig::default();
    let seed = 17;
    let record = config.generate(seed)?;
    let truth = record.truth.clone().unwrap();
    let params = config.matched_ekf_params();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 11));
    let q0 = sample_initial_quaternion(&mut rng);

    let mut ekf = EkfFilter::new(q0, params.clone());
    let mut rlc = RlcEkfFilter::new(q0, params, policy);
    let plain = run_estimator(&mut ekf, &record)?;
    let compensated = run_estimator(&mut rlc, &record)?;

    println!("{:>6} {:>12} {:>12}", "t [s]", "EKF err", "RLC-EKF err");
    for t in (0..record.len()).step_by(100) {
        println!(
            "{:>6.2} {:>12.5} {:>12.5}",
            record.frames[t].t,
            attitude_error_angle(&truth[t], &plain[t]),
            attitude_error_angle(&truth[t], &compensated[t]),
        );
    }
    Ok(())
}
