//! Generate a simulated IMU episode and export it to the shared CSV format.
//!
//! ```bash
//! cargo run --example simulate_episode
//! ```

use rlc_ekf::bench::dataset::write_episode_csv;
use rlc_ekf::sim::{AngularVelocityProfile, NoiseModel, SimConfig};

fn main() -> rlc_ekf::Result<()> {
    let config = SimConfig {
        duration_s: 5.0,
        profile: AngularVelocityProfile::training_default(),
        noise: NoiseModel::default(),
        ..SimConfig::default()
    };

    let record = config.generate(7)?;
    let truth = record.truth.as_ref().unwrap();
    println!(
        "episode: {} frames at {:.0} Hz ({:.1} s), seed {:?}",
        record.len(),
        1.0 / record.dt,
        record.duration(),
        record.seed
    );
    println!(
        "initial attitude (yaw, pitch, roll): {:.3?} rad",
        truth[0].to_euler()
    );

    let f = &record.frames[42];
    println!(
        "frame 42: gyro {:.4?}  accel {:.4?}  mag {:.4?}",
        f.gyro.as_slice(),
        f.accel.as_slice(),
        f.mag.as_slice()
    );

    let path = std::env::temp_dir().join("rlc_ekf_episode.csv");
    write_episode_csv(&record, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
