//! Train one compensation policy at a small budget, compare it against the
//! zero policy, and round-trip it through the policy file format.
//!
//! Takes a couple of minutes. For the full selection protocol over many
//! policies use the `train` subcommand of the CLI.
//!
//! ```bash
//! cargo run --release --example train_compensator
//! ```

use rlc_ekf::rl::{train, validation_cost, CompensatorPolicy, TrainingConfig};
use rlc_ekf::sim::SimConfig;

fn main() -> rlc_ekf::Result<()> {
    let sim = SimConfig::default();
    let params = sim.matched_ekf_params();
    let config = TrainingConfig {
        phases: 12,
        episodes_per_phase: 8,
        grad_steps_per_phase: 250,
        behavior_freeze_phases: 4,
        validation_episodes: 10,
        ..TrainingConfig::default()
    };

    let zero = CompensatorPolicy::zeroed(config.u_max, config.discount);
    let zero_cost = validation_cost(&zero, &sim, &params, 10, 99)?;
    println!("plain-EKF (zero policy) validation cost: {zero_cost:.5}");

    println!(
        "training: {} phases x {} episodes, {} gradient steps per phase ...",
        config.phases, config.episodes_per_phase, config.grad_steps_per_phase
    );
    let start = std::time::Instant::now();
    let (policy, log) = train(&sim, &params, &config, 1)?;
    println!("trained in {:.0} s", start.elapsed().as_secs_f64());
    println!("per-phase mean episode costs:");
    for (i, c) in log.phase_costs.iter().enumerate() {
        println!("  phase {i:>2}: {c:.5}");
    }

    let cost = validation_cost(&policy, &sim, &params, 10, 99)?;
    println!("trained policy validation cost: {cost:.5} ({:.1}% of zero policy)", 100.0 * cost / zero_cost);

    let path = std::env::temp_dir().join("rlc_ekf_policy.rlc");
    policy.save(&path)?;
    let loaded = CompensatorPolicy::load(&path)?;
    assert_eq!(policy.to_bytes(), loaded.to_bytes());
    println!("policy saved to {} and reloaded bit-identically", path.display());
    Ok(())
}
