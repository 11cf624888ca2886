//! Export an episode, ingest it back, and show what dataset validation
//! rejects.
//!
//! ```bash
//! cargo run --example ingest_dataset
//! ```

use std::io::Write;

use rlc_ekf::bench::dataset::{ingest_dataset, split_halves, write_episode_csv};
use rlc_ekf::sim::SimConfig;

fn main() -> rlc_ekf::Result<()> {
    let record = SimConfig::default().generate(21)?;
    let dir = std::env::temp_dir();
    let good = dir.join("rlc_ekf_good.csv");
    write_episode_csv(&record, &good)?;

    let back = ingest_dataset(&good)?;
    println!(
        "{}: {} frames at {:.1} Hz, truth {}",
        good.display(),
        back.len(),
        1.0 / back.dt,
        if back.truth.is_some() { "present" } else { "absent" }
    );
    let (train, eval) = split_halves(&back);
    println!("train/inference split: {} + {} frames", train.len(), eval.len());

    // A file with a hole in it is rejected with the offending line.
    let bad = dir.join("rlc_ekf_bad.csv");
    let text = std::fs::read_to_string(&good)?;
    let mut out = std::fs::File::create(&bad)?;
    for (i, line) in text.lines().enumerate() {
        if i == 5 {
            let mut fields: Vec<&str> = line.split(',').collect();
            fields[1] = "NaN";
            writeln!(out, "{}", fields.join(","))?;
        } else {
            writeln!(out, "{line}")?;
        }
    }
    drop(out);
    match ingest_dataset(&bad) {
        Err(e) => println!("corrupted file rejected: {e}"),
        Ok(_) => println!("unexpected: corrupted file accepted"),
    }
    Ok(())
}
