//! The shared CSV episode format for simulated and real data.
//!
//! Header: `t,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,mag_x,mag_y,mag_z`
//! optionally followed by `qw,qx,qy,qz` when ground truth is available.
//! Units: seconds, rad/s, normalized direction components. UTF-8, decimal
//! point, comma separator, LF line endings. Floats are written in shortest
//! round-trip form, so export → ingest reproduces the record exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rotation::Quaternion;
use crate::sim::{EpisodeRecord, MeasurementFrame};

pub const MEASUREMENT_COLUMNS: [&str; 10] = [
    "t", "gyro_x", "gyro_y", "gyro_z", "acc_x", "acc_y", "acc_z", "mag_x", "mag_y", "mag_z",
];
pub const TRUTH_COLUMNS: [&str; 4] = ["qw", "qx", "qy", "qz"];

/// Maximum relative deviation of any sample period from the median before a
/// dataset is rejected as non-uniform.
const PERIOD_TOLERANCE: f64 = 0.01;

/// Write an episode to CSV; truth columns are included when the record has
/// ground truth.
pub fn write_episode_csv(record: &EpisodeRecord, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut header: Vec<&str> = MEASUREMENT_COLUMNS.to_vec();
    if record.truth.is_some() {
        header.extend_from_slice(&TRUTH_COLUMNS);
    }
    writer
        .write_record(&header)
        .map_err(|e| Error::Data(e.to_string()))?;
    for (i, frame) in record.frames.iter().enumerate() {
        let mut row: Vec<String> = vec![
            frame.t.to_string(),
            frame.gyro.x.to_string(),
            frame.gyro.y.to_string(),
            frame.gyro.z.to_string(),
            frame.accel.x.to_string(),
            frame.accel.y.to_string(),
            frame.accel.z.to_string(),
            frame.mag.x.to_string(),
            frame.mag.y.to_string(),
            frame.mag.z.to_string(),
        ];
        if let Some(truth) = &record.truth {
            let q = truth[i];
            row.extend([q.w.to_string(), q.x.to_string(), q.y.to_string(), q.z.to_string()]);
        }
        writer.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Read and validate an episode CSV: required columns present, all values
/// finite (rows with NaN are reported with their line numbers), timestamps
/// strictly increasing, and the sample period uniform within 1%.
pub fn ingest_dataset(path: &Path) -> Result<EpisodeRecord> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(e.to_string()))?
        .clone();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = MEASUREMENT_COLUMNS
        .iter()
        .copied()
        .filter(|c| position(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "{}: missing required columns: {}",
            path.display(),
            missing.join(", ")
        )));
    }
    let meas_idx: Vec<usize> = MEASUREMENT_COLUMNS
        .iter()
        .map(|c| position(c).unwrap())
        .collect();
    let truth_found: Vec<&str> = TRUTH_COLUMNS
        .iter()
        .copied()
        .filter(|c| position(c).is_some())
        .collect();
    let truth_idx: Option<Vec<usize>> = if truth_found.len() == TRUTH_COLUMNS.len() {
        Some(TRUTH_COLUMNS.iter().map(|c| position(c).unwrap()).collect())
    } else if truth_found.is_empty() {
        None
    } else {
        return Err(Error::Data(format!(
            "{}: partial ground-truth columns (found only: {})",
            path.display(),
            truth_found.join(", ")
        )));
    };

    let mut frames = Vec::new();
    let mut truth = truth_idx.as_ref().map(|_| Vec::new());
    let mut bad_lines = Vec::new();
    for (row_number, row) in reader.records().enumerate() {
        let line = row_number + 2; // header is line 1
        let row = row.map_err(|e| Error::Data(format!("{}: line {line}: {e}", path.display())))?;
        let parse = |idx: usize| -> Result<f64> {
            row.get(idx)
                .ok_or_else(|| {
                    Error::Data(format!("{}: line {line}: short row", path.display()))
                })?
                .parse::<f64>()
                .map_err(|e| Error::Data(format!("{}: line {line}: {e}", path.display())))
        };
        let mut values = [0.0; 10];
        let mut finite = true;
        for (slot, &idx) in values.iter_mut().zip(&meas_idx) {
            *slot = parse(idx)?;
            finite &= slot.is_finite();
        }
        let q = if let Some(idx) = &truth_idx {
            let mut qv = [0.0; 4];
            for (slot, &i) in qv.iter_mut().zip(idx) {
                *slot = parse(i)?;
                finite &= slot.is_finite();
            }
            Some(Quaternion::new(qv[0], qv[1], qv[2], qv[3]))
        } else {
            None
        };
        if !finite {
            bad_lines.push(line);
            continue;
        }
        frames.push(MeasurementFrame {
            t: values[0],
            gyro: nalgebra::Vector3::new(values[1], values[2], values[3]),
            accel: nalgebra::Vector3::new(values[4], values[5], values[6]),
            mag: nalgebra::Vector3::new(values[7], values[8], values[9]),
        });
        if let (Some(ts), Some(q)) = (truth.as_mut(), q) {
            ts.push(q);
        }
    }
    if !bad_lines.is_empty() {
        let shown: Vec<String> = bad_lines.iter().take(10).map(|l| l.to_string()).collect();
        return Err(Error::Data(format!(
            "{}: {} rows with non-finite values (lines {}{})",
            path.display(),
            bad_lines.len(),
            shown.join(", "),
            if bad_lines.len() > 10 { ", …" } else { "" }
        )));
    }
    if frames.len() < 2 {
        return Err(Error::Data(format!(
            "{}: an episode needs at least two rows",
            path.display()
        )));
    }

    let mut periods: Vec<f64> = frames.windows(2).map(|w| w[1].t - w[0].t).collect();
    for (i, p) in periods.iter().enumerate() {
        if *p <= 0.0 {
            return Err(Error::Data(format!(
                "{}: timestamps not strictly increasing at line {}",
                path.display(),
                i + 3
            )));
        }
    }
    periods.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = periods[periods.len() / 2];
    for (i, w) in frames.windows(2).enumerate() {
        let p = w[1].t - w[0].t;
        if ((p - median) / median).abs() > PERIOD_TOLERANCE {
            return Err(Error::Data(format!(
                "{}: sample period {p:.6e} at line {} deviates more than 1% from the median {median:.6e}",
                path.display(),
                i + 3
            )));
        }
    }

    Ok(EpisodeRecord {
        dt: median,
        truth,
        frames,
        seed: None,
    })
}

/// Split a record into equal train/inference halves, the protocol used for
/// real logs.
pub fn split_halves(record: &EpisodeRecord) -> (EpisodeRecord, EpisodeRecord) {
    let mid = record.frames.len() / 2;
    (record.window(0, mid), record.window(mid, record.frames.len()))
}
