//! Per-step CSV log.
//!
//! Columns: `t, x, y, phi, x_ref, y_ref, phi_ref`, then for every wheel `ij`
//! (axle `i`, side `j`, both from 1) `delta_ij, omega_w_ij, omega_s_ij`, then
//! `P_s, P_alpha, P_t, J, sa_iters, clamped`. Reals carry 12 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::state::{ControlVector, Pose};
use crate::tire::WearPower;

use super::runner::LogRow;

const POSE_COLUMNS: [&str; 7] = ["t", "x", "y", "phi", "x_ref", "y_ref", "phi_ref"];
const TAIL_COLUMNS: [&str; 6] = ["P_s", "P_alpha", "P_t", "J", "sa_iters", "clamped"];

pub fn header(axle_count: usize) -> Vec<String> {
    let mut cols: Vec<String> = POSE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for i in 1..=axle_count {
        for j in 1..=2 {
            cols.push(format!("delta_{i}{j}"));
            cols.push(format!("omega_w_{i}{j}"));
            cols.push(format!("omega_s_{i}{j}"));
        }
    }
    cols.extend(TAIL_COLUMNS.iter().map(|s| s.to_string()));
    cols
}

fn real(v: f64) -> String {
    format!("{v:.11e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::input(format!("csv: {other:?}")),
    }
}

pub fn write_log<W: Write>(out: W, rows: &[LogRow], axle_count: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(axle_count)).map_err(csv_err)?;
    let mut record = Vec::new();
    for row in rows {
        record.clear();
        for v in [row.t, row.pose.x, row.pose.y, row.pose.heading] {
            record.push(real(v));
        }
        for v in [row.reference.x, row.reference.y, row.reference.heading] {
            record.push(real(v));
        }
        for i in 0..axle_count {
            for j in 0..2 {
                record.push(real(row.steer_angles[i][j]));
                record.push(real(row.control.drive_rates[i][j]));
                record.push(real(row.control.steer_rates[i][j]));
            }
        }
        for v in row.wear.as_array() {
            record.push(real(v));
        }
        record.push(real(row.cost));
        record.push(row.sa_iters.to_string());
        record.push(u8::from(row.clamped).to_string());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log_file(path: &Path, rows: &[LogRow], axle_count: usize) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_log(std::io::BufWriter::new(file), rows, axle_count)
}

/// Reads a log written by [`write_log`]; the axle count follows from the header.
pub fn read_log<R: Read>(input: R) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_reader(input);
    let cols = r.headers().map_err(csv_err)?.len();
    let fixed = POSE_COLUMNS.len() + TAIL_COLUMNS.len();
    if cols < fixed || !(cols - fixed).is_multiple_of(6) {
        return Err(Error::input(format!("unexpected column count {cols}")));
    }
    let n = (cols - fixed) / 6;
    let expected = header(n);
    if r.headers().map_err(csv_err)?.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::input("unexpected header"));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| Error::input(format!("row {}: bad number in column {}", line + 1, expected[k])))
        };
        let mut steer_angles = vec![[0.0; 2]; n];
        let mut control = ControlVector::zeros(n);
        let mut k = POSE_COLUMNS.len();
        for i in 0..n {
            for j in 0..2 {
                steer_angles[i][j] = num(k)?;
                control.drive_rates[i][j] = num(k + 1)?;
                control.steer_rates[i][j] = num(k + 2)?;
                k += 3;
            }
        }
        let sa_iters = rec[k + 4]
            .parse()
            .map_err(|_| Error::input(format!("row {}: bad sa_iters", line + 1)))?;
        rows.push(LogRow {
            t: num(0)?,
            pose: Pose::new(num(1)?, num(2)?, num(3)?),
            reference: Pose::new(num(4)?, num(5)?, num(6)?),
            steer_angles,
            control,
            wear: WearPower::new(num(k)?, num(k + 1)?, num(k + 2)?),
            cost: num(k + 3)?,
            sa_iters,
            clamped: &rec[k + 5] == "1",
        });
    }
    Ok(rows)
}

pub fn read_log_file(path: &Path) -> Result<Vec<LogRow>> {
    read_log(std::io::BufReader::new(std::fs::File::open(path)?))
}
