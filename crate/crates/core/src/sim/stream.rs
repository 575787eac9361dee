//! Stream dump: JSON Lines, one record per IMU epoch.
//!
//! ```text
//! {"t":0.0,"truth":{"rotation":[w,x,y,z],"translation":[x,y,z]},"imu":{...},"vision":null}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ekf::ImuPair;
use crate::error::{Error, Result};
use crate::geometry::RelativePose;
use crate::prior::VisualMeasurement;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub t: f64,
    pub truth: RelativePose,
    pub imu: ImuPair,
    pub vision: Option<VisualMeasurement>,
}

pub fn write_stream(path: &Path, records: &[StreamRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::parse(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_stream(path: &Path) -> Result<Vec<StreamRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: StreamRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1)))?;
        out.push(r);
    }
    if out.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::parse(path, "timestamps must be strictly increasing"));
    }
    Ok(out)
}
