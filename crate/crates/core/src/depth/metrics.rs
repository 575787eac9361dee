use serde::{Deserialize, Serialize};

use crate::depth::DepthMap;
use crate::error::{Error, Result};

/// Comparison of an estimated depth map against ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthErrorReport {
    /// Δ#: fraction of ground-truth-valid pixels lost in the estimate.
    pub completeness: f64,
    /// Δz: RMS depth error over jointly valid pixels, m; `None` if there are none.
    pub accuracy: Option<f64>,
    pub gt_valid: usize,
    pub overlap: usize,
}

fn same_shape(d: &DepthMap, e: &DepthMap) -> Result<()> {
    if d.width() != e.width() || d.height() != e.height() {
        return Err(Error::InvalidArgument(format!(
            "depth maps differ in size: {}x{} vs {}x{}",
            d.width(),
            d.height(),
            e.width(),
            e.height()
        )));
    }
    Ok(())
}

/// Δ#: pixels valid in `d` but invalid in `e`, over pixels valid in `d`.
pub fn completeness_error(d: &DepthMap, e: &DepthMap) -> Result<f64> {
    same_shape(d, e)?;
    let (mut valid, mut lost) = (0usize, 0usize);
    for (a, b) in d.depths().iter().zip(e.depths()) {
        if !a.is_nan() {
            valid += 1;
            lost += b.is_nan() as usize;
        }
    }
    if valid == 0 {
        return Err(Error::InvalidArgument("ground truth has no valid pixels".into()));
    }
    Ok(lost as f64 / valid as f64)
}

/// Δz: `sqrt(mean((d − e)²))` over pixels valid in both maps.
pub fn accuracy_error(d: &DepthMap, e: &DepthMap) -> Result<f64> {
    same_shape(d, e)?;
    let (mut n, mut sum) = (0usize, 0.0);
    for (a, b) in d.depths().iter().zip(e.depths()) {
        if !a.is_nan() && !b.is_nan() {
            n += 1;
            sum += (a - b) * (a - b);
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no jointly valid pixels".into()));
    }
    Ok((sum / n as f64).sqrt())
}

pub fn evaluate_depth(d: &DepthMap, e: &DepthMap) -> Result<DepthErrorReport> {
    let completeness = completeness_error(d, e)?;
    let overlap = d.depths().iter().zip(e.depths()).filter(|(a, b)| !a.is_nan() && !b.is_nan()).count();
    let accuracy = if overlap > 0 { Some(accuracy_error(d, e)?) } else { None };
    Ok(DepthErrorReport { completeness, accuracy, gt_valid: d.valid_count(), overlap })
}
