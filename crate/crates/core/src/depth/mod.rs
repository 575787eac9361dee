//! Stereo depth under baseline error: rectification, epipolar displacement,
//! synthetic depth maps and the completeness/accuracy metrics.
//!
//! Cameras use optical axes (x right, y down, z forward). Rig poses from the
//! filter (x forward, y left, z up) are converted with [`camera_pose_from_rig`].

pub mod metrics;
pub mod scene;
pub mod stereo;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use metrics::{accuracy_error, completeness_error, evaluate_depth, DepthErrorReport};
pub use scene::{render_scene, SceneConfig};
pub use stereo::{
    camera_pose_from_rig, depth_from_disparity, epipolar_displacement, rectify_pair, synth_depth_map, Rectification,
};

const MAGIC: &[u8; 4] = b"DMAP";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraIntrinsics {
    /// px
    pub f: f64,
    pub width: usize,
    pub height: usize,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self { f: 600.0, width: 720, height: 480, cx: 359.5, cy: 239.5 }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0) || self.width == 0 || self.height == 0 || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidArgument("camera needs f > 0 and non-zero size".into()));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }
}

/// Depth on a pixel grid sampled every `stride` pixels of the full image:
/// entry `(i, j)` belongs to image pixel `(u, v) = (j·stride, i·stride)`.
/// Invalid entries hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    stride: usize,
    depth: Vec<f64>,
}

impl DepthMap {
    pub fn invalid(width: usize, height: usize, stride: usize) -> Self {
        Self { width, height, stride: stride.max(1), depth: vec![f64::NAN; width * height] }
    }

    /// Row-major depths; non-finite or non-positive values become invalid.
    pub fn from_depths(width: usize, height: usize, stride: usize, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} depths for a {width}x{height} map",
                depth.len()
            )));
        }
        let depth = depth.into_iter().map(|z| if z.is_finite() && z > 0.0 { z } else { f64::NAN }).collect();
        Ok(Self { width, height, stride: stride.max(1), depth })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Image coordinates of entry `(i, j)`.
    pub fn pixel(&self, i: usize, j: usize) -> (f64, f64) {
        ((j * self.stride) as f64, (i * self.stride) as f64)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let z = self.depth[i * self.width + j];
        (!z.is_nan()).then_some(z)
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        !self.depth[i * self.width + j].is_nan()
    }

    pub fn set(&mut self, i: usize, j: usize, z: Option<f64>) {
        self.depth[i * self.width + j] = match z {
            Some(z) if z.is_finite() && z > 0.0 => z,
            _ => f64::NAN,
        };
    }

    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|z| !z.is_nan()).count()
    }

    pub fn mean_valid_depth(&self) -> Option<f64> {
        let n = self.valid_count();
        (n > 0).then(|| self.depth.iter().filter(|z| !z.is_nan()).sum::<f64>() / n as f64)
    }

    /// Binary layout, little endian:
    /// `"DMAP"`, u32 width, u32 height, u32 stride, then width·height f32
    /// depths row by row (NaN = invalid).
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |b: &[u8]| w.write_all(b).map_err(|e| Error::io(path, e));
        put(MAGIC)?;
        for n in [self.width, self.height, self.stride] {
            put(&(n as u32).to_le_bytes())?;
        }
        for z in &self.depth {
            put(&(*z as f32).to_le_bytes())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::parse(path, "not a depth map (bad magic)"));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
        let (width, height, stride) = (word(0), word(1), word(2));
        let body = &bytes[16..];
        if body.len() != 4 * width * height {
            return Err(Error::parse(path, format!("expected {} depth bytes, found {}", 4 * width * height, body.len())));
        }
        let depth = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        DepthMap::from_depths(width, height, stride, depth)
    }
}
