//! Procedural ground scene: a rolling terrain plane seen from a camera
//! pitched down towards it, with sky beyond the far clip.

use serde::{Deserialize, Serialize};

use crate::depth::stereo::rectify_pair;
use crate::depth::{CameraIntrinsics, DepthMap};
use crate::error::{Error, Result};
use crate::geometry::RelativePose;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Camera height above the mean ground plane, m.
    pub camera_height: f64,
    /// Downward tilt of the optical axis, rad.
    pub pitch: f64,
    /// Relative depth modulation of the terrain.
    pub relief: f64,
    /// Terrain modulation wavelengths in image columns and rows, px.
    pub relief_period: (f64, f64),
    /// m
    pub min_depth: f64,
    /// m
    pub max_depth: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            camera_height: 40.0,
            pitch: 0.28,
            relief: 0.08,
            relief_period: (173.0, 97.0),
            min_depth: 20.0,
            max_depth: 300.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.camera_height > 0.0
            && self.pitch.is_finite()
            && (0.0..1.0).contains(&self.relief)
            && self.relief_period.0 > 0.0
            && self.relief_period.1 > 0.0
            && self.min_depth > 0.0
            && self.max_depth > self.min_depth;
        if !ok {
            return Err(Error::Config("invalid scene parameters".into()));
        }
        Ok(())
    }

    /// Scene depth along the optical axis at image pixel `(u, v)`, if any.
    pub fn depth_at(&self, k: &CameraIntrinsics, u: f64, v: f64) -> Option<f64> {
        let y = (v - k.cy) / k.f;
        let den = y * self.pitch.cos() + self.pitch.sin();
        if den <= 0.0 {
            return None;
        }
        let tau = std::f64::consts::TAU;
        let bump = (tau * u / self.relief_period.0).sin() * (tau * v / self.relief_period.1).sin();
        let z = self.camera_height / den * (1.0 + self.relief * bump);
        (self.min_depth..=self.max_depth).contains(&z).then_some(z)
    }
}

/// Ground-truth depth map of the scene for the stereo pair `t_true`
/// (camera axes), sampled every `stride` pixels. Pixels whose match would
/// fall outside the second image are invalid.
pub fn render_scene(scene: &SceneConfig, k: &CameraIntrinsics, stride: usize, t_true: &RelativePose) -> Result<DepthMap> {
    scene.validate()?;
    k.validate()?;
    let stride = stride.max(1);
    let fb = k.f * rectify_pair(t_true)?.baseline;
    let (w, h) = (k.width.div_ceil(stride), k.height.div_ceil(stride));
    let mut map = DepthMap::invalid(w, h, stride);
    for i in 0..h {
        for j in 0..w {
            let (u, v) = map.pixel(i, j);
            let z = scene.depth_at(k, u, v).filter(|z| k.contains(u - fb / z, v));
            map.set(i, j, z);
        }
    }
    Ok(map)
}
