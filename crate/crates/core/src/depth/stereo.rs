use nalgebra::Matrix3;

use crate::depth::{CameraIntrinsics, DepthMap};
use crate::error::{Error, Result};
use crate::geometry::{rotmat_to_quat, Mat3, RelativePose, Vec3};

/// Rows map rig axes (x forward, y left, z up) to optical axes
/// (x right, y down, z forward).
const RIG_TO_CAMERA: Matrix3<f64> = Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);

/// Expresses a rig-frame relative pose in optical camera axes.
pub fn camera_pose_from_rig(t: &RelativePose) -> RelativePose {
    let m = RIG_TO_CAMERA;
    let r = m * t.rotation.to_rotation_matrix() * m.transpose();
    RelativePose::new(rotmat_to_quat(&r), m * t.translation)
}

/// Rectifying rotations (camera to rectified axes) and baseline length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rectification {
    pub rect1: Mat3,
    pub rect2: Mat3,
    /// m
    pub baseline: f64,
}

/// Rotates both cameras onto a common orientation whose x axis is the
/// baseline and whose z axis lies as close as possible to the mean optical
/// axis. `t` is the pose of camera 2 in camera 1.
pub fn rectify_pair(t: &RelativePose) -> Result<Rectification> {
    let b = t.translation.norm();
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument("rectification needs a non-zero baseline".into()));
    }
    let r = t.rotation.to_rotation_matrix();
    let e1 = t.translation / b;
    let z_mean = Vec3::z() + r * Vec3::z();
    let e2 = z_mean.cross(&e1);
    let n = e2.norm();
    if n < 1e-9 {
        return Err(Error::InvalidArgument("optical axes parallel to the baseline".into()));
    }
    let e2 = e2 / n;
    let e3 = e1.cross(&e2);
    let rect1 = Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]);
    Ok(Rectification { rect1, rect2: rect1 * r, baseline: b })
}

/// `z = f·b/d`
pub fn depth_from_disparity(f: f64, b: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("disparity {d} px is not positive")));
    }
    Ok(f * b / d)
}

/// Pixel shift between where a point appears in camera 2 and where the
/// assumed calibration predicts it, both in the assumed rectified image.
pub(crate) struct DisplacementModel {
    k: CameraIntrinsics,
    rect: Rectification,
    rect1_t: Mat3,
    true_rot_t: Mat3,
    true_p: Vec3,
    identical: bool,
}

impl DisplacementModel {
    pub(crate) fn new(t_true: &RelativePose, t_assumed: &RelativePose, k: &CameraIntrinsics) -> Result<Self> {
        k.validate()?;
        let rect = rectify_pair(t_assumed)?;
        Ok(Self {
            k: *k,
            rect,
            rect1_t: rect.rect1.transpose(),
            true_rot_t: t_true.rotation.to_rotation_matrix().transpose(),
            true_p: t_true.translation,
            identical: t_true == t_assumed,
        })
    }

    pub(crate) fn baseline(&self) -> f64 {
        self.rect.baseline
    }

    pub(crate) fn displacement(&self, u: f64, v: f64, z: f64) -> Result<(f64, f64)> {
        if !(z > 0.0) {
            return Err(Error::InvalidArgument(format!("depth {z} m is not positive")));
        }
        if self.identical {
            return Ok((0.0, 0.0));
        }
        let k = &self.k;
        let x_r = Vec3::new((u - k.cx) / k.f * z, (v - k.cy) / k.f * z, z);
        let x1 = self.rect1_t * x_r;
        let y = self.rect.rect2 * (self.true_rot_t * (x1 - self.true_p));
        if !(y.z > 0.0) {
            return Err(Error::OutOfDomain("point behind camera 2".into()));
        }
        let u2 = k.f * y.x / y.z + k.cx;
        let v2 = k.f * y.y / y.z + k.cy;
        let u2_assumed = u - k.f * self.rect.baseline / z;
        Ok((u2 - u2_assumed, v2 - v))
    }
}

/// `(dx, dy)` in px, true minus assumed, for the rectified camera-1 pixel
/// `(u, v)` seen at depth `z`.
pub fn epipolar_displacement(
    pixel: (f64, f64),
    z: f64,
    t_true: &RelativePose,
    t_assumed: &RelativePose,
    k: &CameraIntrinsics,
) -> Result<(f64, f64)> {
    DisplacementModel::new(t_true, t_assumed, k)?.displacement(pixel.0, pixel.1, z)
}

/// Depth a 1-D matcher would report when images are rectified with
/// `t_assumed` but taken with `t_true`. Matches fail where the vertical
/// displacement exceeds `v_thresh` px or the correspondence leaves image 2.
/// The observed disparity is `f·b̂/z − dx`, triangulated with the assumed
/// baseline length `b̂`.
pub fn synth_depth_map(
    gt: &DepthMap,
    t_true: &RelativePose,
    t_assumed: &RelativePose,
    k: &CameraIntrinsics,
    v_thresh: f64,
) -> Result<DepthMap> {
    if !(v_thresh > 0.0) {
        return Err(Error::InvalidArgument("v_thresh must be > 0".into()));
    }
    if t_true == t_assumed {
        return Ok(gt.clone());
    }
    let model = DisplacementModel::new(t_true, t_assumed, k)?;
    let fb = k.f * model.baseline();
    let mut out = DepthMap::invalid(gt.width(), gt.height(), gt.stride());
    for i in 0..gt.height() {
        for j in 0..gt.width() {
            let Some(z) = gt.get(i, j) else { continue };
            let (u, v) = gt.pixel(i, j);
            let Ok((dx, dy)) = model.displacement(u, v, z) else { continue };
            if !(dy.abs() <= v_thresh) {
                continue;
            }
            let d = fb / z - dx;
            if !(d > 0.0) || !k.contains(u - d, v + dy) {
                continue;
            }
            out.set(i, j, Some(fb / d));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{small_angle_to_quat, UnitQuaternion};
    use nalgebra::{Matrix3x4, Matrix4, Vector4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 3 m baseline, each rig yawed 8° inwards, rig axes.
    fn rig_nominal() -> RelativePose {
        RelativePose::new(
            UnitQuaternion::from_axis_angle(&Vec3::z(), 16f64.to_radians()),
            UnitQuaternion::from_axis_angle(&Vec3::z(), 8f64.to_radians()).rotate(&Vec3::new(0.0, -3.0, 0.0)),
        )
    }

    fn toe_in_pose() -> RelativePose {
        camera_pose_from_rig(&rig_nominal())
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> RelativePose {
        let th = Vec3::from_fn(|_, _| rng.random_range(-0.3..0.3));
        let p = Vec3::new(rng.random_range(1.0..4.0), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        RelativePose::new(small_angle_to_quat(&th), p)
    }

    #[test]
    fn rig_to_camera_axes() {
        let rig = RelativePose::new(UnitQuaternion::identity(), Vec3::new(0.0, -3.0, 0.0));
        let cam = camera_pose_from_rig(&rig);
        assert!((cam.translation - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-15);
        // roll about the rig's forward axis is rotation about the optical axis
        let roll = RelativePose::new(UnitQuaternion::from_axis_angle(&Vec3::x(), 0.1), Vec3::zeros());
        let axis = camera_pose_from_rig(&roll).rotation.log().unwrap();
        assert!((axis - Vec3::new(0.0, 0.0, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn rectify_pure_offset_is_identity() {
        let r = rectify_pair(&RelativePose::new(UnitQuaternion::identity(), Vec3::new(3.0, 0.0, 0.0))).unwrap();
        assert!((r.rect1 - Mat3::identity()).amax() < 1e-15);
        assert!((r.rect2 - Mat3::identity()).amax() < 1e-15);
        assert_eq!(r.baseline, 3.0);
    }

    #[test]
    fn rectify_removes_toe_in() {
        let t = toe_in_pose();
        let r = rectify_pair(&t).unwrap();
        assert!((r.rect1 * t.translation - Vec3::new(r.baseline, 0.0, 0.0)).amax() < 1e-12);
        assert!((r.baseline - 3.0).abs() < 1e-12);
        // rectified optical axis is the mean of the two toed-in axes
        let fwd = r.rect1.transpose() * Vec3::z();
        assert!(fwd.x < 0.0 && (fwd.angle(&Vec3::z()) - 8f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn rectify_random_poses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = random_pose(&mut rng);
            let r = rectify_pair(&t).unwrap();
            let rel = r.rect1 * t.rotation.to_rotation_matrix() * r.rect2.transpose();
            assert!((rel - Mat3::identity()).amax() < 1e-12);
            assert!((r.rect1 * t.translation - Vec3::new(r.baseline, 0.0, 0.0)).amax() < 1e-12);
            assert!(((r.rect1 * r.rect1.transpose()) - Mat3::identity()).amax() < 1e-12);
            assert!((r.rect1.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rectify_degenerate() {
        assert!(rectify_pair(&RelativePose::default()).is_err());
        assert!(rectify_pair(&RelativePose::new(UnitQuaternion::identity(), Vec3::new(0.0, 0.0, 2.0))).is_err());
    }

    #[test]
    fn disparity_to_depth() {
        assert_eq!(depth_from_disparity(600.0, 3.0, 12.0).unwrap(), 150.0);
        assert!((depth_from_disparity(600.0, 3.0, 140.0).unwrap() - 12.857142857142858).abs() < 1e-12);
        let a = depth_from_disparity(600.0, 3.0, 20.0).unwrap();
        assert_eq!(depth_from_disparity(600.0, 3.0, 40.0).unwrap(), a / 2.0);
        assert!(depth_from_disparity(600.0, 3.0, 0.0).is_err());
        assert!(depth_from_disparity(600.0, 3.0, -1.0).is_err());
    }

    /// Independent projection with 3x4 camera matrices in homogeneous
    /// coordinates.
    fn homogeneous_displacement(
        u: f64,
        v: f64,
        z: f64,
        t_true: &RelativePose,
        t_assumed: &RelativePose,
        k: &CameraIntrinsics,
    ) -> (f64, f64) {
        let kk = Matrix3::new(k.f, 0.0, k.cx, 0.0, k.f, k.cy, 0.0, 0.0, 1.0);
        let rect = rectify_pair(t_assumed).unwrap();
        let to4 = |r: &Mat3, t: &Vec3| {
            let mut m = Matrix4::identity();
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
            m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
            m
        };
        // world = rectified camera-1 frame; camera-i-from-world transforms
        let cam1_from_world = to4(&rect.rect1.transpose(), &Vec3::zeros());
        let pose = |t: &RelativePose| {
            let r = t.rotation.to_rotation_matrix();
            to4(&r, &t.translation).try_inverse().unwrap() * cam1_from_world
        };
        let rect2_from_cam2 = to4(&rect.rect2, &Vec3::zeros());
        let project = |m: &Matrix4<f64>, x: &Vector4<f64>| {
            let p: Matrix3x4<f64> = kk * (rect2_from_cam2 * m).fixed_view::<3, 4>(0, 0);
            let h = p * x;
            (h.x / h.z, h.y / h.z)
        };
        let ray = kk.try_inverse().unwrap() * Vec3::new(u, v, 1.0);
        let x = Vector4::new(ray.x * z, ray.y * z, ray.z * z, 1.0);
        let (ut, vt) = project(&pose(t_true), &x);
        let (ua, va) = project(&pose(t_assumed), &x);
        (ut - ua, vt - va)
    }

    #[test]
    fn displacement_matches_homogeneous_projection() {
        let k = CameraIntrinsics::default();
        let rig = rig_nominal();
        let rolled =
            RelativePose::new(rig.rotation * UnitQuaternion::from_axis_angle(&Vec3::x(), 0.5f64.to_radians()), rig.translation);
        let (truth, assumed) = (camera_pose_from_rig(&rolled), camera_pose_from_rig(&rig));
        for (u, v) in [(359.5, 0.0), (359.5, 479.0), (0.0, 100.0), (719.0, 300.0)] {
            let (dx, dy) = epipolar_displacement((u, v), 100.0, &truth, &assumed, &k).unwrap();
            let (hx, hy) = homogeneous_displacement(u, v, 100.0, &truth, &assumed, &k);
            assert!((dx - hx).abs() < 1e-8 && (dy - hy).abs() < 1e-8, "{dx} {dy} vs {hx} {hy}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let a = random_pose(&mut rng);
            let dev = RelativePose::new(
                a.rotation * small_angle_to_quat(&Vec3::from_fn(|_, _| rng.random_range(-0.02..0.02))),
                a.translation + Vec3::from_fn(|_, _| rng.random_range(-0.05..0.05)),
            );
            let (u, v) = (rng.random_range(0.0..720.0), rng.random_range(0.0..480.0));
            let z = rng.random_range(20.0..300.0);
            let (dx, dy) = epipolar_displacement((u, v), z, &dev, &a, &k).unwrap();
            let (hx, hy) = homogeneous_displacement(u, v, z, &dev, &a, &k);
            assert!((dx - hx).abs() < 1e-8 && (dy - hy).abs() < 1e-8);
        }
    }

    #[test]
    fn displacement_identity_and_small_translation() {
        let k = CameraIntrinsics::default();
        let t = toe_in_pose();
        assert_eq!(epipolar_displacement((100.0, 200.0), 50.0, &t, &t, &k).unwrap(), (0.0, 0.0));
        // 15 mm rig z offset, which is the optical -y axis
        let moved = RelativePose::new(t.rotation, t.translation + Vec3::new(0.0, -0.015, 0.0));
        for (u, v) in [(0.0, 0.0), (359.5, 239.5), (719.0, 479.0)] {
            let (_, dy) = epipolar_displacement((u, v), 13.0, &moved, &t, &k).unwrap();
            assert!(dy.abs() < 1.0);
        }
        assert!(epipolar_displacement((0.0, 0.0), 0.0, &moved, &t, &k).is_err());
    }

    fn flat_gt(k: &CameraIntrinsics, z: f64, stride: usize) -> DepthMap {
        let (w, h) = (k.width / stride, k.height / stride);
        DepthMap::from_depths(w, h, stride, vec![z; w * h]).unwrap()
    }

    #[test]
    fn synth_identity_is_exact() {
        let k = CameraIntrinsics::default();
        let t = toe_in_pose();
        let gt = flat_gt(&k, 87.3, 8);
        assert_eq!(synth_depth_map(&gt, &t, &t, &k, 1.0).unwrap(), gt);
    }

    #[test]
    fn large_roll_invalidates_borders() {
        let k = CameraIntrinsics::default();
        let rig = rig_nominal();
        let rolled = RelativePose::new(rig.rotation * UnitQuaternion::from_axis_angle(&Vec3::x(), 2f64.to_radians()), rig.translation);
        let (t, a) = (camera_pose_from_rig(&rolled), camera_pose_from_rig(&rig));
        let gt = flat_gt(&k, 120.0, 4);
        let d = synth_depth_map(&gt, &t, &a, &k, 1.0).unwrap();
        let invalid = 1.0 - d.valid_count() as f64 / gt.valid_count() as f64;
        assert!(invalid > 0.5);
        let counts: Vec<usize> = (0..d.width()).map(|j| (0..d.height()).filter(|&i| d.is_valid(i, j)).count()).collect();
        let w = counts.len();
        let (left, right) = (&counts[..w / 4], &counts[3 * w / 4..]);
        let middle: usize = counts[w / 4..3 * w / 4].iter().sum();
        assert!(middle > 10 * (left.iter().sum::<usize>() + right.iter().sum::<usize>()));
    }

    #[test]
    fn yaw_error_bias_grows_with_depth() {
        let k = CameraIntrinsics::default();
        let t = camera_pose_from_rig(&RelativePose::new(UnitQuaternion::identity(), Vec3::new(0.0, -3.0, 0.0)));
        // rig yaw is rotation about the optical vertical axis
        let yawed = RelativePose::new(UnitQuaternion::from_axis_angle(&Vec3::y(), 0.0005), t.translation);
        let mut last = 0.0;
        for z in [20.0, 50.0, 100.0, 150.0, 250.0] {
            let model = DisplacementModel::new(&yawed, &t, &k).unwrap();
            let (dx, _) = model.displacement(359.5, 239.5, z).unwrap();
            let d = k.f * 3.0 / z - dx;
            let bias = (k.f * 3.0 / d - z).abs();
            assert!(bias > last);
            last = bias;
        }
    }
}
