//! Renders the scene for one true rig pose, simulates stereo matching with a
//! perturbed baseline and reports the depth error. Writes both maps.
//!
//! cargo run --release --example depth_error -- [roll error, deg] [out dir]

use std::path::PathBuf;

use flexstereo::depth::{camera_pose_from_rig, evaluate_depth, render_scene, synth_depth_map};
use flexstereo::geometry::{small_angle_to_quat, RelativePose, Vec3};
use flexstereo::harness::DepthSettings;
use flexstereo::sim::RigGeometry;

fn main() -> flexstereo::Result<()> {
    let mut args = std::env::args().skip(1);
    let roll_deg: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "depth-out".into()));

    let d = DepthSettings::default();
    let truth = RigGeometry::default().nominal();
    let assumed = RelativePose::new(
        truth.rotation * small_angle_to_quat(&Vec3::new(roll_deg.to_radians(), 0.0, 0.0)),
        truth.translation,
    );
    let (t_true, t_assumed) = (camera_pose_from_rig(&truth), camera_pose_from_rig(&assumed));
    let gt = render_scene(&d.scene, &d.camera, d.pixel_stride, &t_true)?;
    let est = synth_depth_map(&gt, &t_true, &t_assumed, &d.camera, d.v_thresh)?;
    let r = evaluate_depth(&gt, &est)?;

    println!("roll error     {roll_deg} deg");
    println!("mean gt depth  {:.1} m", gt.mean_valid_depth().unwrap_or(f64::NAN));
    println!("completeness   {:.3}", r.completeness);
    println!("accuracy       {} m", r.accuracy.map_or("-".into(), |a| format!("{a:.3}")));

    std::fs::create_dir_all(&out).map_err(|e| flexstereo::Error::io(&out, e))?;
    gt.write(&out.join("truth.dmap"))?;
    est.write(&out.join("estimate.dmap"))?;
    println!("maps in {}", out.display());
    Ok(())
}
