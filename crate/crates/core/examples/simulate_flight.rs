//! Simulates one flight with default settings and prints the statistics of
//! the relative pose between the two wing rigs.
//!
//! cargo run --release --example simulate_flight -- [seed]

use flexstereo::prior::calibrate_prior;
use flexstereo::sim::{simulate, SimConfig};

fn main() -> flexstereo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = SimConfig::default().with_seed(seed);
    let stream = simulate(&cfg)?;
    let truth: Vec<_> = stream.samples.iter().map(|s| s.truth).collect();
    let prior = calibrate_prior(&truth)?;

    let (roll, pitch, yaw) = rpy(&prior.q_mu);
    println!("samples      {}", truth.len());
    println!("mean rpy     {:>10.4} {:>10.4} {:>10.4} deg", roll, pitch, yaw);
    let s = prior.sigma_theta.map(f64::to_degrees);
    println!("sigma dtheta {:>10.4} {:>10.4} {:>10.4} deg", s.x, s.y, s.z);
    let p = prior.p_mu * 1e3;
    println!("mean p       {:>10.2} {:>10.2} {:>10.2} mm", p.x, p.y, p.z);
    let s = prior.sigma_p * 1e3;
    println!("sigma dp     {:>10.3} {:>10.3} {:>10.3} mm", s.x, s.y, s.z);
    Ok(())
}

fn rpy(q: &flexstereo::geometry::UnitQuaternion) -> (f64, f64, f64) {
    let m = q.to_rotation_matrix();
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let pitch = (-m[(2, 0)]).asin();
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    (roll.to_degrees(), pitch.to_degrees(), yaw.to_degrees())
}
