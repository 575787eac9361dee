//! Calibrates a wing prior, then shows what the gate does with clean and
//! with grossly wrong visual estimates.
//!
//! cargo run --release --example prior_gate

use flexstereo::harness::{prepare_run, ExperimentConfig};
use flexstereo::prior::{deviation, gate, visual_deviation, GateConfig};
use flexstereo::sim::{synth_visual, VisualNoiseConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> flexstereo::Result<()> {
    let cfg = ExperimentConfig::default();
    let prep = prepare_run(&cfg, 1)?;
    let prior = prep.prior.inflated(cfg.prior.inflation);
    let s = prior.sigma();
    println!(
        "prior sigma  {:.4} {:.4} {:.4} deg  {:.2} {:.2} {:.2} mm",
        s[0].to_degrees(),
        s[1].to_degrees(),
        s[2].to_degrees(),
        s[3] * 1e3,
        s[4] * 1e3,
        s[5] * 1e3
    );

    let truth = prep.records[3000].truth;
    let d = deviation(&prior, &truth)?.to_vector();
    println!("truth dev    {:+.4} {:+.4} {:+.4} deg", d[0].to_degrees(), d[1].to_degrees(), d[2].to_degrees());

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gate_cfg = GateConfig { k: 2.0 };
    for (name, outliers) in [("clean", 0.0), ("outlier", 1.0)] {
        let noise = VisualNoiseConfig { outlier_prob: outliers, ..cfg.visual };
        let m = synth_visual(&truth, &noise, &mut rng);
        let v = visual_deviation(&prior, &m)?.to_vector();
        let g = gate(&prior, &m, &gate_cfg);
        let f = deviation(&prior, &g.measurement.pose())?.to_vector();
        println!(
            "{name:<8} visual roll {:+.3} deg -> fused {:+.4} deg, rejected {}",
            v[0].to_degrees(),
            f[0].to_degrees(),
            g.rejected
        );
    }
    Ok(())
}
