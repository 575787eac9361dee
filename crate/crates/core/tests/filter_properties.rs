mod common;

use common::checks::{covariance_hygiene, jacobian_error};
use common::*;
use flexstereo::ekf::{error_injection, predict, ErrorState, FilterState, ProcessNoise, StateCovariance, STATE_DIM};
use flexstereo::geometry::{quat_to_small_angle, small_angle_to_quat, RelativePose, UnitQuaternion, Vec3};
use nalgebra::SVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn jacobian_matches_finite_differences() {
    let err = jacobian_error(100, 11);
    assert!(err < 1e-5, "max relative error {err:e}");
}

#[test]
fn covariance_stays_healthy() {
    let h = covariance_hygiene(3000, 4);
    assert!(h.asymmetry < 1e-10, "{h:?}");
    assert!(h.min_eig_ratio > -1e-9, "{h:?}");
    assert!(h.q_drift < 1e-9, "{h:?}");
}

#[test]
fn noise_free_rotation_integrates_exactly_at_constant_rate() {
    let w1 = Vec3::new(0.02, -0.01, 0.03);
    let w2 = Vec3::new(-0.01, 0.04, 0.0);
    let mut x = FilterState { w1, w2, ..FilterState::at_rest(&RelativePose::default()) };
    let mut cov = StateCovariance::from_diagonal(&SVector::<f64, STATE_DIM>::repeat(1e-6));
    let noise = ProcessNoise::isotropic(1e-3, 1e-2);
    let dt = 1e-3;
    for _ in 0..1000 {
        (x, cov) = predict(&x, &cov, &noise, dt).unwrap();
    }
    // q(t) = exp(-w1 t) q0 exp(w2 t) for constant rates
    let expected = nalgebra::UnitQuaternion::from_scaled_axis(-w1) * nalgebra::UnitQuaternion::from_scaled_axis(w2);
    let got = rotation_vector(&(expected.inverse().into_inner() * na_quat(&x.q)));
    assert!(got.norm() < 1e-4, "{got}");
}

fn arb_vec(scale: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-scale..scale).prop_map(|a| Vec3::new(a[0], a[1], a[2]))
}

proptest! {
    #[test]
    fn injection_then_difference_round_trips(seed in any::<u64>(), th in arb_vec(1.0), dp in arb_vec(1.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_state(&mut rng);
        let z = Vec3::zeros();
        let y = error_injection(&x, &ErrorState::from_blocks(th, z, z, dp, z, z, z));
        let back = quat_to_small_angle(&(x.q.inverse() * y.q)).unwrap();
        prop_assert!((back - th).norm() < 1e-12);
        prop_assert!((y.p - x.p - dp).norm() < 1e-12);
        prop_assert!((y.q.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn small_angle_map_agrees_with_nalgebra(v in arb_vec(3.0)) {
        let ours = na_quat(&small_angle_to_quat(&v));
        let theirs = nalgebra::UnitQuaternion::from_scaled_axis(v).into_inner();
        prop_assert!((ours.coords - theirs.coords).norm() < 1e-14);
    }

    #[test]
    fn quaternion_product_agrees_with_nalgebra(a in prop::array::uniform4(-1.0f64..1.0), b in prop::array::uniform4(-1.0f64..1.0)) {
        prop_assume!(a.iter().map(|c| c * c).sum::<f64>() > 0.01 && b.iter().map(|c| c * c).sum::<f64>() > 0.01);
        let qa = UnitQuaternion::new_normalize(a[0], a[1], a[2], a[3]);
        let qb = UnitQuaternion::new_normalize(b[0], b[1], b[2], b[3]);
        let ours = na_quat(&(qa * qb));
        let theirs = na_quat(&qa) * na_quat(&qb);
        prop_assert!((ours.coords - theirs.coords).norm() < 1e-14);
    }

    #[test]
    fn predict_keeps_covariance_symmetric(seed in any::<u64>(), dt in 1e-4f64..0.05) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_state(&mut rng);
        let a = nalgebra::SMatrix::<f64, STATE_DIM, STATE_DIM>::from_fn(|_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let cov = StateCovariance::new(a * a.transpose());
        let (next, p) = predict(&x, &cov, &ProcessNoise::isotropic(0.1, 1.0), dt).unwrap();
        prop_assert!(p.max_asymmetry() == 0.0);
        prop_assert!(p.min_eigenvalue() > -1e-9 * p.trace());
        prop_assert!((next.q.norm() - 1.0).abs() < 1e-14);
    }
}
