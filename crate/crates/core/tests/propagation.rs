mod common;

use common::{l2_diff, random_state, random_system, rk4_truncated};
use modal_steer::{block_expm, propagate, BlockKind, PropagationConfig, StateVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mode_kind() -> impl Strategy<Value = BlockKind> {
    // under-, critically, and over-damped blocks
    prop_oneof![
        (0.1f64..5.0, 0.0f64..1.0).prop_map(|(w, f)| BlockKind::Mode { omega: w, kappa: f * 0.99 * w }),
        (0.1f64..5.0).prop_map(|w| BlockKind::Mode { omega: w, kappa: w }),
        (0.1f64..3.0, 1.01f64..3.0).prop_map(|(w, f)| BlockKind::Mode { omega: w, kappa: f * w }),
        Just(BlockKind::Rigid),
    ]
}

proptest! {
    #[test]
    fn semigroup_property(kind in mode_kind(), t in 0.0f64..10.0, s in 0.0f64..10.0) {
        let lhs = block_expm(kind, t + s).unwrap();
        let rhs = block_expm(kind, t).unwrap() * block_expm(kind, s).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12, "{:?}", lhs.max_abs_diff(&rhs));
    }

    #[test]
    fn liouville_identity(kind in mode_kind(), t in 0.0f64..10.0) {
        let trace = match kind { BlockKind::Rigid => 0.0, BlockKind::Mode { kappa, .. } => -2.0 * kappa };
        let det = block_expm(kind, t).unwrap().det();
        prop_assert!((det - (trace * t).exp()).abs() <= 1e-12);
    }

    #[test]
    fn undamped_blocks_are_orthogonal(omega in 0.01f64..50.0, t in -10.0f64..10.0) {
        let e = block_expm(BlockKind::Mode { omega, kappa: 0.0 }, t).unwrap();
        let p = e.transpose() * e;
        prop_assert!(p.max_abs_diff(&modal_steer::BlockMatrix2::IDENTITY) <= 1e-12);
    }
}

#[test]
fn propagate_matches_dense_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        let sys = random_system(&mut rng, 5, 0.3);
        let tau = rng.gen_range(1.0..3.0);
        let (a, f, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..4.0), rng.gen_range(-1.0..1.0));
        let u = move |t: f64| a * (f * t).sin() + c * t;
        let x0 = random_state(&mut rng, 5);
        let cfg = PropagationConfig::resolved(&sys, 5, f, tau);
        let ours = propagate(&sys, &x0, &u, tau, &cfg).unwrap();
        let oracle = rk4_truncated(&sys, 5, &x0, &u, tau, 1e-11);
        let d = l2_diff(&oracle, &ours);
        assert!(d <= 1e-8, "deviation {d}");
    }
}

#[test]
fn step_doubling_is_self_consistent() {
    let sys = common::euler_bernoulli(0.01, 5);
    let u = |t: f64| (3.0 * t).cos() - 0.5 * (7.0 * t).sin();
    let x0 = StateVector::from_entries([(0, 0.1), (5, 1.0)]);
    let cfg = PropagationConfig::resolved(&sys, 5, 7.0, 4.0);
    let a = propagate(&sys, &x0, &u, 4.0, &cfg).unwrap();
    let b = propagate(&sys, &x0, &u, 4.0, &cfg.refined(2)).unwrap();
    assert!(a.sub(&b).norm() <= 1e-10);
}

#[test]
fn undamped_free_motion_preserves_block_norms() {
    let sys = common::euler_bernoulli(0.0, 6);
    let x0 = StateVector::from_entries([(2, 0.3), (3, -0.4), (8, 1.0), (13, 0.25)]);
    let cfg = PropagationConfig::new(6, 32, 8).unwrap();
    let x = propagate(&sys, &x0, &|_| 0.0, 3.7, &cfg).unwrap();
    for k in 1..=6 {
        let before = x0.block(k);
        let after = x.block(k);
        let nb = before[0].hypot(before[1]);
        let na = after[0].hypot(after[1]);
        assert!((na - nb).abs() <= 1e-12);
    }
}
