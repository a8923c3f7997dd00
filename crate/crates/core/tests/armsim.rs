use std::f64::consts::PI;

use hddpg_core::armsim::*;
use hddpg_core::diffcore::gradcheck::numerical_gradient;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_arm(angles: Vec<f64>) -> ArmState {
    let cfg = ArmConfig::default();
    ArmState::new(angles, cfg.link_lengths, cfg.base).unwrap()
}

/// End effector as a sum of complex exponentials of cumulative angles.
fn complex_chain(angles: &[f64], links: &[f64], base: Point2) -> Point2 {
    let (mut re, mut im, mut phase) = (base.x, base.y, 0.0f64);
    for (a, l) in angles.iter().zip(links) {
        phase += a;
        let (s, c) = phase.sin_cos();
        re += l * c;
        im += l * s;
    }
    Point2::new(re, im)
}

proptest! {
    #[test]
    fn kinematics_agrees_with_complex_chain(
        angles in proptest::collection::vec(-PI..PI, 3)
    ) {
        let arm = default_arm(angles.clone());
        let ee = forward_kinematics(&arm);
        let oracle = complex_chain(&angles, &arm.link_lengths, arm.base);
        prop_assert!(ee.distance(oracle) < 1e-12);
        prop_assert!(ee.distance(arm.base) <= arm.reach() + 1e-12);
    }

    #[test]
    fn jacobian_agrees_with_finite_differences(
        angles in proptest::collection::vec(-3.0..3.0f64, 3)
    ) {
        let arm = default_arm(angles.clone());
        let [jx, jy] = jacobian(&arm);
        let fx = numerical_gradient(&angles, 1e-6, |a| forward_kinematics(&default_arm(a.to_vec())).x);
        let fy = numerical_gradient(&angles, 1e-6, |a| forward_kinematics(&default_arm(a.to_vec())).y);
        for j in 0..3 {
            prop_assert!((jx[j] - fx[j]).abs() < 1e-6);
            prop_assert!((jy[j] - fy[j]).abs() < 1e-6);
            // a joint can move the effector no faster than the chain beyond it
            let remaining: f64 = arm.link_lengths[j..].iter().sum();
            prop_assert!(jx[j].hypot(jy[j]) <= remaining + 1e-12);
        }
    }
}

#[test]
fn straight_arm_jacobian_by_hand() {
    let arm = ArmState::new(vec![0.0; 3], vec![1.0; 3], Point2::new(0.0, 0.0)).unwrap();
    let [jx, jy] = jacobian(&arm);
    assert!(jx.iter().all(|v| v.abs() < 1e-15));
    assert_eq!(jy, vec![3.0, 2.0, 1.0]);
}

#[test]
fn default_pose_starts_at_expected_point() {
    let env = ArmEnv::new(ArmConfig::default()).unwrap();
    let ee = forward_kinematics(&env.initial_state(&mut ChaCha8Rng::seed_from_u64(0)));
    assert!(ee.distance(Point2::new(0.8, 0.7)) < 1e-12);
}

#[test]
fn step_reward_matches_kinematics() {
    let env = ArmEnv::new(ArmConfig {
        terminate_on_success: false,
        ..ArmConfig::default()
    })
    .unwrap();
    let demo = generate_demo(DemoPattern::UpDown, 10, 0, &DemoConfig::default()).unwrap();
    let state = env.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
    let action = ActionVector(vec![0.05, -0.2, 0.03]);
    let out = env.step(&state, &action, &demo, 4).unwrap();
    // the second component is clipped to the action limit
    let moved = [state.joint_angles[0] + 0.05, state.joint_angles[1] - 0.1, state.joint_angles[2] + 0.03];
    let ee = complex_chain(&moved, &state.link_lengths, state.base);
    assert!((out.reward + ee.distance(demo.points[4])).abs() < 1e-12);
    assert!(!out.done);
    assert!(env.step(&state, &action, &demo, 10).is_err());
    assert!(env.step(&state, &action, &demo, 9).unwrap().done);
}

#[test]
fn success_bonus_inside_radius() {
    let demo = DemoTrajectory {
        pattern: DemoPattern::ReachPoint,
        points: vec![Point2::new(0.8, 0.7); 3],
    };
    let env = ArmEnv::new(ArmConfig::default()).unwrap();
    let state = env.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
    let out = env.step(&state, &ActionVector::zeros(3), &demo, 0).unwrap();
    assert!((out.reward - 1.0).abs() < 1e-12);
    assert!(out.success && out.done);
}

#[test]
fn default_arm_frame_intensity() {
    let env = ArmEnv::new(ArmConfig::default()).unwrap();
    let frame = env.render(&env.initial_state(&mut ChaCha8Rng::seed_from_u64(0)));
    let mean = frame.mean();
    assert!(mean > 0.5 && mean < 1.0, "mean intensity {mean}");
}

#[test]
fn hand_disc_centroid_recovers_projection() {
    let env = ArmEnv::new(ArmConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // keep the whole disc inside the frame so clipping cannot bias the centroid
    for _ in 0..200 {
        let p = Point2::new(rng.random_range(0.1..=0.9), rng.random_range(0.1..=0.9));
        let frame = env.render_hand(p).unwrap();
        let (mut sr, mut sc, mut n) = (0.0, 0.0, 0.0);
        for r in 0..frame.height() {
            for c in 0..frame.width() {
                if frame.get(r, c) < 0.5 {
                    sr += r as f64;
                    sc += c as f64;
                    n += 1.0;
                }
            }
        }
        let (pr, pc) = env.camera().project(p);
        let (cr, cc) = (sr / n, sc / n);
        assert!((cr - pr).abs() <= 1.0 && (cc - pc).abs() <= 1.0, "{p:?}");
    }
    assert!(env.render_hand(Point2::new(1.2, 0.5)).is_err());
}

#[test]
fn demo_spacing_bounded_for_all_patterns_and_seeds() {
    let cfg = DemoConfig {
        jitter: 0.1,
        ..DemoConfig::default()
    };
    for pattern in DemoPattern::ALL {
        for seed in 0..100 {
            let demo = generate_demo(pattern, 50, seed, &cfg).unwrap();
            assert_eq!(demo.len(), 50);
            assert!(demo.max_spacing() <= cfg.max_step + 1e-12);
            assert!(demo.points.iter().all(|&p| Camera::in_workspace(p)));
        }
    }
}

#[test]
fn demo_text_round_trip() {
    let demo = generate_demo(DemoPattern::Diagonal, 7, 0, &DemoConfig::default()).unwrap();
    let mut buf = Vec::new();
    demo.write_text(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
    assert_eq!(DemoTrajectory::read_text(&buf[..]).unwrap(), demo);
}
