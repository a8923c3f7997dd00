use hddpg_core::armsim::{forward_kinematics, ArmConfig, ArmEnv, ArmState, Point2};
use hddpg_core::heuristic::*;
use hddpg_core::imitation::{cell_of_point, GridCell};

fn env() -> ArmEnv {
    ArmEnv::new(ArmConfig::default()).unwrap()
}

/// Straight arm pointing along `heading`, shortened so the effector stays in view.
fn straight(heading: f64) -> ArmState {
    ArmState::new(vec![heading, 0.0, 0.0], vec![0.2, 0.15, 0.1], Point2::new(0.5, 0.5)).unwrap()
}

fn step(arm: &ArmState, h: &[f64]) -> ArmState {
    let mut next = arm.clone();
    for (a, v) in next.joint_angles.iter_mut().zip(h) {
        *a += v;
    }
    next
}

/// The heuristic only sees cells, so it aims at the effector shifted by the
/// cell-to-cell displacement. One small step must bring the effector closer
/// to that aim point.
#[test]
fn heuristic_step_moves_toward_every_reachable_target() {
    let env = env();
    let cam = env.camera();
    let cfg = HeuristicConfig {
        gain: 0.05,
        decay: 1.0,
        clip: 0.1,
    };
    let mut checked = 0;
    for k in 0..10 {
        let arm = straight(-3.0 + 0.6 * k as f64 + 0.05);
        let ee = forward_kinematics(&arm);
        let robot = cell_of_point(cam, ee).unwrap();
        for target in GridCell::all() {
            if target.center(cam).distance(arm.base) > arm.reach() || target == robot {
                continue;
            }
            let aim = ee + cell_displacement(robot, target, cam);
            let h = heuristic_action(robot, target, &arm, &cfg, cam);
            let after = forward_kinematics(&step(&arm, &h.0));
            assert!(
                after.distance(aim) < ee.distance(aim),
                "pose {k} target {target}"
            );
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} reachable pairs");
}

#[test]
fn heuristic_is_a_non_ascent_direction() {
    let env = env();
    let cam = env.camera();
    for k in 0..20 {
        let arm = ArmState::new(
            vec![0.3 * k as f64 - 3.0, 0.7 - 0.05 * k as f64, 1.1],
            vec![0.4, 0.3, 0.2],
            Point2::new(0.5, 0.5),
        )
        .unwrap();
        let Ok(robot) = cell_of_point(cam, forward_kinematics(&arm)) else {
            continue;
        };
        for target in GridCell::all() {
            let h = raw_heuristic(robot, target, &arm, 1.0, cam);
            let goal = forward_kinematics(&arm) + cell_displacement(robot, target, cam);
            let eps = 1e-6;
            let f = |s: f64| {
                let moved: Vec<f64> = h.iter().map(|v| v * s).collect();
                forward_kinematics(&step(&arm, &moved)).distance(goal).powi(2)
            };
            let slope = (f(eps) - f(-eps)) / (2.0 * eps);
            assert!(slope <= 1e-9, "slope {slope}");
        }
    }
}

#[test]
fn negating_the_cell_delta_negates_the_correction() {
    let env = env();
    let cam = env.camera();
    let arm = ArmState::new(vec![1.2, -0.4, 0.9], vec![0.4, 0.3, 0.2], Point2::new(0.5, 0.5)).unwrap();
    for a in GridCell::all() {
        for b in GridCell::all() {
            let fwd = raw_heuristic(a, b, &arm, 0.7, cam);
            let back = raw_heuristic(b, a, &arm, 0.7, cam);
            for (x, y) in fwd.iter().zip(&back) {
                assert!((x + y).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn correction_is_clipped_and_vanishes_on_agreement() {
    let env = env();
    let cam = env.camera();
    let arm = straight(0.4);
    let cfg = HeuristicConfig {
        gain: 50.0,
        decay: 1.0,
        clip: 0.1,
    };
    for a in GridCell::all() {
        for b in GridCell::all() {
            let h = heuristic_action(a, b, &arm, &cfg, cam);
            assert!(h.0.iter().all(|v| v.abs() <= 0.1));
            if a == b {
                assert!(h.0.iter().all(|&v| v == 0.0));
            }
        }
    }
}

#[test]
fn jacobian_is_reexported() {
    let [jx, _] = jacobian(&straight(0.0));
    assert_eq!(jx.len(), 3);
}
