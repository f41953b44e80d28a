use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rover_core::world::{
    collision_check, load_world, raycast, step_kinematics, ChassisConfig, Rect, Vec2, WorldError,
};
use rover_core::{DriveState, Pose, World};

/// Plain forward-Euler bicycle integrator, written independently of the
/// library so it can serve as the reference.
fn fine_reference(start: (f64, f64, f64), v: f64, steer: f64, wheelbase: f64, seconds: f64, dt: f64) -> Vec<(f64, f64)> {
    let (mut x, mut y, mut h) = start;
    let steps = (seconds / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((x, y));
    for _ in 0..steps {
        x += v * h.cos() * dt;
        y += v * h.sin() * dt;
        h += v * steer.tan() / wheelbase * dt;
        out.push((x, y));
    }
    out
}

#[test]
fn constant_turn_tracks_fine_step_reference() {
    let chassis = ChassisConfig::default();
    let drive = DriveState {
        speed: 0.4,
        steer: 25f64.to_radians(),
    };
    let dt: f64 = 0.02;
    let reference = fine_reference((1.0, 2.0, 0.3), drive.speed, drive.steer, chassis.wheelbase, 10.0, 1e-5);
    let stride = (dt / 1e-5).round() as usize;
    let mut pose = Pose::new(1.0, 2.0, 0.3);
    let mut worst: f64 = 0.0;
    for k in 1..=500 {
        pose = step_kinematics(pose, drive, &chassis, dt);
        let (rx, ry) = reference[k * stride];
        worst = worst.max((pose.x - rx).hypot(pose.y - ry));
    }
    assert!(worst < 1e-3, "max deviation {worst}");
}

#[test]
fn full_circle_stays_on_radius() {
    let chassis = ChassisConfig {
        wheelbase: 0.15,
        ..ChassisConfig::default()
    };
    let steer = 20f64.to_radians();
    let radius = 0.15 / steer.tan();
    assert!((radius - 0.4121).abs() < 1e-4);
    let drive = DriveState { speed: 0.2, steer };
    let mut pose = Pose::new(0.0, 0.0, 0.0);
    let mut turned = 0.0;
    while turned < TAU {
        let before = pose.heading;
        pose = step_kinematics(pose, drive, &chassis, 0.01);
        turned += (pose.heading - before).rem_euclid(TAU);
        // Left turn from heading 0 circles around (0, R).
        let off = (pose.x.hypot(pose.y - radius) - radius).abs();
        assert!(off < 1e-3, "off circle by {off}");
    }
}

#[test]
fn straight_and_stationary_examples() {
    let c = ChassisConfig::default();
    let p = step_kinematics(Pose::new(0.0, 0.0, 0.0), DriveState { speed: 0.5, steer: 0.0 }, &c, 0.1);
    assert!((p.x - 0.05).abs() < 1e-15 && p.y == 0.0 && p.heading == 0.0);
    let start = Pose::new(3.0, 4.0, 1.0);
    assert_eq!(step_kinematics(start, DriveState { speed: 0.0, steer: 0.4 }, &c, 0.5), start);
}

#[test]
fn raycast_diagonal_matches_dense_sampling() {
    let world = World::new(Rect::new(-10.0, -10.0, 20.0, 20.0), vec![Rect::new(1.0, 1.0, 1.0, 1.0)]).unwrap();
    let dir = Vec2::from_angle(PI / 4.0);
    let hit = raycast(&world, Vec2::new(0.0, 0.0), dir, 4.0).unwrap();
    let step = 1e-5;
    let mut t = 0.0;
    while !(t * dir.x >= 1.0 && t * dir.y >= 1.0) {
        t += step;
    }
    assert!((hit - t).abs() <= step, "{hit} vs sampled {t}");
    assert!((hit - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn raycast_examples() {
    let world = World::new(Rect::new(-10.0, -10.0, 20.0, 20.0), vec![Rect::new(2.0, -1.0, 1.0, 2.0)]).unwrap();
    assert_eq!(raycast(&world, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 4.0), Some(2.0));
    let empty = World::empty(20.0, 20.0).unwrap();
    assert_eq!(raycast(&empty, Vec2::new(10.0, 10.0), Vec2::new(1.0, 0.0), 4.0), None);
    assert_eq!(raycast(&empty, Vec2::new(10.0, 10.0), Vec2::new(1.0, 0.0), 10.0), Some(10.0));
}

#[test]
fn collision_examples() {
    let world = World::new(Rect::new(0.0, 0.0, 20.0, 20.0), vec![Rect::new(5.0, 5.0, 1.0, 1.0)]).unwrap();
    assert!(!collision_check(&World::empty(20.0, 20.0).unwrap(), &Pose::new(10.0, 10.0, 0.0), 0.12));
    assert!(collision_check(&world, &Pose::new(5.5, 5.5, 0.0), 0.12));
    assert!(!collision_check(&world, &Pose::new(4.5, 5.5, 0.0), 0.5));
    assert!(collision_check(&world, &Pose::new(4.5, 5.5, 0.0), 0.5 + 1e-9));
    assert!(!collision_check(&world, &Pose::new(0.12, 10.0, 0.0), 0.12));
    assert!(collision_check(&world, &Pose::new(0.11, 10.0, 0.0), 0.12));
}

#[test]
fn world_file_examples() {
    assert_eq!(load_world("bounds 20 20\n").unwrap(), World::empty(20.0, 20.0).unwrap());
    let w = load_world("# meadow\nbounds 20 20\n\nrect 5 5 1 1\n").unwrap();
    assert_eq!(w.obstacles, vec![Rect::new(5.0, 5.0, 1.0, 1.0)]);
    assert!(matches!(
        load_world("bounds 20 20\nrect 25 5 1 1\n"),
        Err(WorldError::ObstacleOutOfBounds { index: 0, .. })
    ));
    assert!(matches!(load_world("bounds 20 20\npoly 1 2 3\n"), Err(WorldError::Parse { line: 2, .. })));
    assert!(matches!(load_world("rect 1 1 1 1\n"), Err(WorldError::Parse { line: 1, .. })));
}

fn world_strategy() -> impl Strategy<Value = World> {
    (2.0f64..30.0, 2.0f64..30.0).prop_flat_map(|(w, h)| {
        proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.05f64..0.5, 0.05f64..0.5), 0..12).prop_map(
            move |specs| {
                let obstacles = specs
                    .into_iter()
                    .map(|(fx, fy, fw, fh)| {
                        let rw = fw * w;
                        let rh = fh * h;
                        Rect::new(fx * (w - rw), fy * (h - rh), rw, rh)
                    })
                    .collect();
                World::new(Rect::new(0.0, 0.0, w, h), obstacles).unwrap()
            },
        )
    })
}

proptest! {
    #[test]
    fn heading_stays_normalized(x in -5.0f64..5.0, y in -5.0f64..5.0, h in -20.0f64..20.0,
                                v in -0.5f64..0.5, steer in -0.52f64..0.52, dt in 0.001f64..1.0) {
        let p = step_kinematics(Pose::new(x, y, h), DriveState { speed: v, steer }, &ChassisConfig::default(), dt);
        prop_assert!((0.0..TAU).contains(&p.heading));
        let again = step_kinematics(Pose::new(x, y, h), DriveState { speed: v, steer }, &ChassisConfig::default(), dt);
        prop_assert_eq!(p, again);
    }

    #[test]
    fn straight_steps_keep_heading(h in 0.0f64..TAU, v in -0.5f64..0.5, dt in 0.001f64..1.0) {
        let start = Pose::new(1.0, 1.0, h);
        let p = step_kinematics(start, DriveState { speed: v, steer: 0.0 }, &ChassisConfig::default(), dt);
        prop_assert_eq!(p.heading, start.heading);
        let moved = (p.x - 1.0).hypot(p.y - 1.0);
        prop_assert!((moved - v.abs() * dt).abs() < 1e-12);
    }

    #[test]
    fn raycast_hits_are_consistent(world in world_strategy(), fx in 0.0f64..1.0, fy in 0.0f64..1.0,
                                   angle in 0.0f64..TAU, max_range in 0.1f64..40.0, eps in 1e-4f64..0.05) {
        let origin = Vec2::new(fx * world.bounds.w, fy * world.bounds.h);
        let dir = Vec2::from_angle(angle);
        if let Some(t) = raycast(&world, origin, dir, max_range) {
            prop_assert!((0.0..=max_range).contains(&t));
            // Extending the range never changes a hit.
            prop_assert_eq!(raycast(&world, origin, dir, max_range * 2.0), Some(t));
            if t > eps {
                let closer = origin.add_scaled(dir, t - eps);
                let again = raycast(&world, closer, dir, max_range).unwrap();
                prop_assert!(again <= eps + 1e-9, "re-cast {again} > eps {eps}");
            }
        }
    }

    #[test]
    fn world_text_roundtrips(world in world_strategy()) {
        prop_assert_eq!(load_world(&world.to_text()).unwrap(), world);
    }
}
