use proptest::prelude::*;
use rover_core::sensing::{
    echo_to_distance, pan_camera, read_ultrasonic, render_frame, sensor_rng, CameraConfig, GimbalState,
    UltrasonicConfig,
};
use rover_core::world::{raycast, ChassisConfig, Rect, Vec2};
use rover_core::{Pose, World};

fn half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

#[test]
fn echo_examples() {
    let cfg = UltrasonicConfig::default();
    let d = echo_to_distance(5831.0, &cfg).unwrap();
    assert!((d - 1.0000165).abs() < 1e-9);
    assert_eq!(cfg.quantize(d), Some(1.0));
    assert_eq!(echo_to_distance(0.0, &cfg), Some(0.0));
    assert_eq!(echo_to_distance(30000.0, &cfg), None);
    assert!((cfg.echo_timeout_us() - 23323.6).abs() < 0.05);
}

#[test]
fn ultrasonic_examples() {
    let chassis = ChassisConfig::default();
    let cfg = UltrasonicConfig {
        beam_halfwidth: 7.5,
        ..UltrasonicConfig::default()
    };
    let mut rng = sensor_rng(0);
    // Nose at x = 1.12; wall face 1.234 m further on.
    let world = World::new(Rect::new(-10.0, -10.0, 20.0, 20.0), vec![Rect::new(2.354, -5.0, 1.0, 10.0)]).unwrap();
    let r = read_ultrasonic(&world, &Pose::new(1.0, 0.0, 0.0), &chassis, &cfg, 3, &mut rng);
    assert_eq!(r.range, Some(1.23));
    assert_eq!(r.tick, 3);

    let empty = World::empty(40.0, 40.0).unwrap();
    let r = read_ultrasonic(&empty, &Pose::new(20.0, 20.0, 0.0), &chassis, &cfg, 0, &mut rng);
    assert_eq!(r.range, None);
}

#[test]
fn off_axis_wall_is_not_seen() {
    let chassis = ChassisConfig::default();
    let cfg = UltrasonicConfig {
        beam_halfwidth: 7.5,
        ..UltrasonicConfig::default()
    };
    let pose = Pose::new(0.0, 0.0, 0.0);
    let nose = Vec2::new(chassis.body_radius, 0.0);
    // A 0.2 m block centred 1 m from the nose, 20 degrees off the heading.
    let centre = nose.add_scaled(Vec2::from_angle(20f64.to_radians()), 1.0);
    let block = Rect::new(centre.x - 0.1, centre.y - 0.1, 0.2, 0.2);
    let world = World::new(Rect::new(-50.0, -50.0, 100.0, 100.0), vec![block]).unwrap();

    // Dense angular sweep across the beam confirms nothing inside it hits.
    let hw = 7.5f64.to_radians();
    for k in 0..=10_000 {
        let a = -hw + 2.0 * hw * f64::from(k) / 10_000.0;
        assert!(!block_hit(&block, nose, a, 4.0), "beam angle {a} hits");
    }
    let r = read_ultrasonic(&world, &pose, &chassis, &cfg, 0, &mut sensor_rng(1));
    assert_eq!(r.range, None);
}

/// Brute-force sampled ray/box test.
fn block_hit(r: &Rect, origin: Vec2, angle: f64, range: f64) -> bool {
    let d = Vec2::from_angle(angle);
    let mut t = 0.0;
    while t <= range {
        let p = origin.add_scaled(d, t);
        if p.x >= r.x && p.x <= r.x + r.w && p.y >= r.y && p.y <= r.y + r.h {
            return true;
        }
        t += 1e-3;
    }
    false
}

#[test]
fn wall_frame_matches_per_column_trigonometry() {
    let cam = CameraConfig::default();
    // Wall 4 m ahead spanning far beyond the field of view.
    let world = World::new(Rect::new(-20.0, -20.0, 24.0, 40.0), Vec::new()).unwrap();
    let frame = render_frame(&world, &Pose::new(0.0, 0.0, 0.0), &GimbalState::default(), 9, &cam);
    assert_eq!(frame.pixels.len(), 10_800);
    assert_eq!(frame.tick, 9);
    for c in 0..120u16 {
        let angle = (60.0 * (f64::from(c) / 119.0 - 0.5)).to_radians();
        let depth = 4.0 / angle.cos();
        let expected = half_up(255.0 * (1.0 - depth.min(8.0) / 8.0)) as u8;
        for row in 0..90 {
            assert_eq!(frame.pixels[row * 120 + usize::from(c)], expected, "column {c}");
        }
    }
    // Formula on the optical axis, and the 30 degree edge column.
    assert_eq!(half_up(255.0 * (1.0 - 4.0 / 8.0)), 128.0);
    assert_eq!(frame.pixels[0], 108);
    assert_eq!(frame.pixels[119], 108);
}

#[test]
fn frames_follow_the_gimbal() {
    let cam = CameraConfig::default();
    let world = World::new(Rect::new(-20.0, -20.0, 40.0, 24.0), Vec::new()).unwrap();
    let pose = Pose::new(0.0, 0.0, 0.0);
    let ahead = render_frame(&world, &pose, &GimbalState::default(), 0, &cam);
    let left = render_frame(&world, &pose, &GimbalState { pan: 90.0, tilt: 0.0 }, 0, &cam);
    // Only the north wall (4 m) is inside range.
    assert!(ahead.pixels.iter().all(|&p| p == 0));
    assert_eq!(left.pixels[60], 127);
    assert_eq!(left.pan, 90);
}

#[test]
fn empty_world_is_black() {
    let f = render_frame(
        &World::empty(100.0, 100.0).unwrap(),
        &Pose::new(50.0, 50.0, 1.0),
        &GimbalState::default(),
        0,
        &CameraConfig::default(),
    );
    assert!(f.pixels.iter().all(|&p| p == 0));
}

#[test]
fn snapshot_pgm_is_byte_exact() {
    let f = render_frame(
        &World::empty(10.0, 10.0).unwrap(),
        &Pose::new(5.0, 5.0, 0.0),
        &GimbalState::default(),
        0,
        &CameraConfig::default(),
    );
    let pgm = f.to_pgm();
    assert_eq!(&pgm[..14], b"P5\n120 90\n255\n");
    assert_eq!(pgm.len(), 14 + 10_800);
    assert_eq!(&pgm[14..], &f.pixels[..]);
}

#[test]
fn gimbal_examples() {
    let g = |pan, tilt| GimbalState { pan, tilt };
    assert_eq!(pan_camera(g(350.0, 0.0), 20.0, 0.0), g(10.0, 0.0));
    assert_eq!(pan_camera(g(0.0, 25.0), 0.0, 20.0), g(0.0, 30.0));
    assert_eq!(pan_camera(g(0.0, 0.0), -90.0, 0.0), g(270.0, 0.0));
}

fn scatter_world() -> impl Strategy<Value = World> {
    proptest::collection::vec((0.0f64..18.0, 0.0f64..18.0, 0.2f64..2.0, 0.2f64..2.0), 0..15).prop_map(|boxes| {
        let obstacles = boxes.into_iter().map(|(x, y, w, h)| Rect::new(x, y, w, h)).collect();
        World::new(Rect::new(0.0, 0.0, 20.0, 20.0), obstacles).unwrap()
    })
}

proptest! {
    #[test]
    fn noiseless_reading_is_quantized_fan_minimum(world in scatter_world(), x in 0.5f64..19.5, y in 0.5f64..19.5,
                                                   h in 0.0f64..std::f64::consts::TAU, hw in 0.0f64..30.0) {
        let chassis = ChassisConfig::default();
        let cfg = UltrasonicConfig { beam_halfwidth: hw, ..UltrasonicConfig::default() };
        let pose = Pose::new(x, y, h);
        let r = read_ultrasonic(&world, &pose, &chassis, &cfg, 0, &mut sensor_rng(0));

        let nose = Vec2::new(x + chassis.body_radius * h.cos(), y + chassis.body_radius * h.sin());
        let hw = hw.to_radians();
        let nearest = (0..5)
            .filter_map(|i| raycast(&world, nose, Vec2::from_angle(h - hw + 2.0 * hw * f64::from(i) / 4.0), 4.0))
            .fold(f64::INFINITY, f64::min);
        let expected = if nearest.is_finite() {
            let q = half_up(nearest / 0.01) * 0.01;
            (q <= 4.0).then_some(q)
        } else {
            None
        };
        match (r.range, expected) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}"),
            (a, b) => prop_assert_eq!(a, b),
        }
        if let Some(v) = r.range {
            let steps = v / 0.01;
            prop_assert!((steps - steps.round()).abs() < 1e-9);
            prop_assert!((0.0..=4.0).contains(&v));
        }
    }

    #[test]
    fn noisy_readings_stay_on_the_grid(seed in any::<u64>(), sigma in 0.0f64..0.5) {
        let chassis = ChassisConfig::default();
        let cfg = UltrasonicConfig { noise_sigma: sigma, ..UltrasonicConfig::default() };
        let world = World::new(Rect::new(0.0, 0.0, 20.0, 20.0), vec![Rect::new(11.0, 5.0, 1.0, 10.0)]).unwrap();
        let mut rng = sensor_rng(seed);
        let mut replay = sensor_rng(seed);
        for tick in 0..20 {
            let r = read_ultrasonic(&world, &Pose::new(10.0, 10.0, 0.0), &chassis, &cfg, tick, &mut rng);
            let again = read_ultrasonic(&world, &Pose::new(10.0, 10.0, 0.0), &chassis, &cfg, tick, &mut replay);
            prop_assert_eq!(r, again);
            if let Some(v) = r.range {
                prop_assert!((0.0..=4.0).contains(&v));
                let steps = v / 0.01;
                prop_assert!((steps - steps.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn echo_is_linear(us in 0.0f64..11_000.0) {
        let cfg = UltrasonicConfig::default();
        let one = echo_to_distance(us, &cfg).unwrap();
        let two = echo_to_distance(2.0 * us, &cfg).unwrap();
        prop_assert!((two - 2.0 * one).abs() < 1e-12);
    }

    #[test]
    fn pan_composes(start in 0.0f64..360.0, a in -720.0f64..720.0, b in -720.0f64..720.0) {
        let g = GimbalState { pan: start, tilt: 0.0 };
        let stepwise = pan_camera(pan_camera(g, a, 0.0), b, 0.0).pan;
        let direct = pan_camera(g, a + b, 0.0).pan;
        let gap = (stepwise - direct).rem_euclid(360.0);
        prop_assert!(gap.min(360.0 - gap) < 1e-9);
        prop_assert!((0.0..360.0).contains(&stepwise));
    }

    #[test]
    fn tilt_is_clamped(t in -30.0f64..30.0, d in -200.0f64..200.0) {
        let g = pan_camera(GimbalState { pan: 0.0, tilt: t }, 0.0, d);
        prop_assert!((-30.0..=30.0).contains(&g.tilt));
    }

    #[test]
    fn shade_is_monotone_in_depth(world in scatter_world(), x in 0.5f64..19.5, y in 0.5f64..19.5, h in 0.0f64..std::f64::consts::TAU) {
        let cam = CameraConfig::default();
        let pose = Pose::new(x, y, h);
        let frame = render_frame(&world, &pose, &GimbalState::default(), 0, &cam);
        prop_assert_eq!(frame.pixels.len(), 10_800);
        let depths: Vec<f64> = (0..cam.width)
            .map(|c| {
                let a = h + cam.column_offset(c);
                raycast(&world, pose.position(), Vec2::from_angle(a), cam.range).unwrap_or(cam.range)
            })
            .collect();
        for i in 0..depths.len() {
            for j in 0..depths.len() {
                if depths[i] < depths[j] {
                    prop_assert!(frame.pixels[i] >= frame.pixels[j]);
                }
            }
        }
    }
}
