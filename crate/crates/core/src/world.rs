//! The 2D obstacle world, rover pose, chassis kinematics and ray queries.
//!
//! Everything here is a pure function over immutable inputs. Obstacles are
//! solid axis-aligned rectangles; the world bounds act as an enclosing wall.

use std::f64::consts::TAU;

use thiserror::Error;

/// A point or direction in world coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `angle` radians (counter-clockwise from +x).
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn add_scaled(self, dir: Vec2, t: f64) -> Vec2 {
        Vec2::new(self.x + dir.x * t, self.y + dir.y * t)
    }
}

/// Axis-aligned rectangle given by its lower-left corner and size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn max_x(&self) -> f64 {
        self.x + self.w
    }

    pub fn max_y(&self) -> f64 {
        self.y + self.h
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        p.x >= self.x && p.x <= self.max_x() && p.y >= self.y && p.y <= self.max_y()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.max_x() <= self.max_x()
            && other.max_y() <= self.max_y()
    }

    /// Euclidean distance from `p` to the closest point of the rectangle
    /// (zero when `p` is inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let dx = (self.x - p.x).max(0.0).max(p.x - self.max_x());
        let dy = (self.y - p.y).max(0.0).max(p.y - self.max_y());
        dx.hypot(dy)
    }

    /// Parameter of the first contact of the ray with the solid rectangle.
    /// Returns `Some(0.0)` when the origin is already inside.
    fn ray_entry(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let mut t_near = 0.0_f64;
        let mut t_far = f64::INFINITY;
        for (o, d, lo, hi) in [
            (origin.x, dir.x, self.x, self.max_x()),
            (origin.y, dir.y, self.y, self.max_y()),
        ] {
            if d == 0.0 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (mut ta, mut tb) = ((lo - o) / d, (hi - o) / d);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t_near = t_near.max(ta);
                t_far = t_far.min(tb);
                if t_near > t_far {
                    return None;
                }
            }
        }
        Some(t_near)
    }

    /// Parameter at which a ray starting inside the rectangle leaves it.
    fn ray_exit(&self, origin: Vec2, dir: Vec2) -> f64 {
        let mut t = f64::INFINITY;
        for (o, d, lo, hi) in [
            (origin.x, dir.x, self.x, self.max_x()),
            (origin.y, dir.y, self.y, self.max_y()),
        ] {
            if d > 0.0 {
                t = t.min((hi - o) / d);
            } else if d < 0.0 {
                t = t.min((lo - o) / d);
            }
        }
        t.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub bounds: Rect,
    pub obstacles: Vec<Rect>,
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bounds must have positive finite width and height")]
    BadBounds,
    #[error("obstacle {index} ({rect:?}) is not inside the world bounds")]
    ObstacleOutOfBounds { index: usize, rect: Rect },
}

impl World {
    /// Builds a world, checking that the bounds are non-degenerate and that
    /// every obstacle lies inside them.
    pub fn new(bounds: Rect, obstacles: Vec<Rect>) -> Result<Self, WorldError> {
        let finite = [bounds.x, bounds.y, bounds.w, bounds.h]
            .iter()
            .all(|v| v.is_finite());
        if !finite || bounds.w <= 0.0 || bounds.h <= 0.0 {
            return Err(WorldError::BadBounds);
        }
        for (index, rect) in obstacles.iter().enumerate() {
            let sane = [rect.x, rect.y, rect.w, rect.h].iter().all(|v| v.is_finite())
                && rect.w > 0.0
                && rect.h > 0.0;
            if !sane || !bounds.contains_rect(rect) {
                return Err(WorldError::ObstacleOutOfBounds { index, rect: *rect });
            }
        }
        Ok(Self { bounds, obstacles })
    }

    /// An obstacle-free world of the given size anchored at the origin.
    pub fn empty(width: f64, height: f64) -> Result<Self, WorldError> {
        Self::new(Rect::new(0.0, 0.0, width, height), Vec::new())
    }

    /// Serializes the world back into the world-file text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("bounds {} {}\n", self.bounds.w, self.bounds.h);
        for r in &self.obstacles {
            out.push_str(&format!("rect {} {} {} {}\n", r.x, r.y, r.w, r.h));
        }
        out
    }
}

/// Parses a world file.
///
/// The first meaningful line must be `bounds <w> <h>`; every following
/// non-empty, non-comment line must be `rect <x> <y> <w> <h>`.
pub fn load_world(text: &str) -> Result<World, WorldError> {
    let mut bounds: Option<Rect> = None;
    let mut obstacles = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();
        let parse_err = |message: String| WorldError::Parse { line: line_no, message };

        match keyword {
            "bounds" => {
                if bounds.is_some() {
                    return Err(parse_err("duplicate bounds line".into()));
                }
                if !obstacles.is_empty() {
                    return Err(parse_err("bounds must precede rect lines".into()));
                }
                let [w, h] = parse_numbers::<2>(&args).map_err(parse_err)?;
                if w <= 0.0 || h <= 0.0 {
                    return Err(parse_err("bounds must be positive".into()));
                }
                bounds = Some(Rect::new(0.0, 0.0, w, h));
            }
            "rect" => {
                if bounds.is_none() {
                    return Err(parse_err("rect before bounds".into()));
                }
                let [x, y, w, h] = parse_numbers::<4>(&args).map_err(parse_err)?;
                if w <= 0.0 || h <= 0.0 {
                    return Err(parse_err("rect size must be positive".into()));
                }
                obstacles.push(Rect::new(x, y, w, h));
            }
            other => return Err(parse_err(format!("unknown keyword `{other}`"))),
        }
    }

    let bounds = bounds.ok_or(WorldError::Parse {
        line: text.lines().count().max(1),
        message: "missing bounds line".into(),
    })?;
    World::new(bounds, obstacles)
}

fn parse_numbers<const N: usize>(args: &[&str]) -> Result<[f64; N], String> {
    if args.len() != N {
        return Err(format!("expected {N} numbers, found {}", args.len()));
    }
    let mut out = [0.0; N];
    for (slot, tok) in out.iter_mut().zip(args) {
        let v: f64 = tok
            .parse()
            .map_err(|_| format!("`{tok}` is not a number"))?;
        if !v.is_finite() {
            return Err(format!("`{tok}` is not finite"));
        }
        *slot = v;
    }
    Ok(out)
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly TAU.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed smallest difference `a - b` wrapped into `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Rover position and heading. Heading is kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChassisConfig {
    pub wheelbase: f64,
    pub max_speed: f64,
    /// Radians, strictly below π/2.
    pub max_steer: f64,
    /// Radius of the collision disc around the pose.
    pub body_radius: f64,
}

impl Default for ChassisConfig {
    fn default() -> Self {
        Self {
            wheelbase: 0.15,
            max_speed: 0.5,
            max_steer: 30f64.to_radians(),
            body_radius: 0.12,
        }
    }
}

impl ChassisConfig {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.wheelbase, self.max_speed, self.max_steer, self.body_radius];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err("chassis parameters must be positive and finite".into());
        }
        if self.max_steer >= std::f64::consts::FRAC_PI_2 {
            return Err("max_steer must be below 90 degrees".into());
        }
        Ok(())
    }
}

/// Advances the front-steer bicycle model by one step of `dt` seconds.
///
/// Heading advances by `v·tan(steer)/wheelbase·dt`; the position moves `v·dt`
/// along the heading taken at the middle of the step, which keeps the update
/// on the chord of the exact constant-steer arc.
pub fn step_kinematics(
    pose: Pose,
    drive: crate::hardware::DriveState,
    cfg: &ChassisConfig,
    dt: f64,
) -> Pose {
    let v = drive.speed;
    let dtheta = v * drive.steer.tan() / cfg.wheelbase * dt;
    let mid = pose.heading + 0.5 * dtheta;
    Pose {
        x: pose.x + v * mid.cos() * dt,
        y: pose.y + v * mid.sin() * dt,
        heading: normalize_angle(pose.heading + dtheta),
    }
}

/// Distance along the ray to the first obstacle face or world wall, or
/// `None` if nothing is hit within `max_range`.
pub fn raycast(world: &World, origin: Vec2, direction: Vec2, max_range: f64) -> Option<f64> {
    let mut best = if world.bounds.contains_point(origin) {
        world.bounds.ray_exit(origin, direction)
    } else {
        0.0
    };
    for rect in &world.obstacles {
        if let Some(t) = rect.ray_entry(origin, direction) {
            if t < best {
                best = t;
            }
        }
    }
    (best <= max_range).then_some(best)
}

/// True iff the disc at the pose strictly overlaps an obstacle or pokes out
/// of the world bounds. Tangency does not count.
pub fn collision_check(world: &World, pose: &Pose, body_radius: f64) -> bool {
    let b = &world.bounds;
    if pose.x - body_radius < b.x
        || pose.x + body_radius > b.max_x()
        || pose.y - body_radius < b.y
        || pose.y + body_radius > b.max_y()
    {
        return true;
    }
    let p = pose.position();
    world
        .obstacles
        .iter()
        .any(|r| r.distance_to(p) < body_radius)
}
