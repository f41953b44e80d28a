//! Seeded scenario worlds used by tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::{Rect, Vec2, World};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterParams {
    pub width: f64,
    pub height: f64,
    pub min_obstacles: usize,
    pub max_obstacles: usize,
    pub min_size: f64,
    pub max_size: f64,
    /// No obstacle comes closer than this to the world centre, where the
    /// rover starts.
    pub start_clearance: f64,
}

impl Default for ScatterParams {
    fn default() -> Self {
        Self {
            width: 20.0,
            height: 20.0,
            min_obstacles: 10,
            max_obstacles: 30,
            min_size: 0.3,
            max_size: 1.5,
            start_clearance: 1.0,
        }
    }
}

/// Scatters axis-aligned boxes over a rectangular field. The same seed
/// always yields the same world.
pub fn scatter(seed: u64, params: &ScatterParams) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(params.min_obstacles..=params.max_obstacles);
    let centre = Vec2::new(params.width / 2.0, params.height / 2.0);
    let mut obstacles = Vec::with_capacity(count);
    while obstacles.len() < count {
        let w = rng.random_range(params.min_size..=params.max_size);
        let h = rng.random_range(params.min_size..=params.max_size);
        let x = rng.random_range(0.0..=params.width - w);
        let y = rng.random_range(0.0..=params.height - h);
        let rect = Rect::new(x, y, w, h);
        if rect.distance_to(centre) >= params.start_clearance {
            obstacles.push(rect);
        }
    }
    World::new(Rect::new(0.0, 0.0, params.width, params.height), obstacles)
        .expect("generated obstacles lie inside the bounds")
}

/// A straight corridor `length` long and `width` wide, closed at both ends.
/// Starting near the west end facing east puts the far wall dead ahead.
pub fn corridor(length: f64, width: f64) -> World {
    World::new(Rect::new(0.0, 0.0, length, width), Vec::new()).expect("positive corridor size")
}
