//! Seeded generation of lateral-access clutter scenes.
//!
//! Two layouts are produced: a 5 × 7 grid with objects centred in distinct
//! cells (hardware style) and continuous rejection-sampled placement with
//! random yaw (simulation style). Both are pure functions of the seed and
//! parameters.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Rot, Vec2};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

pub const MIN_OBJECT_MASS: f64 = 0.143;
pub const MAX_OBJECT_MASS: f64 = 0.570;
pub const MIN_FOOTPRINT_SIDE: f64 = 0.043;
pub const MAX_FOOTPRINT_SIDE: f64 = 0.088;

const RANGE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("catalog item {index} ({width:.3} × {depth:.3} m) does not fit a {cell_width:.4} × {cell_depth:.4} m grid cell")]
    FootprintExceedsCell { index: usize, width: f64, depth: f64, cell_width: f64, cell_depth: f64 },
    #[error("placement budget exhausted after {placed} of {requested} objects (area density {density:.3})")]
    BudgetExhausted { placed: usize, requested: usize, density: f64 },
    #[error("invalid scene parameters: {0}")]
    InvalidParams(String),
    #[error("scene invariant violated: {0}")]
    Invalid(String),
    #[error("unsupported scene schema version {0}")]
    SchemaVersion(u32),
    #[error("scene JSON: {0}")]
    Json(String),
}

/// Scene rectangle: x across the width, y into the depth; the front edge
/// y = 0 is open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub width: f64,
    pub depth: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { width: 0.53, depth: 0.38 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneStyle {
    Grid,
    Continuous,
}

impl std::str::FromStr for SceneStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(SceneStyle::Grid),
            "continuous" => Ok(SceneStyle::Continuous),
            other => Err(format!("unknown scene style '{other}' (expected grid or continuous)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogItem {
    pub width: f64,
    pub depth: f64,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub catalog_id: usize,
    /// Footprint extent along the object's local x axis, m.
    pub width: f64,
    /// Footprint extent along the object's local y axis, m.
    pub depth: f64,
    pub mass: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// Render shade in [0, 1]; heavier objects are darker.
    pub darkness: f64,
}

impl SceneObject {
    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    fn corners(&self) -> [Vec2; 4] {
        let rot = Rot::new(self.yaw);
        let (hx, hy) = (0.5 * self.width, 0.5 * self.depth);
        [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)].map(|(x, y)| self.center() + rot.apply(Vec2::new(x, y)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub schema_version: u32,
    pub seed: u64,
    pub style: SceneStyle,
    pub bounds: Bounds,
    pub objects: Vec<SceneObject>,
    /// Effector start x on the open front edge.
    pub start_x: f64,
    pub goal: Vec2,
}

impl SceneSpec {
    /// A scene with no clutter, start and goal as given.
    pub fn empty(bounds: Bounds, start_x: f64, goal: Vec2) -> Self {
        Self { schema_version: SCENE_SCHEMA_VERSION, seed: 0, style: SceneStyle::Continuous, bounds, objects: Vec::new(), start_x, goal }
    }

    pub fn total_mass(&self) -> f64 {
        self.objects.iter().map(|o| o.mass).sum()
    }

    pub fn area_density(&self) -> f64 {
        self.objects.iter().map(|o| o.width * o.depth).sum::<f64>() / (self.bounds.width * self.bounds.depth)
    }

    /// Checks every layout invariant against `params`.
    pub fn validate(&self, params: &SceneGenParams) -> Result<(), SceneError> {
        let b = self.bounds;
        for (i, o) in self.objects.iter().enumerate() {
            if !(MIN_OBJECT_MASS - RANGE_EPS..=MAX_OBJECT_MASS + RANGE_EPS).contains(&o.mass) {
                return Err(SceneError::Invalid(format!("object {i} mass {} outside range", o.mass)));
            }
            for side in [o.width, o.depth] {
                if !(MIN_FOOTPRINT_SIDE - RANGE_EPS..=MAX_FOOTPRINT_SIDE + RANGE_EPS).contains(&side) {
                    return Err(SceneError::Invalid(format!("object {i} side {side} outside range")));
                }
            }
            for c in o.corners() {
                if c.x < -RANGE_EPS || c.y < -RANGE_EPS || c.x > b.width + RANGE_EPS || c.y > b.depth + RANGE_EPS {
                    return Err(SceneError::Invalid(format!("object {i} leaves the bounds")));
                }
            }
        }
        for i in 0..self.objects.len() {
            for j in (i + 1)..self.objects.len() {
                let gap = separating_gap(&self.objects[i], &self.objects[j]);
                if gap < params.clearance - RANGE_EPS {
                    return Err(SceneError::Invalid(format!("objects {i} and {j} are only {gap:.5} m apart")));
                }
            }
        }
        if (self.goal.y - params.goal_y()).abs() > RANGE_EPS {
            return Err(SceneError::Invalid("goal is not in the back band".into()));
        }
        if !(0.0..=b.width).contains(&self.goal.x) || !(0.0..=b.width).contains(&self.start_x) {
            return Err(SceneError::Invalid("start or goal x outside the scene width".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let spec: SceneSpec = serde_json::from_str(text).map_err(|e| SceneError::Json(e.to_string()))?;
        if spec.schema_version != SCENE_SCHEMA_VERSION {
            return Err(SceneError::SchemaVersion(spec.schema_version));
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneGenParams {
    pub bounds: Bounds,
    pub count_min: usize,
    pub count_max: usize,
    /// Count range used by continuous placement instead of
    /// `count_min..=count_max`. Random sequential placement jams well below
    /// the grid's 35 objects, so the default caps it lower.
    pub continuous_count: Option<(usize, usize)>,
    pub catalog: Vec<CatalogItem>,
    /// Grid cells across the width.
    pub grid_columns: usize,
    /// Grid cells along the depth.
    pub grid_rows: usize,
    /// Minimum gap between objects, m.
    pub clearance: f64,
    /// Rejection-sampling attempts allowed per requested object.
    pub attempts_per_object: usize,
    /// Start and goal x are drawn at least this far from the side walls, m.
    pub side_margin: f64,
}

impl Default for SceneGenParams {
    fn default() -> Self {
        Self {
            bounds: Bounds::default(),
            count_min: 12,
            count_max: 35,
            continuous_count: Some((12, 30)),
            catalog: default_catalog(),
            grid_columns: 5,
            grid_rows: 7,
            clearance: 0.001,
            attempts_per_object: 400,
            side_margin: 0.06,
        }
    }
}

impl SceneGenParams {
    /// Goal depth: half the largest footprint in front of the back wall.
    pub fn goal_y(&self) -> f64 {
        self.bounds.depth - 0.5 * MAX_FOOTPRINT_SIDE
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.bounds.width / self.grid_columns as f64, self.bounds.depth / self.grid_rows as f64)
    }

    fn check(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::InvalidParams(m));
        if self.catalog.is_empty() {
            return bad("empty object catalog".into());
        }
        if self.count_min > self.count_max {
            return bad(format!("count_min {} exceeds count_max {}", self.count_min, self.count_max));
        }
        if let Some((lo, hi)) = self.continuous_count {
            if lo > hi {
                return bad(format!("continuous count range {lo}..={hi} is empty"));
            }
        }
        if !(self.bounds.width > 2.0 * self.side_margin && self.bounds.depth > MAX_FOOTPRINT_SIDE) {
            return bad("bounds too small".into());
        }
        for (i, c) in self.catalog.iter().enumerate() {
            let ok_mass = (MIN_OBJECT_MASS - RANGE_EPS..=MAX_OBJECT_MASS + RANGE_EPS).contains(&c.mass);
            let ok_side = [c.width, c.depth]
                .iter()
                .all(|s| (MIN_FOOTPRINT_SIDE - RANGE_EPS..=MAX_FOOTPRINT_SIDE + RANGE_EPS).contains(s));
            if !ok_mass || !ok_side {
                return bad(format!("catalog item {i} outside the mass/footprint ranges"));
            }
        }
        Ok(())
    }

    fn start_and_goal(&self, rng: &mut ChaCha8Rng) -> (f64, Vec2) {
        let lo = self.side_margin;
        let hi = self.bounds.width - self.side_margin;
        let start_x = rng.gen_range(lo..=hi);
        let goal_x = rng.gen_range(lo..=hi);
        (start_x, Vec2::new(goal_x, self.goal_y()))
    }
}

/// Eight rectangles spanning the footprint and mass ranges. The short side
/// stays under a default grid cell's depth so every item fits a cell.
pub fn default_catalog() -> Vec<CatalogItem> {
    (0..8)
        .map(|i| {
            let f = i as f64 / 7.0;
            CatalogItem {
                width: MIN_FOOTPRINT_SIDE + f * (MAX_FOOTPRINT_SIDE - MIN_FOOTPRINT_SIDE),
                depth: MIN_FOOTPRINT_SIDE + f * (0.050 - MIN_FOOTPRINT_SIDE),
                mass: MIN_OBJECT_MASS + f * (MAX_OBJECT_MASS - MIN_OBJECT_MASS),
            }
        })
        .collect()
}

fn darkness(mass: f64) -> f64 {
    ((mass - MIN_OBJECT_MASS) / (MAX_OBJECT_MASS - MIN_OBJECT_MASS)).clamp(0.0, 1.0)
}

fn make_object(catalog_id: usize, item: &CatalogItem, x: f64, y: f64, yaw: f64) -> SceneObject {
    SceneObject { catalog_id, width: item.width, depth: item.depth, mass: item.mass, x, y, yaw, darkness: darkness(item.mass) }
}

/// Objects centred in distinct cells of the grid; start and goal x drawn
/// along the front and back.
pub fn generate_grid_scene(seed: u64, params: &SceneGenParams) -> Result<SceneSpec, SceneError> {
    params.check()?;
    let (cw, cd) = params.cell_size();
    for (index, c) in params.catalog.iter().enumerate() {
        if c.width > cw - params.clearance || c.depth > cd - params.clearance {
            return Err(SceneError::FootprintExceedsCell { index, width: c.width, depth: c.depth, cell_width: cw, cell_depth: cd });
        }
    }
    let cells = params.grid_columns * params.grid_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(params.count_min..=params.count_max).min(cells);

    let mut order: Vec<usize> = (0..cells).collect();
    order.shuffle(&mut rng);
    let mut chosen = order[..count].to_vec();
    chosen.sort_unstable();

    let objects = chosen
        .into_iter()
        .map(|cell| {
            let col = cell % params.grid_columns;
            let row = cell / params.grid_columns;
            let id = rng.gen_range(0..params.catalog.len());
            make_object(id, &params.catalog[id], (col as f64 + 0.5) * cw, (row as f64 + 0.5) * cd, 0.0)
        })
        .collect();

    let (start_x, goal) = params.start_and_goal(&mut rng);
    Ok(SceneSpec { schema_version: SCENE_SCHEMA_VERSION, seed, style: SceneStyle::Grid, bounds: params.bounds, objects, start_x, goal })
}

/// Objects at rejection-sampled continuous poses with random yaw.
pub fn generate_continuous_scene(seed: u64, params: &SceneGenParams) -> Result<SceneSpec, SceneError> {
    params.check()?;
    let b = params.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de_0000_0001);
    let (lo, hi) = params.continuous_count.unwrap_or((params.count_min, params.count_max));
    let count = rng.gen_range(lo..=hi);
    let mut budget = params.attempts_per_object.saturating_mul(count.max(1));
    // a layout that jams early is discarded and restarted while budget remains
    let restart_after = params.attempts_per_object.saturating_mul(4).max(1);

    let mut objects: Vec<SceneObject> = Vec::with_capacity(count);
    let mut best_density = 0.0f64;
    let mut best_placed = 0;
    let mut stalled = 0;
    while objects.len() < count {
        let density = objects.iter().map(|o| o.width * o.depth).sum::<f64>() / (b.width * b.depth);
        if density > best_density {
            best_density = density;
            best_placed = objects.len();
        }
        if budget == 0 {
            return Err(SceneError::BudgetExhausted { placed: best_placed, requested: count, density: best_density });
        }
        if stalled >= restart_after {
            objects.clear();
            stalled = 0;
        }
        budget -= 1;
        stalled += 1;
        let id = rng.gen_range(0..params.catalog.len());
        let item = params.catalog[id];
        let yaw = rng.gen_range(0.0..std::f64::consts::PI);
        let (s, c) = yaw.sin_cos();
        let ex = 0.5 * (c.abs() * item.width + s.abs() * item.depth);
        let ey = 0.5 * (s.abs() * item.width + c.abs() * item.depth);
        if 2.0 * ex > b.width || 2.0 * ey > b.depth {
            continue;
        }
        let x = rng.gen_range(ex..=b.width - ex);
        let y = rng.gen_range(ey..=b.depth - ey);
        let candidate = make_object(id, &item, x, y, yaw);
        if objects.iter().all(|o| separating_gap(o, &candidate) >= params.clearance) {
            objects.push(candidate);
            stalled = 0;
        }
    }

    let (start_x, goal) = params.start_and_goal(&mut rng);
    Ok(SceneSpec { schema_version: SCENE_SCHEMA_VERSION, seed, style: SceneStyle::Continuous, bounds: b, objects, start_x, goal })
}

pub fn generate_scene(style: SceneStyle, seed: u64, params: &SceneGenParams) -> Result<SceneSpec, SceneError> {
    match style {
        SceneStyle::Grid => generate_grid_scene(seed, params),
        SceneStyle::Continuous => generate_continuous_scene(seed, params),
    }
}

/// Largest gap between the two rectangles' projections over their four face
/// normals. Positive means separated by at least that much; it never
/// overestimates the true distance.
fn separating_gap(a: &SceneObject, b: &SceneObject) -> f64 {
    let ca = a.corners();
    let cb = b.corners();
    let ra = Rot::new(a.yaw);
    let rb = Rot::new(b.yaw);
    let mut best = f64::NEG_INFINITY;
    for axis in [ra.x_axis(), ra.y_axis(), rb.x_axis(), rb.y_axis()] {
        let (amin, amax) = project(&ca, axis);
        let (bmin, bmax) = project(&cb, axis);
        best = best.max(bmin - amax).max(amin - bmax);
    }
    best
}

fn project(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        let d = c.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_deterministic() {
        let p = SceneGenParams::default();
        assert_eq!(generate_grid_scene(11, &p).unwrap(), generate_grid_scene(11, &p).unwrap());
        assert_ne!(generate_grid_scene(11, &p).unwrap(), generate_grid_scene(12, &p).unwrap());
    }

    #[test]
    fn continuous_is_deterministic() {
        let p = SceneGenParams::default();
        assert_eq!(generate_continuous_scene(5, &p).unwrap(), generate_continuous_scene(5, &p).unwrap());
    }

    #[test]
    fn grid_cells_are_distinct_and_on_lattice() {
        let p = SceneGenParams::default();
        let (cw, cd) = p.cell_size();
        for seed in 0..200 {
            let s = generate_grid_scene(seed, &p).unwrap();
            assert!(s.objects.len() <= 35 && s.objects.len() >= p.count_min);
            let mut cells: Vec<(i64, i64)> = s
                .objects
                .iter()
                .map(|o| {
                    let col = o.x / cw - 0.5;
                    let row = o.y / cd - 0.5;
                    assert!((col - col.round()).abs() < 1e-9 && (row - row.round()).abs() < 1e-9);
                    (col.round() as i64, row.round() as i64)
                })
                .collect();
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), s.objects.len());
            s.validate(&p).unwrap();
        }
    }

    #[test]
    fn full_grid_has_no_overlaps() {
        let p = SceneGenParams { count_min: 35, count_max: 35, ..SceneGenParams::default() };
        let s = generate_grid_scene(0, &p).unwrap();
        assert_eq!(s.objects.len(), 35);
        for i in 0..35 {
            for j in (i + 1)..35 {
                assert!(separating_gap(&s.objects[i], &s.objects[j]) >= p.clearance);
            }
        }
        s.validate(&p).unwrap();
    }

    #[test]
    fn oversized_catalog_item_is_rejected_for_grid() {
        let p = SceneGenParams {
            catalog: vec![CatalogItem { width: 0.088, depth: 0.088, mass: 0.3 }],
            ..SceneGenParams::default()
        };
        assert!(matches!(generate_grid_scene(1, &p), Err(SceneError::FootprintExceedsCell { index: 0, .. })));
        // continuous placement accepts it
        generate_continuous_scene(1, &SceneGenParams { continuous_count: Some((5, 5)), ..p }).unwrap();
    }

    #[test]
    fn infeasible_density_exhausts_budget() {
        let p = SceneGenParams { continuous_count: None, count_min: 200, count_max: 200, attempts_per_object: 50, ..SceneGenParams::default() };
        match generate_continuous_scene(3, &p) {
            Err(SceneError::BudgetExhausted { placed, requested, density }) => {
                assert_eq!(requested, 200);
                assert!(placed < 200);
                assert!(density > 0.0 && density < 1.0);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn darkness_tracks_mass() {
        let p = SceneGenParams::default();
        let s = generate_continuous_scene(9, &p).unwrap();
        for a in &s.objects {
            for b in &s.objects {
                if a.mass > b.mass {
                    assert!(a.darkness > b.darkness);
                }
            }
        }
    }

    #[test]
    fn json_replays_byte_identically() {
        let s = generate_grid_scene(42, &SceneGenParams::default()).unwrap();
        let text = s.to_json();
        let back = SceneSpec::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let mut s = generate_grid_scene(1, &SceneGenParams::default()).unwrap();
        s.schema_version = 99;
        assert_eq!(SceneSpec::from_json(&s.to_json()), Err(SceneError::SchemaVersion(99)));
    }
}
