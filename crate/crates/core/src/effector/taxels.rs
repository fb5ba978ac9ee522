use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::physics2d::{BodyId, Contact};

use super::EffectorState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The −x face when the link points along +y.
    Left,
    Right,
}

/// Array geometry: `cols` taxels along the link at pitch `length / cols`,
/// `rows` across the finger height. Column 0 is at the tip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxelLayout {
    pub rows: usize,
    pub cols: usize,
    pub link_length: f64,
}

impl Default for TaxelLayout {
    fn default() -> Self {
        Self { rows: 4, cols: 10, link_length: 0.40 }
    }
}

impl TaxelLayout {
    pub fn pitch(&self) -> f64 {
        self.link_length / self.cols as f64
    }

    /// Distance from the tip to the centre of column `col`.
    pub fn column_location(&self, col: usize) -> f64 {
        (col as f64 + 0.5) * self.pitch()
    }
}

/// Triaxial readings of one array: `x` is shear along the link (positive
/// towards the tip), `y` shear across the height, `z` compression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaxelGrid {
    pub side: Side,
    pub rows: usize,
    pub cols: usize,
    pub pitch: f64,
    pub forces: Vec<[f64; 3]>,
    pub timestamp: f64,
}

impl TaxelGrid {
    pub fn zeros(side: Side, layout: &TaxelLayout, timestamp: f64) -> Self {
        Self {
            side,
            rows: layout.rows,
            cols: layout.cols,
            pitch: layout.pitch(),
            forces: vec![[0.0; 3]; layout.rows * layout.cols],
            timestamp,
        }
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn get(&self, row: usize, col: usize) -> [f64; 3] {
        self.forces[self.index(row, col)]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut [f64; 3] {
        let i = self.index(row, col);
        &mut self.forces[i]
    }

    /// Sum of each component over the whole array.
    pub fn total(&self) -> [f64; 3] {
        self.forces.iter().fold([0.0; 3], |acc, f| [acc[0] + f[0], acc[1] + f[1], acc[2] + f[2]])
    }

    pub fn max_magnitude(&self) -> f64 {
        self.forces.iter().map(|f| magnitude(*f)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.forces.iter().all(|f| f.iter().all(|v| v.is_finite()))
    }
}

/// Footprint cut-off, in pitches from the contact centre.
pub const FOOTPRINT_RADIUS: f64 = 1.5;

#[inline]
pub(crate) fn magnitude(f: [f64; 3]) -> f64 {
    (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt()
}

/// Synthetic sensor disturbances: an orientation-dependent bulk offset
/// (a plane over each array, per component) and white noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxelNoise {
    /// Peak magnitude of the bulk-field plane, N.
    pub bulk_amplitude: f64,
    /// Standard deviation of per-taxel white noise, N.
    pub noise_std: f64,
}

impl Default for TaxelNoise {
    fn default() -> Self {
        Self { bulk_amplitude: 0.5, noise_std: 0.02 }
    }
}

impl TaxelNoise {
    pub const NONE: TaxelNoise = TaxelNoise { bulk_amplitude: 0.0, noise_std: 0.0 };

    /// Bulk offset at (row, col) for force component `k` with the link at
    /// `heading`. Each component sees a differently oriented field.
    pub fn bulk_offset(&self, side: Side, heading: f64, k: usize, row: usize, col: usize, layout: &TaxelLayout) -> f64 {
        if self.bulk_amplitude == 0.0 {
            return 0.0;
        }
        let phase = heading + k as f64 * 2.0 * std::f64::consts::FRAC_PI_3 + if side == Side::Right { 0.7 } else { 0.0 };
        let u = col as f64 / layout.cols as f64;
        let v = row as f64 / layout.rows as f64;
        self.bulk_amplitude * (0.6 * phase.cos() + 0.25 * phase.sin() * u + 0.15 * (2.0 * phase).cos() * v)
    }
}

/// Projects the effector's contacts onto the two arrays.
///
/// Each contact deposits its force on the nearest taxels: a Gaussian
/// (σ = one pitch) centred on the contact's distance from the tip and on the
/// middle of the rows, cut off beyond [`FOOTPRINT_RADIUS`] pitches and
/// normalized so the side's array sums to the contact force. The cut-off
/// keeps the rest of the array on the bulk plane, which is what lets RANSAC
/// separate contacts from the field. The side is the one the contact point lies on; a contact exactly on
/// the axis is split between both.
pub fn sample_taxels(
    state: &EffectorState,
    effector: BodyId,
    contacts: &[Contact],
    layout: &TaxelLayout,
    noise: &TaxelNoise,
    timestamp: f64,
    rng: &mut impl Rng,
) -> (TaxelGrid, TaxelGrid) {
    let mut left = TaxelGrid::zeros(Side::Left, layout, timestamp);
    let mut right = TaxelGrid::zeros(Side::Right, layout, timestamp);
    let axis = state.axis();
    let across = axis.cross_z();
    let pitch = layout.pitch();
    let mut weights = vec![0.0; layout.rows * layout.cols];
    let row_center = 0.5 * (layout.rows as f64 - 1.0);

    for c in contacts.iter().filter(|c| c.involves(effector)) {
        let f = c.force_on(effector);
        if f.length_squared() == 0.0 {
            continue;
        }
        let rel = c.point - state.tip;
        let along = (-rel.dot(axis)).clamp(0.0, layout.link_length);
        let lateral = rel.dot(across);
        let shear = f.dot(axis);
        let compression = f.dot(across).abs();

        let center = along / pitch - 0.5;
        for (i, w) in weights.iter_mut().enumerate() {
            let (row, col) = (i / layout.cols, i % layout.cols);
            let d2 = (col as f64 - center).powi(2) + (row as f64 - row_center).powi(2);
            *w = if d2 <= FOOTPRINT_RADIUS * FOOTPRINT_RADIUS { (-0.5 * d2).exp() } else { 0.0 };
        }
        let norm: f64 = weights.iter().sum();

        let share = if lateral < 0.0 {
            [(1.0, &mut left), (0.0, &mut right)]
        } else if lateral > 0.0 {
            [(0.0, &mut left), (1.0, &mut right)]
        } else {
            [(0.5, &mut left), (0.5, &mut right)]
        };
        for (fraction, grid) in share {
            if fraction == 0.0 {
                continue;
            }
            for (i, w) in weights.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let s = fraction * w / norm;
                let cell = grid.get_mut(i / layout.cols, i % layout.cols);
                cell[0] += s * shear;
                cell[2] += s * compression;
            }
        }
    }

    if noise.bulk_amplitude != 0.0 || noise.noise_std > 0.0 {
        let white = Normal::new(0.0, noise.noise_std.max(0.0)).expect("finite std");
        for grid in [&mut left, &mut right] {
            for row in 0..layout.rows {
                for col in 0..layout.cols {
                    let side = grid.side;
                    for k in 0..3 {
                        let mut v = noise.bulk_offset(side, state.heading, k, row, col, layout);
                        if noise.noise_std > 0.0 {
                            v += white.sample(rng);
                        }
                        grid.get_mut(row, col)[k] += v;
                    }
                }
            }
        }
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EFF: BodyId = BodyId(9);
    const OTHER: BodyId = BodyId(3);

    fn upright() -> EffectorState {
        EffectorState { tip: Vec2::new(0.2, 0.2), heading: 0.0, length: 0.4, ..EffectorState::default() }
    }

    /// A contact pressing on the effector's side at `along` metres from the tip.
    fn side_contact(state: &EffectorState, along: f64, left: bool, force: f64) -> Contact {
        let dir = if left { -1.0 } else { 1.0 };
        let point = state.tip - state.axis() * along + state.axis().cross_z() * (dir * 0.012);
        // body_a is the object, normal points from it into the effector
        Contact {
            body_a: OTHER,
            body_b: EFF,
            point,
            normal: state.axis().cross_z() * -dir,
            penetration_depth: 0.0,
            normal_force: force,
            tangent_force: 0.0,
            friction_coeff: 0.5,
        }
    }

    #[test]
    fn no_contacts_no_noise_gives_zero_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (l, r) = sample_taxels(&upright(), EFF, &[], &TaxelLayout::default(), &TaxelNoise::NONE, 0.0, &mut rng);
        assert!(l.forces.iter().chain(r.forces.iter()).all(|f| *f == [0.0; 3]));
    }

    #[test]
    fn single_contact_sums_to_its_force_on_its_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = upright();
        let c = side_contact(&s, 0.2, true, 5.0);
        let (l, r) = sample_taxels(&s, EFF, &[c], &TaxelLayout::default(), &TaxelNoise::NONE, 0.0, &mut rng);
        let total = l.total();
        assert!((total[2] - 5.0).abs() <= 0.02 * 5.0, "{total:?}");
        assert!(r.max_magnitude() < 1e-12);
        // the footprint peaks at the contact column, mid-height, and leaves
        // the far end of the array untouched
        let peak_col = (0..10).max_by(|&a, &b| l.get(1, a)[2].total_cmp(&l.get(1, b)[2])).unwrap();
        assert!(peak_col == 4 || peak_col == 5);
        assert_eq!(l.get(1, 0), [0.0; 3]);
        assert_eq!(l.get(0, 4), [0.0; 3]);
    }

    #[test]
    fn pinch_loads_both_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = upright();
        let contacts = [side_contact(&s, 0.1, true, 3.0), side_contact(&s, 0.1, false, 3.0)];
        let (l, r) = sample_taxels(&s, EFF, &contacts, &TaxelLayout::default(), &TaxelNoise::NONE, 0.0, &mut rng);
        assert!((l.total()[2] - 3.0).abs() < 1e-9);
        assert!((r.total()[2] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn noise_is_seeded() {
        let s = upright();
        let n = TaxelNoise::default();
        let a = sample_taxels(&s, EFF, &[], &TaxelLayout::default(), &n, 0.0, &mut ChaCha8Rng::seed_from_u64(5));
        let b = sample_taxels(&s, EFF, &[], &TaxelLayout::default(), &n, 0.0, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }
}
