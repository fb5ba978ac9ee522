use log::warn;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::taxels::TaxelGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Inlier residual bound, N per taxel.
    pub inlier_threshold: f64,
    /// How often the cached planes are refit, Hz.
    pub refit_rate: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { iterations: 100, inlier_threshold: 0.2, refit_rate: 3.0 }
    }
}

/// `value = a·col + b·row + c` over taxel index coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    #[inline]
    pub fn eval(&self, col: f64, row: f64) -> f64 {
        self.a * col + self.b * row + self.c
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule; `None` when the system is (near) singular.
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(m);
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    if d.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = rhs[r];
        }
        *slot = det3(mk) / d;
    }
    Some(out)
}

/// Least-squares plane through `points` (col, row, value).
fn least_squares(points: &[(f64, f64, f64)]) -> Option<Plane> {
    if points.len() < 3 {
        return None;
    }
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for &(x, y, z) in points {
        let row = [x, y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * z;
        }
    }
    solve3(m, rhs).map(|[a, b, c]| Plane { a, b, c })
}

/// Robust plane fit. Returns the plane refit on the best consensus set and
/// a flag set when no non-degenerate sample could be drawn, in which case
/// the plane is the plain mean (a flat offset).
pub fn fit_plane_ransac(points: &[(f64, f64, f64)], cfg: &RansacConfig, rng: &mut impl Rng) -> (Plane, bool) {
    let mean = || {
        let c = if points.is_empty() { 0.0 } else { points.iter().map(|p| p.2).sum::<f64>() / points.len() as f64 };
        Plane { a: 0.0, b: 0.0, c }
    };
    if points.len() < 3 {
        return (mean(), true);
    }

    let mut best: Option<(usize, f64, Plane)> = None;
    for _ in 0..cfg.iterations {
        let idx = sample(rng, points.len(), 3);
        let tri: Vec<_> = idx.iter().map(|i| points[i]).collect();
        let m = [
            [tri[0].0, tri[0].1, 1.0],
            [tri[1].0, tri[1].1, 1.0],
            [tri[2].0, tri[2].1, 1.0],
        ];
        let Some([a, b, c]) = solve3(m, [tri[0].2, tri[1].2, tri[2].2]) else {
            continue;
        };
        let plane = Plane { a, b, c };
        let mut count = 0;
        let mut residual = 0.0;
        for &(x, y, z) in points {
            let r = (z - plane.eval(x, y)).abs();
            if r <= cfg.inlier_threshold {
                count += 1;
                residual += r;
            }
        }
        let better = match best {
            None => true,
            Some((n, res, _)) => count > n || (count == n && residual < res),
        };
        if better {
            best = Some((count, residual, plane));
        }
    }

    let Some((_, _, sample_plane)) = best else {
        warn!("bulk compensation: every RANSAC sample was collinear, subtracting the mean");
        return (mean(), true);
    };
    let inliers: Vec<_> = points
        .iter()
        .copied()
        .filter(|&(x, y, z)| (z - sample_plane.eval(x, y)).abs() <= cfg.inlier_threshold)
        .collect();
    match least_squares(&inliers) {
        Some(p) => (p, false),
        None => (sample_plane, false),
    }
}

/// A compensated grid and the per-component planes removed from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Compensation {
    pub grid: TaxelGrid,
    pub planes: [Plane; 3],
    pub degenerate: bool,
}

fn component_points(grid: &TaxelGrid, k: usize) -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::with_capacity(grid.rows * grid.cols);
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            pts.push((col as f64, row as f64, grid.get(row, col)[k]));
        }
    }
    pts
}

fn subtract(grid: &TaxelGrid, planes: &[Plane; 3]) -> TaxelGrid {
    let mut out = grid.clone();
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let cell = out.get_mut(row, col);
            for (k, plane) in planes.iter().enumerate() {
                cell[k] -= plane.eval(col as f64, row as f64);
            }
        }
    }
    out
}

/// Fits a plane to each force component over the array and subtracts it.
/// Localized contact footprints are outliers to the plane and survive.
pub fn ransac_plane_compensate(grid: &TaxelGrid, cfg: &RansacConfig, rng: &mut impl Rng) -> Compensation {
    let mut planes = [Plane::default(); 3];
    let mut degenerate = false;
    for (k, plane) in planes.iter_mut().enumerate() {
        let (p, d) = fit_plane_ransac(&component_points(grid, k), cfg, rng);
        *plane = p;
        degenerate |= d;
    }
    Compensation { grid: subtract(grid, &planes), planes, degenerate }
}

/// Caches the fitted planes for both arrays and refits them at
/// `cfg.refit_rate`; grids in between reuse the last planes.
#[derive(Clone, Debug)]
pub struct BulkCompensator {
    cfg: RansacConfig,
    planes: Option<[[Plane; 3]; 2]>,
    last_fit: f64,
    degenerate_fits: usize,
}

impl BulkCompensator {
    pub fn new(cfg: RansacConfig) -> Self {
        Self { cfg, planes: None, last_fit: f64::NEG_INFINITY, degenerate_fits: 0 }
    }

    pub fn degenerate_fits(&self) -> usize {
        self.degenerate_fits
    }

    pub fn apply(&mut self, left: &TaxelGrid, right: &TaxelGrid, t: f64, rng: &mut impl Rng) -> (TaxelGrid, TaxelGrid) {
        let period = if self.cfg.refit_rate > 0.0 { 1.0 / self.cfg.refit_rate } else { f64::INFINITY };
        if self.planes.is_none() || t - self.last_fit >= period - 1e-9 {
            let l = ransac_plane_compensate(left, &self.cfg, rng);
            let r = ransac_plane_compensate(right, &self.cfg, rng);
            self.degenerate_fits += usize::from(l.degenerate) + usize::from(r.degenerate);
            self.planes = Some([l.planes, r.planes]);
            self.last_fit = t;
            return (l.grid, r.grid);
        }
        let [pl, pr] = self.planes.expect("planes cached above");
        (subtract(left, &pl), subtract(right, &pr))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effector::{Side, TaxelLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn planar_grid(a: f64, b: f64, c: f64) -> TaxelGrid {
        let mut g = TaxelGrid::zeros(Side::Left, &TaxelLayout::default(), 0.0);
        for row in 0..g.rows {
            for col in 0..g.cols {
                let v = a * col as f64 + b * row as f64 + c;
                *g.get_mut(row, col) = [v, -v, 0.5 * v];
            }
        }
        g
    }

    #[test]
    fn pure_plane_is_removed() {
        let g = planar_grid(0.1, 0.1, 0.0);
        let out = ransac_plane_compensate(&g, &RansacConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(out.grid.max_magnitude() < 1e-9);
        assert!(!out.degenerate);
    }

    #[test]
    fn localized_spike_survives() {
        let mut g = planar_grid(0.05, -0.02, 0.3);
        g.get_mut(1, 3)[2] += 4.0;
        let out = ransac_plane_compensate(&g, &RansacConfig::default(), &mut ChaCha8Rng::seed_from_u64(2));
        assert!((out.grid.get(1, 3)[2] - 4.0).abs() < 1e-9);
        let others = (0..g.rows)
            .flat_map(|r| (0..g.cols).map(move |c| (r, c)))
            .filter(|&rc| rc != (1, 3))
            .map(|(r, c)| out.grid.get(r, c)[2].abs())
            .fold(0.0, f64::max);
        assert!(others < 1e-9);
    }

    #[test]
    fn compensation_is_idempotent() {
        let mut g = planar_grid(0.08, 0.03, -0.1);
        g.get_mut(2, 0)[2] += 3.0;
        g.get_mut(2, 1)[2] += 2.0;
        let cfg = RansacConfig::default();
        let once = ransac_plane_compensate(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).grid;
        let twice = ransac_plane_compensate(&once, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).grid;
        for (a, b) in once.forces.iter().zip(&twice.forces) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn collinear_points_fall_back_to_mean() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 0.0, 1.0 + i as f64)).collect();
        let (p, degenerate) = fit_plane_ransac(&pts, &RansacConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(degenerate);
        assert_eq!(p, Plane { a: 0.0, b: 0.0, c: 3.0 });
    }

    #[test]
    fn compensator_refits_on_schedule() {
        let mut comp = BulkCompensator::new(RansacConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g1 = planar_grid(0.0, 0.0, 1.0);
        let g2 = planar_grid(0.0, 0.0, 2.0);
        let (l, _) = comp.apply(&g1, &g1, 0.0, &mut rng);
        assert!(l.max_magnitude() < 1e-9);
        // cached plane still subtracts 1.0 before the next refit
        let (l, _) = comp.apply(&g2, &g2, 0.1, &mut rng);
        assert!((l.get(0, 0)[0] - 1.0).abs() < 1e-9);
        let (l, _) = comp.apply(&g2, &g2, 0.34, &mut rng);
        assert!(l.max_magnitude() < 1e-9);
    }
}
