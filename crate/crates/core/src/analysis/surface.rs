use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{mean, AnalysisError, Metric, TrialResult};

/// How a surface value relates to the baseline.
pub const ORIENTATION_FOLD_IMPROVEMENT: &str = "baseline_mean / cell_mean (above 1 is better than baseline)";

/// A metric over a two-parameter grid, stored as `values[i][j]` for
/// `x_values[i]`, `y_values[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSurface {
    pub x_name: String,
    pub y_name: String,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub metric: Metric,
    pub orientation: String,
    /// Smoothing applied, in grid-index units; `None` for raw surfaces.
    pub smoothing_sigma: Option<f64>,
}

impl SweepSurface {
    pub fn shape(&self) -> (usize, usize) {
        (self.x_values.len(), self.y_values.len())
    }

    pub fn mean(&self) -> f64 {
        let all: Vec<f64> = self.values.iter().flatten().copied().collect();
        mean(&all)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Header row `x\y, y0, y1, ...` then one row per x value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![format!("{}\\{}", self.x_name, self.y_name)];
        header.extend(self.y_values.iter().map(|y| y.to_string()));
        w.write_record(&header)?;
        for (x, row) in self.x_values.iter().zip(&self.values) {
            let mut rec = vec![x.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("surface serializes")
    }
}

/// Gaussian kernel of the given σ, truncated at 4σ and normalized.
fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma + 0.5) as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-0.5 * x * x / (sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Index into `0..n` of the half-sample symmetric extension `d c b a | a b c d`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m >= n {
        2 * n - 1 - m
    } else {
        m
    }
}

fn convolve_1d(line: &[f64], k: &[f64]) -> Vec<f64> {
    let n = line.len();
    let r = (k.len() / 2) as isize;
    (0..n)
        .map(|i| k.iter().enumerate().map(|(j, w)| w * line[reflect(i as isize + j as isize - r, n)]).sum())
        .collect()
}

/// Separable 2D Gaussian filter in grid-index units with reflected borders.
/// `sigma == 0` returns the surface unchanged.
pub fn gaussian_smooth(surface: &SweepSurface, sigma: f64) -> SweepSurface {
    let mut out = surface.clone();
    out.smoothing_sigma = Some(sigma);
    if sigma <= 0.0 || surface.values.is_empty() {
        return out;
    }
    let k = kernel(sigma);
    let rows: Vec<Vec<f64>> = surface.values.iter().map(|row| convolve_1d(row, &k)).collect();
    let ny = rows[0].len();
    for j in 0..ny {
        let column: Vec<f64> = rows.iter().map(|row| row[j]).collect();
        for (i, v) in convolve_1d(&column, &k).into_iter().enumerate() {
            out.values[i][j] = v;
        }
    }
    out
}

/// Results of one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub x: f64,
    pub y: f64,
    pub results: Vec<TrialResult>,
}

/// Per cell, `mean(baseline) / mean(cell)` for the chosen metric, over
/// non-faulted trials. Every `(x, y)` of the grid must have a cell.
pub fn build_sweep_surface(
    cells: &[SweepCell],
    baseline: &[TrialResult],
    metric: Metric,
    axes: (&str, &[f64]),
    y_axis: (&str, &[f64]),
) -> Result<SweepSurface, AnalysisError> {
    let (x_name, xs) = axes;
    let (y_name, ys) = y_axis;
    let base: Vec<f64> = baseline.iter().filter(|r| !r.faulted).map(|r| metric.of(r)).collect();
    if base.is_empty() {
        return Err(AnalysisError::EmptyBaseline);
    }
    let base_mean = mean(&base);

    let mut missing = Vec::new();
    let mut values = vec![vec![f64::NAN; ys.len()]; xs.len()];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let cell = cells.iter().find(|c| c.x == x && c.y == y);
            let samples: Vec<f64> = cell
                .map(|c| c.results.iter().filter(|r| !r.faulted).map(|r| metric.of(r)).collect())
                .unwrap_or_default();
            if samples.is_empty() {
                missing.push((x, y));
                continue;
            }
            values[i][j] = ratio(base_mean, mean(&samples));
        }
    }
    if !missing.is_empty() {
        return Err(AnalysisError::MissingCells(missing));
    }
    Ok(SweepSurface {
        x_name: x_name.to_string(),
        y_name: y_name.to_string(),
        x_values: xs.to_vec(),
        y_values: ys.to_vec(),
        values,
        metric,
        orientation: ORIENTATION_FOLD_IMPROVEMENT.to_string(),
        smoothing_sigma: None,
    })
}

fn ratio(baseline: f64, cell: f64) -> f64 {
    if cell == 0.0 {
        if baseline == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        baseline / cell
    }
}
