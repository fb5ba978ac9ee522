use serde::{Deserialize, Serialize};

use super::taxels::{magnitude, TaxelGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakRegion {
    Left,
    Right,
    Tip,
}

/// What the event-driven policy sees of the tactile arrays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSummary {
    /// Largest windowed force magnitude over both arrays, N.
    pub peak_force: f64,
    pub peak_region: PeakRegion,
    /// Distance of the peak window's centre from the tip, m.
    pub peak_location: f64,
    /// Largest windowed force within the tip band, N.
    pub tip_force: f64,
    pub timestamp: f64,
}

impl ContactSummary {
    pub fn quiet(timestamp: f64) -> Self {
        Self { peak_force: 0.0, peak_region: PeakRegion::Tip, peak_location: 0.0, tip_force: 0.0, timestamp }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummaryConfig {
    /// Fraction of the link length, from the tip, that counts as the tip.
    pub tip_band_fraction: f64,
    /// Columns either side of the centre summed into one window.
    pub window_half_width: usize,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self { tip_band_fraction: 0.15, window_half_width: 1 }
    }
}

/// Force magnitude of the vector sum over all rows of columns
/// `[col − h, col + h]`, clipped to the array.
fn window_force(grid: &TaxelGrid, col: usize, h: usize) -> f64 {
    let lo = col.saturating_sub(h);
    let hi = (col + h).min(grid.cols - 1);
    let mut sum = [0.0; 3];
    for row in 0..grid.rows {
        for c in lo..=hi {
            let f = grid.get(row, c);
            for k in 0..3 {
                sum[k] += f[k];
            }
        }
    }
    magnitude(sum)
}

/// Peak windowed force over both arrays and its region. Ties go to the left
/// array, then to the column nearer the tip. Windows centred within the tip
/// band report `Tip` regardless of side.
pub fn summarize_contacts(left: &TaxelGrid, right: &TaxelGrid, link_length: f64, cfg: &SummaryConfig) -> ContactSummary {
    let band = cfg.tip_band_fraction * link_length;
    let mut out = ContactSummary::quiet(left.timestamp.max(right.timestamp));
    let mut found = false;
    for (grid, region) in [(left, PeakRegion::Left), (right, PeakRegion::Right)] {
        for col in 0..grid.cols {
            let f = window_force(grid, col, cfg.window_half_width);
            let location = (col as f64 + 0.5) * grid.pitch;
            let in_tip = location <= band;
            if in_tip && f > out.tip_force {
                out.tip_force = f;
            }
            if !found || f > out.peak_force {
                found = true;
                out.peak_force = f;
                out.peak_location = location.min(link_length);
                out.peak_region = if in_tip { PeakRegion::Tip } else { region };
            }
        }
    }
    out
}
