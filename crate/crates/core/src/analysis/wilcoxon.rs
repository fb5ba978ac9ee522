use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::AnalysisError;

/// Largest sample size handled by exact enumeration of the null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// First member of each pair tends to be larger.
    Greater,
    Less,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub exact: bool,
}

impl WilcoxonResult {
    /// The conventional statistic, `min(W+, W−)`.
    pub fn statistic(&self) -> f64 {
        self.w_plus.min(self.w_minus)
    }
}

/// Average ranks of `values` (1-based), ties sharing the mean rank. Returned
/// doubled so that half ranks stay integral.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged, doubled
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Tie group sizes among `values`.
fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        out.push(j - i + 1);
        i = j + 1;
    }
    out
}

fn tail_p(le: f64, ge: f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::TwoSided => (2.0 * le.min(ge)).min(1.0),
        Alternative::Greater => ge,
        Alternative::Less => le,
    }
}

/// Paired signed-rank test on `a − b`, two-sided.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult, AnalysisError> {
    wilcoxon_signed_rank_with(pairs, Alternative::TwoSided)
}

pub fn wilcoxon_signed_rank_with(pairs: &[(f64, f64)], alternative: Alternative) -> Result<WilcoxonResult, AnalysisError> {
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(AnalysisError::IdenticalSamples);
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let w_plus2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| *r).sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total - w_plus2) as f64 / 2.0;

    if n <= EXACT_MAX_N {
        // counts[s] = number of sign assignments whose doubled W+ equals s
        let mut counts = vec![0u64; total as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let le: u64 = counts[..=w_plus2 as usize].iter().sum();
        let ge: u64 = counts[w_plus2 as usize..].iter().sum();
        let denom = (1u64 << n) as f64;
        let p = match alternative {
            Alternative::TwoSided => ((2 * le.min(ge)) as f64 / denom).min(1.0),
            Alternative::Greater => ge as f64 / denom,
            Alternative::Less => le as f64 / denom,
        };
        return Ok(WilcoxonResult { n, w_plus, w_minus, p_value: p, exact: true });
    }

    let p = normal_approx_p(w_plus, &abs, alternative);
    Ok(WilcoxonResult { n, w_plus, w_minus, p_value: p, exact: false })
}

/// Normal approximation with tie-corrected variance and a continuity
/// correction of one half towards the mean.
fn normal_approx_p(w_plus: f64, abs_diffs: &[f64], alternative: Alternative) -> f64 {
    let nf = abs_diffs.len() as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes(abs_diffs).iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let ge = 1.0 - normal.cdf((w_plus - mean - 0.5) / sd);
    let le = normal.cdf((w_plus - mean + 0.5) / sd);
    tail_p(le.min(1.0), ge.min(1.0), alternative)
}

/// Stars for a p-value: `****` below 1e-4 down to `*` below 0.05, else `ns`.
pub fn significance_marker(p: f64) -> &'static str {
    if p < 0.0001 {
        "****"
    } else if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        "ns"
    }
}
