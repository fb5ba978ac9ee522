//! Trial records, paired signed-rank tests, sweep surfaces and the
//! comparison report.

mod surface;
mod wilcoxon;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategies::StrategyKind;

pub use surface::{build_sweep_surface, gaussian_smooth, SweepCell, SweepSurface, ORIENTATION_FOLD_IMPROVEMENT};
pub use wilcoxon::{significance_marker, wilcoxon_signed_rank, wilcoxon_signed_rank_with, Alternative, WilcoxonResult, EXACT_MAX_N};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("identical samples: every paired difference is zero, the signed-rank test is undefined")]
    IdenticalSamples,
    #[error("non-finite value in paired samples")]
    NonFinite,
    #[error("baseline has no usable trials")]
    EmptyBaseline,
    #[error("sweep cells without results: {0:?}")]
    MissingCells(Vec<(f64, f64)>),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for AnalysisError {
    fn from(e: csv::Error) -> Self {
        AnalysisError::Csv(e.to_string())
    }
}

impl From<std::io::Error> for AnalysisError {
    fn from(e: std::io::Error) -> Self {
        AnalysisError::Csv(e.to_string())
    }
}

/// Outcome of one strategy on one scene. Flat so it maps onto one CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scene_seed: u64,
    pub strategy: StrategyKind,
    pub success: bool,
    /// Tip-to-goal distance when the trial ended, m.
    pub d_goal: f64,
    /// Time to enter the goal region, or `t_tot` on failure, s.
    pub t_comp: f64,
    pub norm_distance: f64,
    pub norm_time: f64,
    pub excavates: u32,
    pub burrow_episodes: u32,
    pub pushed_out: u32,
    pub faulted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Distance,
    Time,
}

impl Metric {
    pub const BOTH: [Metric; 2] = [Metric::Distance, Metric::Time];

    pub fn of(self, r: &TrialResult) -> f64 {
        match self {
            Metric::Distance => r.norm_distance,
            Metric::Time => r.norm_time,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Distance => "distance",
            Metric::Time => "time",
        }
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub trials: usize,
    pub faulted: usize,
    /// Over non-faulted trials.
    pub success_rate: f64,
    pub mean_norm_distance: f64,
    pub median_norm_distance: f64,
    pub mean_norm_time: f64,
    pub median_norm_time: f64,
    pub excavates: u64,
    pub pushed_out: u64,
}

pub fn summarize(strategy: StrategyKind, results: &[TrialResult]) -> StrategySummary {
    let mine: Vec<&TrialResult> = results.iter().filter(|r| r.strategy == strategy).collect();
    let ok: Vec<&TrialResult> = mine.iter().copied().filter(|r| !r.faulted).collect();
    let dist: Vec<f64> = ok.iter().map(|r| r.norm_distance).collect();
    let time: Vec<f64> = ok.iter().map(|r| r.norm_time).collect();
    let successes = ok.iter().filter(|r| r.success).count();
    StrategySummary {
        strategy,
        trials: mine.len(),
        faulted: mine.len() - ok.len(),
        success_rate: if ok.is_empty() { 0.0 } else { successes as f64 / ok.len() as f64 },
        mean_norm_distance: mean(&dist),
        median_norm_distance: median(&dist),
        mean_norm_time: mean(&time),
        median_norm_time: median(&time),
        excavates: ok.iter().map(|r| r.excavates as u64).sum(),
        pushed_out: ok.iter().map(|r| r.pushed_out as u64).sum(),
    }
}

/// Metric values of `a` and `b` on the scenes where both ran without fault,
/// in scene-seed order.
pub fn paired_samples(results: &[TrialResult], a: StrategyKind, b: StrategyKind, metric: Metric) -> Vec<(f64, f64)> {
    let by_seed = |k: StrategyKind| -> BTreeMap<u64, f64> {
        results.iter().filter(|r| r.strategy == k && !r.faulted).map(|r| (r.scene_seed, metric.of(r))).collect()
    };
    let (ma, mb) = (by_seed(a), by_seed(b));
    ma.iter().filter_map(|(seed, va)| mb.get(seed).map(|vb| (*va, *vb))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: StrategyKind,
    pub b: StrategyKind,
    pub metric: Metric,
    pub pairs: usize,
    pub p_value: Option<f64>,
    pub marker: String,
    /// Why no p-value was produced.
    pub note: Option<String>,
}

pub fn pairwise_test(results: &[TrialResult], a: StrategyKind, b: StrategyKind, metric: Metric, alternative: Alternative) -> PairwiseTest {
    let pairs = paired_samples(results, a, b, metric);
    let (p_value, marker, note) = match wilcoxon_signed_rank_with(&pairs, alternative) {
        Ok(r) => (Some(r.p_value), significance_marker(r.p_value).to_string(), None),
        Err(e) => (None, "n/a".to_string(), Some(e.to_string())),
    };
    PairwiseTest { a, b, metric, pairs: pairs.len(), p_value, marker, note }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub summaries: Vec<StrategySummary>,
    pub tests: Vec<PairwiseTest>,
}

/// Summaries for every strategy present plus every pairwise test on both
/// metrics, in `StrategyKind` order.
pub fn compare(results: &[TrialResult], alternative: Alternative) -> Comparison {
    let mut kinds: Vec<StrategyKind> = results.iter().map(|r| r.strategy).collect();
    kinds.sort();
    kinds.dedup();
    let summaries = kinds.iter().map(|&k| summarize(k, results)).collect();
    let mut tests = Vec::new();
    for (i, &a) in kinds.iter().enumerate() {
        for &b in &kinds[i + 1..] {
            for metric in Metric::BOTH {
                tests.push(pairwise_test(results, a, b, metric, alternative));
            }
        }
    }
    Comparison { summaries, tests }
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        Some(p) if p < 1e-4 => format!("{p:.2e}"),
        Some(p) => format!("{p:.4}"),
        None => "-".to_string(),
    }
}

impl Comparison {
    pub fn summary(&self, k: StrategyKind) -> Option<&StrategySummary> {
        self.summaries.iter().find(|s| s.strategy == k)
    }

    pub fn test(&self, a: StrategyKind, b: StrategyKind, metric: Metric) -> Option<&PairwiseTest> {
        self.tests
            .iter()
            .find(|t| t.metric == metric && ((t.a == a && t.b == b) || (t.a == b && t.b == a)))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        s.push_str("## Strategies\n\n");
        s.push_str("| strategy | trials | faulted | success | mean dist | median dist | mean time | median time | excavates | pushed out |\n");
        s.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for m in &self.summaries {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.1}% | {:.3} | {:.3} | {:.3} | {:.3} | {} | {} |",
                m.strategy,
                m.trials,
                m.faulted,
                100.0 * m.success_rate,
                m.mean_norm_distance,
                m.median_norm_distance,
                m.mean_norm_time,
                m.median_norm_time,
                m.excavates,
                m.pushed_out
            );
        }
        s.push_str("\nDistance is d_goal / d_scene, time is t_comp / t_tot.\n\n## Paired signed-rank tests\n\n");
        s.push_str("| a | b | metric | pairs | p | |\n|---|---|---|---:|---:|---|\n");
        for t in &self.tests {
            let marker = match &t.note {
                Some(n) => format!("{} ({n})", t.marker),
                None => t.marker.clone(),
            };
            let _ = writeln!(s, "| {} | {} | {} | {} | {} | {} |", t.a, t.b, t.metric.name(), t.pairs, fmt_p(t.p_value), marker);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(seed: u64, k: StrategyKind, success: bool, d: f64, t: f64) -> TrialResult {
        TrialResult {
            scene_seed: seed,
            strategy: k,
            success,
            d_goal: d * 0.38,
            t_comp: t * 120.0,
            norm_distance: d,
            norm_time: t,
            excavates: 0,
            burrow_episodes: 0,
            pushed_out: 0,
            faulted: false,
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn pairing_skips_faulted_and_unmatched() {
        let mut rs = vec![
            r(1, StrategyKind::StraightLine, false, 0.5, 1.0),
            r(1, StrategyKind::Burrow, true, 0.01, 0.4),
            r(2, StrategyKind::StraightLine, false, 0.4, 1.0),
            r(2, StrategyKind::Burrow, true, 0.01, 0.5),
            r(3, StrategyKind::StraightLine, false, 0.4, 1.0),
        ];
        rs[3].faulted = true;
        let p = paired_samples(&rs, StrategyKind::StraightLine, StrategyKind::Burrow, Metric::Distance);
        assert_eq!(p, vec![(0.5, 0.01)]);
    }

    #[test]
    fn identical_strategy_reports_identical_samples() {
        let rs = vec![r(1, StrategyKind::Burrow, true, 0.01, 0.4), r(2, StrategyKind::Burrow, true, 0.02, 0.5)];
        let t = pairwise_test(&rs, StrategyKind::Burrow, StrategyKind::Burrow, Metric::Time, Alternative::TwoSided);
        assert_eq!(t.p_value, None);
        assert!(t.note.unwrap().contains("identical samples"));
    }

    #[test]
    fn comparison_report_lists_everything() {
        let mut rs = Vec::new();
        for seed in 0..6 {
            rs.push(r(seed, StrategyKind::StraightLine, false, 0.3 + seed as f64 * 0.01, 1.0));
            rs.push(r(seed, StrategyKind::Burrow, true, 0.01, 0.5 + seed as f64 * 0.01));
        }
        let c = compare(&rs, Alternative::TwoSided);
        assert_eq!(c.summaries.len(), 2);
        assert_eq!(c.tests.len(), 2);
        assert_eq!(c.summary(StrategyKind::Burrow).unwrap().success_rate, 1.0);
        let t = c.test(StrategyKind::Burrow, StrategyKind::StraightLine, Metric::Distance).unwrap();
        assert_eq!(t.p_value, Some(2.0 / 64.0));
        assert_eq!(t.marker, "*");
        let md = c.to_markdown();
        assert!(md.contains("| burrow | 6 | 0 | 100.0% |"));
    }
}
