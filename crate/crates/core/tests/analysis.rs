use clutter_core::analysis::{
    build_sweep_surface, compare, gaussian_smooth, significance_marker, wilcoxon_signed_rank, wilcoxon_signed_rank_with,
    Alternative, Metric, SweepCell, SweepSurface, TrialResult, EXACT_MAX_N,
};
use clutter_core::strategies::StrategyKind;
use proptest::prelude::*;

/// Two-sided and one-sided p-values by listing all 2^n sign assignments.
fn enumerate(diffs: &[f64]) -> (f64, f64, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    let rank = |k: usize| {
        let below = d.iter().filter(|v| v.abs() < d[k].abs()).count() as f64;
        let tied = d.iter().filter(|v| v.abs() == d[k].abs()).count() as f64;
        below + (tied + 1.0) / 2.0
    };
    let ranks: Vec<f64> = (0..n).map(rank).collect();
    let observed: f64 = (0..n).filter(|&k| d[k] > 0.0).map(|k| ranks[k]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        le += u64::from(w <= observed);
        ge += u64::from(w >= observed);
    }
    let total = (1u64 << n) as f64;
    ((2.0 * le.min(ge) as f64 / total).min(1.0), ge as f64 / total, le as f64 / total)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_path_matches_enumeration(steps in prop::collection::vec((-6i32..=6, -6i32..=6), 1..=14)) {
        let pairs: Vec<(f64, f64)> = steps.iter().map(|&(a, b)| (a as f64 * 0.1, b as f64 * 0.1)).collect();
        let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
        prop_assume!(diffs.iter().any(|d| *d != 0.0));
        let (two, greater, less) = enumerate(&diffs);
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        prop_assert!(r.exact);
        prop_assert_eq!(r.p_value, two);
        prop_assert_eq!(wilcoxon_signed_rank_with(&pairs, Alternative::Greater).unwrap().p_value, greater);
        prop_assert_eq!(wilcoxon_signed_rank_with(&pairs, Alternative::Less).unwrap().p_value, less);
    }

    #[test]
    fn swapping_members_mirrors_the_test(xs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..60)) {
        let swapped: Vec<(f64, f64)> = xs.iter().map(|&(a, b)| (b, a)).collect();
        let (Ok(a), Ok(b)) = (wilcoxon_signed_rank(&xs), wilcoxon_signed_rank(&swapped)) else {
            return Ok(());
        };
        prop_assert!((a.p_value - b.p_value).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        prop_assert_eq!(a.w_plus, b.w_minus);
        let g = wilcoxon_signed_rank_with(&xs, Alternative::Greater).unwrap().p_value;
        let l = wilcoxon_signed_rank_with(&swapped, Alternative::Less).unwrap().p_value;
        prop_assert!((g - l).abs() <= 1e-12);
    }
}

#[test]
fn normal_path_matches_reference_implementation() {
    // forty differences on a quarter grid, one zero and many ties; reference
    // p-values from scipy.stats.wilcoxon(method="approx", correction=True)
    let d: Vec<f64> = (0..40).map(|i| (((i * 37) % 23) as f64 - 9.0) * 0.25).collect();
    let pairs: Vec<(f64, f64)> = d.iter().map(|v| (5.0 + v, 5.0)).collect();
    let r = wilcoxon_signed_rank(&pairs).unwrap();
    assert!(!r.exact && r.n == 39 && r.n > EXACT_MAX_N);
    assert_eq!(r.w_minus, 277.0);
    assert!((r.p_value - 0.116_122_871_738_085).abs() < 1e-9, "{}", r.p_value);
    let g = wilcoxon_signed_rank_with(&pairs, Alternative::Greater).unwrap();
    assert!((g.p_value - 0.058_061_435_869_042_5).abs() < 1e-9, "{}", g.p_value);
}

#[test]
fn markers_never_get_weaker_as_p_falls() {
    let order = ["ns", "*", "**", "***", "****"];
    let mut last = 0;
    for i in (0..=1000).rev() {
        let p = i as f64 / 1000.0 * 0.1;
        let rank = order.iter().position(|m| *m == significance_marker(p)).unwrap();
        assert!(rank >= last);
        last = rank;
    }
}

fn surface(values: Vec<Vec<f64>>) -> SweepSurface {
    let (nx, ny) = (values.len(), values[0].len());
    SweepSurface {
        x_name: "a".into(),
        y_name: "b".into(),
        x_values: (0..nx).map(|i| i as f64).collect(),
        y_values: (0..ny).map(|j| j as f64).collect(),
        values,
        metric: Metric::Distance,
        orientation: String::new(),
        smoothing_sigma: None,
    }
}

/// Direct 2D convolution with mirrored borders.
fn smooth_direct(v: &[Vec<f64>], sigma: f64) -> Vec<Vec<f64>> {
    let r = (4.0 * sigma + 0.5) as i64;
    let w: Vec<f64> = (-r..=r).map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = w.iter().sum();
    let mirror = |i: i64, n: i64| {
        let mut i = i;
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - i - 1;
            } else {
                return i as usize;
            }
        }
    };
    let (nx, ny) = (v.len() as i64, v[0].len() as i64);
    let mut out = vec![vec![0.0; ny as usize]; nx as usize];
    for i in 0..nx {
        for j in 0..ny {
            let mut acc = 0.0;
            for a in -r..=r {
                for b in -r..=r {
                    acc += w[(a + r) as usize] * w[(b + r) as usize] * v[mirror(i + a, nx)][mirror(j + b, ny)];
                }
            }
            out[i as usize][j as usize] = acc / (norm * norm);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn separable_filter_equals_direct_convolution(
        nx in 1usize..12, ny in 1usize..12, sigma in 0.3f64..3.0,
        seed in prop::collection::vec(0.0f64..5.0, 144),
    ) {
        let values: Vec<Vec<f64>> = (0..nx).map(|i| (0..ny).map(|j| seed[i * 12 + j]).collect()).collect();
        let fast = gaussian_smooth(&surface(values.clone()), sigma);
        let slow = smooth_direct(&values, sigma);
        for (f, s) in fast.values.iter().flatten().zip(slow.iter().flatten()) {
            prop_assert!((f - s).abs() <= 1e-10);
        }
        prop_assert_eq!(fast.smoothing_sigma, Some(sigma));
    }
}

fn trial(seed: u64, strategy: StrategyKind, norm_distance: f64, norm_time: f64) -> TrialResult {
    TrialResult {
        scene_seed: seed,
        strategy,
        success: norm_time < 1.0,
        d_goal: norm_distance * 0.38,
        t_comp: norm_time * 120.0,
        norm_distance,
        norm_time,
        excavates: 0,
        burrow_episodes: 0,
        pushed_out: 0,
        faulted: false,
    }
}

#[test]
fn sweep_ratio_is_baseline_mean_over_cell_mean_and_skips_faults() {
    let baseline = vec![trial(1, StrategyKind::StraightLine, 0.1, 1.0), trial(2, StrategyKind::StraightLine, 0.2, 0.5)];
    let mut faulted = trial(3, StrategyKind::Burrow, 50.0, 1.0);
    faulted.faulted = true;
    let cells = vec![
        SweepCell { x: 1.0, y: 2.0, results: vec![trial(1, StrategyKind::Burrow, 0.05, 0.25), faulted] },
        SweepCell { x: 1.0, y: 3.0, results: vec![trial(1, StrategyKind::Burrow, 0.3, 1.0)] },
    ];
    let d = build_sweep_surface(&cells, &baseline, Metric::Distance, ("x", &[1.0]), ("y", &[2.0, 3.0])).unwrap();
    let t = build_sweep_surface(&cells, &baseline, Metric::Time, ("x", &[1.0]), ("y", &[2.0, 3.0])).unwrap();
    assert!((d.values[0][0] - 0.15 / 0.05).abs() < 1e-12);
    assert!((d.values[0][1] - 0.15 / 0.3).abs() < 1e-12);
    assert!((t.values[0][0] - 0.75 / 0.25).abs() < 1e-12);
    assert!((t.values[0][1] - 0.75).abs() < 1e-12);
}

#[test]
fn comparison_pairs_by_scene_and_reports_identical_strategies() {
    let mut results = Vec::new();
    for s in 0..12u64 {
        let x = 0.05 + 0.01 * s as f64;
        results.push(trial(s, StrategyKind::StraightLine, x, 1.0));
        results.push(trial(s, StrategyKind::Burrow, x / 2.0, 0.3));
        results.push(trial(s, StrategyKind::Excavate, x, 1.0));
    }
    let cmp = compare(&results, Alternative::TwoSided);
    let t = cmp.test(StrategyKind::StraightLine, StrategyKind::Burrow, Metric::Distance).unwrap();
    assert_eq!(t.pairs, 12);
    // all twelve differences favour burrow: p = 2 / 2^12
    assert_eq!(t.p_value, Some(2.0 / 4096.0));
    let same = cmp.test(StrategyKind::StraightLine, StrategyKind::Excavate, Metric::Time).unwrap();
    assert_eq!(same.p_value, None);
    assert!(same.note.as_deref().unwrap().contains("identical"));
    assert!(cmp.to_markdown().contains("n/a"));
}
