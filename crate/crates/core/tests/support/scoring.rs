//! Scoring properties, runnable at any case count.

#![allow(dead_code)]

use assetopt::evaluation::{aggregate_scores, composite_score, normalize_score};
use assetopt::model::{ScoreVector, UsageStats};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

fn raw() -> impl Strategy<Value = f64> {
    prop_oneof![(0u8..=4).prop_map(f64::from), 0.0f64..=4.0]
}

fn vector() -> impl Strategy<Value = ScoreVector> {
    [raw(), raw(), raw(), raw(), raw()].prop_map(|v| ScoreVector::new(v).unwrap())
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// Range and linearity of the 0–4 to unit mapping.
pub fn normalize_range_and_linearity(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(raw(), raw(), 0.0f64..=1.0, 4.0001f64..1e6), |(a, b, t, out)| {
            let na = normalize_score(a).unwrap();
            let nb = normalize_score(b).unwrap();
            if !(0.0..=1.0).contains(&na) {
                return Err(fail(format!("normalize({a}) = {na}")));
            }
            if (na - a / 4.0).abs() > 1e-15 {
                return Err(fail(format!("normalize({a}) = {na}, not a/4")));
            }
            let mix = t * a + (1.0 - t) * b;
            let nm = normalize_score(mix.min(4.0)).unwrap();
            if (nm - (t * na + (1.0 - t) * nb)).abs() > 1e-12 {
                return Err(fail(format!("not affine at {a}, {b}, {t}")));
            }
            if normalize_score(out).is_ok() || normalize_score(-out).is_ok() {
                return Err(fail(format!("{out} accepted")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Raising any one metric never lowers the composite.
pub fn composite_monotone(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(vector(), 0usize..5, 0.0f64..=4.0), |(s, slot, bump)| {
            let mut v = s.to_array();
            v[slot] = (v[slot] + bump).min(4.0);
            let up = ScoreVector::new(v).unwrap();
            let (c0, c1) = (composite_score(&s), composite_score(&up));
            if c1 < c0 {
                return Err(fail(format!("{c0} -> {c1}")));
            }
            if !(0.0..=1.0).contains(&c0) {
                return Err(fail(format!("composite {c0} outside [0, 1]")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Mean of per-item composites equals the composite of per-metric means.
pub fn composite_of_means(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&prop::collection::vec(vector(), 1..120), |scores| {
            let report = aggregate_scores(&scores, UsageStats::default()).map_err(|e| fail(e.to_string()))?;
            let n = scores.len() as f64;
            let mean_of_comp: f64 = scores.iter().map(composite_score).sum::<f64>() / n;
            let means = report.per_metric.to_array();
            let comp_of_means = means.iter().sum::<f64>() / 5.0;
            if (mean_of_comp - comp_of_means).abs() > 1e-12 || (report.composite - comp_of_means).abs() > 1e-12 {
                return Err(fail(format!("{mean_of_comp} vs {comp_of_means} vs {}", report.composite)));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Reordering the items leaves the report unchanged.
pub fn permutation_invariant(cases: u32) -> Result<(), String> {
    let strat = prop::collection::vec(vector(), 1..60).prop_flat_map(|v| {
        let shuffled = Just(v.clone()).prop_shuffle();
        (Just(v), shuffled)
    });
    runner(cases)
        .run(&strat, |(a, b)| {
            let ra = aggregate_scores(&a, UsageStats::default()).unwrap();
            let rb = aggregate_scores(&b, UsageStats::default()).unwrap();
            if ra != rb {
                return Err(fail(format!("{ra:?} vs {rb:?}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub type Property = fn(u32) -> Result<(), String>;

pub const ALL: [(&str, Property); 4] = [
    ("normalize range and linearity", normalize_range_and_linearity),
    ("composite monotone", composite_monotone),
    ("mean of composites equals composite of means", composite_of_means),
    ("permutation invariance", permutation_invariant),
];
