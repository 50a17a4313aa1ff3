//! Cross-seed means with normal-approximation 95% intervals.

use std::collections::BTreeMap;

use crate::runner::RunRecord;

pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub env: String,
    pub algo: String,
    pub episode: usize,
    pub mean_eval: f64,
    /// Absent with fewer than two seeds.
    pub ci: Option<(f64, f64)>,
    pub seeds: usize,
}

/// Mean and `1.96 · stderr` half-width; the half-width is `None` for one value.
pub fn mean_ci(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(Z95 * (var / n).sqrt()))
}

/// Groups records by `(env, algo, episode)` and averages `eval_return`.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.env.clone(), r.algo.clone(), r.episode))
            .or_default()
            .push(r.eval_return);
    }
    groups
        .into_iter()
        .map(|((env, algo, episode), vals)| {
            let (mean, half) = mean_ci(&vals);
            AggregateRow {
                env,
                algo,
                episode,
                mean_eval: mean,
                ci: half.map(|h| (mean - h, mean + h)),
                seeds: vals.len(),
            }
        })
        .collect()
}

/// First recorded episode whose mean return is within `tolerance · |target|`
/// of `target` or above it. Rows must belong to one (env, algo) pair.
pub fn reach_episode(rows: &[AggregateRow], target: f64, tolerance: f64) -> Option<usize> {
    let threshold = target - tolerance * target.abs();
    rows.iter()
        .filter(|r| r.mean_eval >= threshold)
        .map(|r| r.episode)
        .min()
}

/// Mean of the per-row means over the final `window` episodes of the run.
pub fn tail_mean(rows: &[AggregateRow], window: usize) -> Option<f64> {
    let last = rows.iter().map(|r| r.episode).max()?;
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.episode + window > last)
        .map(|r| r.mean_eval)
        .collect();
    Some(tail.iter().sum::<f64>() / tail.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, episode: usize, eval: f64) -> RunRecord {
        RunRecord {
            env: "taxi".into(),
            algo: "exavi".into(),
            seed,
            episode,
            train_return: 0.0,
            eval_return: eval,
            cum_regret: None,
            wall_ms: 0,
        }
    }

    #[test]
    fn two_seed_formula() {
        let rows = aggregate(&[rec(1, 50, 0.0), rec(2, 50, 2.0)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_eval, 1.0);
        let (lo, hi) = rows[0].ci.unwrap();
        assert!((hi - 1.0 - 1.96).abs() < 1e-12);
        assert!((1.0 - lo - 1.96).abs() < 1e-12);
    }

    #[test]
    fn duplicates_have_zero_width() {
        let rows = aggregate(&[rec(1, 50, 3.0), rec(2, 50, 3.0), rec(3, 50, 3.0)]);
        assert_eq!(rows[0].ci, Some((3.0, 3.0)));
    }

    #[test]
    fn single_seed_has_no_interval() {
        let rows = aggregate(&[rec(1, 50, 3.0), rec(1, 100, 4.0)]);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.ci.is_none()));
    }

    #[test]
    fn reach_and_tail() {
        let rows = aggregate(&[rec(1, 50, -10.0), rec(1, 100, 96.0), rec(1, 150, 99.0), rec(1, 200, 101.0)]);
        assert_eq!(reach_episode(&rows, 100.0, 0.05), Some(100));
        assert_eq!(reach_episode(&rows, 200.0, 0.05), None);
        assert_eq!(reach_episode(&rows, -20.0, 0.05), Some(50));
        assert_eq!(tail_mean(&rows, 100), Some(100.0));
        assert_eq!(tail_mean(&[], 100), None);
    }
}
