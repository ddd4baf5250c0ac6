//! All-but-one evaluation with k-fold cross validation over users, MAP@N and
//! the two-sided paired t-test.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::recsys::{AccessLog, RecommendationList};

pub const DEFAULT_FOLDS: usize = 10;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// User → fold index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub seed: u64,
    pub n_folds: usize,
    assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, user: &str) -> Option<usize> {
        self.assignment.get(user).copied()
    }

    /// Users of fold `f`, sorted.
    pub fn fold_users(&self, f: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|&(_, &x)| x == f)
            .map(|(u, _)| u.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Seeded shuffle of the (sorted) users, then round-robin into folds.
pub fn make_folds(users: &[String], seed: u64, n_folds: usize) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::Config(format!("{n_folds} folds; at least 2 are needed")));
    }
    let mut sorted = users.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() < n_folds {
        return Err(Error::Insufficient(format!(
            "{} eligible users for {n_folds} folds",
            sorted.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let assignment = sorted.into_iter().enumerate().map(|(i, u)| (u, i % n_folds)).collect();
    Ok(FoldPlan {
        seed,
        n_folds,
        assignment,
    })
}

/// Users with at least two distinct accessed items.
pub fn eligible_users(log: &AccessLog) -> Vec<String> {
    log.histories()
        .into_iter()
        .filter(|(_, items)| items.len() >= 2)
        .map(|(u, _)| u.to_string())
        .collect()
}

/// How the active context of a test user is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveContextRule {
    /// Context of the most recent observed item.
    #[default]
    MostRecent,
    /// Context of the hidden item itself (an upper bound, not deployable).
    HiddenItem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalCase {
    pub user: String,
    /// Observed items, chronological.
    pub observed: Vec<String>,
    pub hidden: String,
    pub active_context: String,
}

/// One case per user: a uniformly chosen item is hidden, the rest observed.
///
/// Users are visited in sorted order with a single seeded RNG. Users with
/// fewer than two distinct items are skipped and returned separately.
pub fn make_cases(users: &[&str], log: &AccessLog, seed: u64, rule: ActiveContextRule) -> (Vec<EvalCase>, Vec<String>) {
    let histories = log.histories();
    let contexts = log.item_contexts();
    let mut sorted = users.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    for u in sorted {
        let Some(items) = histories.get(u).filter(|h| h.len() >= 2) else {
            log::debug!("user {u:?} has fewer than 2 accesses; no test case");
            skipped.push(u.to_string());
            continue;
        };
        let h = rng.random_range(0..items.len());
        let observed: Vec<String> = items
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != h)
            .map(|(_, i)| i.to_string())
            .collect();
        let anchor = match rule {
            ActiveContextRule::MostRecent => observed.last().expect("two or more items").as_str(),
            ActiveContextRule::HiddenItem => items[h],
        };
        cases.push(EvalCase {
            user: u.to_string(),
            active_context: contexts[anchor].to_string(),
            hidden: items[h].to_string(),
            observed,
        });
    }
    (cases, skipped)
}

/// Average precision with a single relevant item: `1/rank` within the top `n`.
pub fn average_precision(list: &RecommendationList, hidden: &str, n: usize) -> f64 {
    match list.rank_of(hidden) {
        Some(r) if r <= n => 1.0 / r as f64,
        _ => 0.0,
    }
}

/// F1 at `n` with a single relevant item: precision = hits/n, recall = hits.
pub fn f1_at_n(list: &RecommendationList, hidden: &str, n: usize) -> f64 {
    let hit = list.rank_of(hidden).is_some_and(|r| r <= n);
    if hit {
        let p = 1.0 / n as f64;
        2.0 * p / (p + 1.0)
    } else {
        0.0
    }
}

/// Mean of per-case average precision.
pub fn map_at_n(cases: &[(&RecommendationList, &str)], n: usize) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::Insufficient("no evaluation cases".into()));
    }
    Ok(cases.iter().map(|(l, h)| average_precision(l, h, n)).sum::<f64>() / cases.len() as f64)
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub significant: bool,
}

/// Two-sided paired t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Config(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Insufficient("paired t-test needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let df = d.len() - 1;
    if d.iter().all(|&x| x == 0.0) {
        return Ok(TTest {
            t: 0.0,
            p: 1.0,
            df,
            significant: false,
        });
    }
    let (mean, sd) = mean_sd(&d);
    let se = sd / (d.len() as f64).sqrt();
    let (t, p) = if se == 0.0 {
        (f64::INFINITY.copysign(mean), 0.0)
    } else {
        let t = mean / se;
        let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
        (t, (2.0 * dist.sf(t.abs())).min(1.0))
    };
    Ok(TTest {
        t,
        p,
        df,
        significant: p < SIGNIFICANCE_LEVEL,
    })
}

/// MAP of one (algorithm, configuration, N) cell on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub algorithm: String,
    pub weights: String,
    pub granularity: String,
    pub n: usize,
    pub fold: usize,
    pub map: f64,
}

pub const BASELINE_CONFIG: &str = "-";

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub algorithm: String,
    pub weights: String,
    pub granularity: String,
    pub n: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// Against the baseline with the same N; `None` for the baseline itself.
    pub vs_baseline: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<FoldRow>,
    pub summaries: Vec<CellSummary>,
    /// Cells that failed, with reasons.
    pub failures: Vec<(String, String)>,
}

impl EvalReport {
    /// Aggregates fold rows; `baseline` names the reference algorithm.
    pub fn from_rows(mut rows: Vec<FoldRow>, baseline: &str, failures: Vec<(String, String)>) -> Result<Self> {
        rows.sort_by(|a, b| {
            (a.n, &a.weights, &a.granularity, &a.algorithm, a.fold)
                .cmp(&(b.n, &b.weights, &b.granularity, &b.algorithm, b.fold))
        });
        let mut cells: BTreeMap<(usize, String, String, String), Vec<f64>> = BTreeMap::new();
        for r in &rows {
            if !(0.0..=1.0).contains(&r.map) {
                return Err(Error::Invariant(format!("MAP {} outside [0,1]", r.map)));
            }
            cells
                .entry((r.n, r.weights.clone(), r.granularity.clone(), r.algorithm.clone()))
                .or_default()
                .push(r.map);
        }
        let base: HashMap<usize, Vec<f64>> = cells
            .iter()
            .filter(|((_, _, _, a), _)| a == baseline)
            .map(|((n, _, _, _), v)| (*n, v.clone()))
            .collect();
        let mut summaries = Vec::new();
        for ((n, weights, granularity, algorithm), values) in cells {
            let (mean, sd) = mean_sd(&values);
            let vs_baseline = if algorithm == baseline {
                None
            } else {
                base.get(&n)
                    .filter(|b| b.len() == values.len())
                    .map(|b| paired_t_test(&values, b))
                    .transpose()?
            };
            summaries.push(CellSummary {
                algorithm,
                weights,
                granularity,
                n,
                values,
                mean,
                sd,
                vs_baseline,
            });
        }
        Ok(EvalReport {
            rows,
            summaries,
            failures,
        })
    }

    /// Machine-readable table, one row per algorithm × config × N × fold.
    pub fn table(&self) -> String {
        let mut out = String::from("algorithm\tweights\tgranularity\tN\tfold\tmap\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", r.algorithm, r.weights, r.granularity, r.n, r.fold, r.map);
        }
        out
    }

    /// Human-readable summary: mean ± sd per cell, with `▲`/`▼` marking a
    /// significant gain/loss against the baseline at the 95% level.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let mut ns: Vec<usize> = self.summaries.iter().map(|s| s.n).collect();
        ns.sort();
        ns.dedup();
        for n in ns {
            let _ = writeln!(out, "MAP@{n}");
            let _ = writeln!(
                out,
                "{:<18} {:<10} {:<12} {:>8} {:>8} {:>9} {:>10}",
                "weights", "topics", "algorithm", "mean", "sd", "t", "p"
            );
            for s in self.summaries.iter().filter(|s| s.n == n) {
                let (t, p, mark) = match s.vs_baseline {
                    Some(tt) => (
                        format!("{:.3}", tt.t),
                        format!("{:.4}", tt.p),
                        match (tt.significant, tt.t > 0.0) {
                            (true, true) => " ▲",
                            (true, false) => " ▼",
                            _ => "",
                        },
                    ),
                    None => ("-".into(), "-".into(), ""),
                };
                let _ = writeln!(
                    out,
                    "{:<18} {:<10} {:<12} {:>8.4} {:>8.4} {:>9} {:>10}{}",
                    s.weights, s.granularity, s.algorithm, s.mean, s.sd, t, p, mark
                );
            }
            out.push('\n');
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "failed cells");
            for (cell, reason) in &self.failures {
                let _ = writeln!(out, "  {cell}: {reason}");
            }
        }
        out
    }

    pub fn write(&self, table_path: &Path, summary_path: &Path) -> Result<()> {
        fs::write(table_path, self.table()).map_err(|e| Error::io(table_path, e))?;
        fs::write(summary_path, self.summary()).map_err(|e| Error::io(summary_path, e))
    }

    /// Parses a table written by [`EvalReport::table`].
    pub fn read_rows(path: &Path) -> Result<Vec<FoldRow>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let f: Vec<&str> = line.split('\t').collect();
            let parsed = (f.len() == 6)
                .then(|| {
                    Some(FoldRow {
                        algorithm: f[0].to_string(),
                        weights: f[1].to_string(),
                        granularity: f[2].to_string(),
                        n: f[3].parse().ok()?,
                        fold: f[4].parse().ok()?,
                        map: f[5].parse().ok()?,
                    })
                })
                .flatten();
            rows.push(parsed.ok_or_else(|| Error::parse(path, i + 1, "malformed report row"))?);
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::ContextAssignment;

    fn list(items: &[&str]) -> RecommendationList {
        RecommendationList {
            user: "u".into(),
            items: items.iter().map(|i| (i.to_string(), 0.5)).collect(),
        }
    }

    fn users(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i:03}")).collect()
    }

    #[test]
    fn folds_round_robin_sizes() {
        let p = make_folds(&users(20), 1, 10).unwrap();
        assert!(p.fold_sizes().iter().all(|&s| s == 2));
        let p = make_folds(&users(23), 1, 10).unwrap();
        let sizes = p.fold_sizes();
        assert_eq!(sizes.iter().filter(|&&s| s == 3).count(), 3);
        assert_eq!(sizes.iter().filter(|&&s| s == 2).count(), 7);
        assert_eq!(make_folds(&users(23), 1, 10).unwrap(), p);
        assert!(make_folds(&users(9), 1, 10).is_err());
    }

    #[test]
    fn ap_is_reciprocal_rank() {
        let a = list(&["x", "h", "y"]);
        let b = list(&["a", "b", "c", "d", "h"]);
        let m = map_at_n(&[(&a, "h"), (&b, "h")], 5).unwrap();
        assert!((m - 0.35).abs() < 1e-15);
        assert_eq!(map_at_n(&[(&b, "h")], 4).unwrap(), 0.0);
        assert_eq!(map_at_n(&[(&list(&["h"]), "h")], 5).unwrap(), 1.0);
        assert!(map_at_n(&[], 5).is_err());
    }

    #[test]
    fn f1_single_relevant() {
        let l = list(&["a", "h"]);
        assert!((f1_at_n(&l, "h", 10) - 2.0 / 11.0).abs() < 1e-15);
        assert_eq!(f1_at_n(&l, "zz", 10), 0.0);
    }

    #[test]
    fn t_test_edge_cases() {
        let a = [0.1, 0.2, 0.3];
        let t = paired_t_test(&a, &a).unwrap();
        assert_eq!((t.t, t.p, t.significant), (0.0, 1.0, false));
        let x = [0.3, 0.5, 0.2, 0.9];
        let y = [0.1, 0.4, 0.25, 0.6];
        let (l, r) = (paired_t_test(&x, &y).unwrap(), paired_t_test(&y, &x).unwrap());
        assert_eq!(l.t, -r.t);
        assert_eq!(l.p, r.p);
        assert!(paired_t_test(&x, &y[..3]).is_err());
        let c = paired_t_test(&[0.5, 0.6], &[0.4, 0.5]).unwrap();
        assert!(c.t.is_infinite() && c.significant);
    }

    #[test]
    fn cases_hide_one_item() {
        let ctx = ContextAssignment::from_pairs(["a", "b", "c"].map(|i| (i.to_string(), format!("t_{i}"))));
        let log = AccessLog::new(
            [("u", "a"), ("u", "b"), ("v", "c"), ("w", "a"), ("w", "c")].map(|(u, i)| (u.to_string(), i.to_string())),
            &ctx,
        )
        .unwrap();
        let (cases, skipped) = make_cases(&["u", "v", "w"], &log, 3, ActiveContextRule::MostRecent);
        assert_eq!(skipped, ["v"]);
        assert_eq!(cases.len(), 2);
        for c in &cases {
            assert_eq!(c.observed.len(), 1);
            assert!(!c.observed.contains(&c.hidden));
            assert_eq!(c.active_context, format!("t_{}", c.observed[0]));
        }
        let (again, _) = make_cases(&["u", "v", "w"], &log, 3, ActiveContextRule::MostRecent);
        assert_eq!(again, cases);
        let (oracle, _) = make_cases(&["u", "w"], &log, 3, ActiveContextRule::HiddenItem);
        assert!(oracle.iter().all(|c| c.active_context == format!("t_{}", c.hidden)));
    }

    #[test]
    fn report_table_roundtrip_and_summary() {
        let mut rows = Vec::new();
        for fold in 0..3 {
            for (alg, bump) in [("IBCF", 0.0), ("WeightPoF", 0.1)] {
                rows.push(FoldRow {
                    algorithm: alg.into(),
                    weights: "w".into(),
                    granularity: "g".into(),
                    n: 5,
                    fold,
                    map: 0.2 + bump + fold as f64 * 0.01 + if alg == "IBCF" { 0.0 } else { fold as f64 * 0.001 },
                });
            }
        }
        let report = EvalReport::from_rows(rows.clone(), "IBCF", vec![]).unwrap();
        assert_eq!(report.summaries.len(), 2);
        let w = report.summaries.iter().find(|s| s.algorithm == "WeightPoF").unwrap();
        assert!(w.vs_baseline.unwrap().significant);
        assert!(report.summary().contains('▲'));
        let dir = tempfile::tempdir().unwrap();
        let (t, s) = (dir.path().join("t.tsv"), dir.path().join("s.txt"));
        report.write(&t, &s).unwrap();
        let back = EvalReport::read_rows(&t).unwrap();
        assert_eq!(back, report.rows);
    }
}
