//! Contextual post-filtering: reweight (Weight PoF) or threshold (Filter PoF)
//! an un-contextual ranking by the probability of an item given the context.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::{AccessLog, RecommendationList, Recommender, Request, SimilarityModel};
use crate::error::{Error, Result};

/// `P(c | i)` with Laplace smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextProbabilities {
    contexts: Vec<String>,
    position: HashMap<String, usize>,
    counts: BTreeMap<String, Vec<u32>>,
    lambda: f64,
}

/// `P(c|i) = (accesses to i in c + λ) / (accesses to i + λ·|contexts|)`.
/// Items never accessed get the uniform distribution.
pub fn estimate_context_probability(log: &AccessLog, contexts: &[String], lambda: f64) -> Result<ContextProbabilities> {
    if log.is_empty() {
        return Err(Error::Insufficient("empty access log".into()));
    }
    if contexts.is_empty() {
        return Err(Error::Config("no contexts".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("smoothing λ = {lambda} must be positive")));
    }
    let mut contexts = contexts.to_vec();
    contexts.sort();
    contexts.dedup();
    let position: HashMap<String, usize> = contexts.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let mut counts: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for e in log.events() {
        let &c = position
            .get(&e.context)
            .ok_or_else(|| Error::IdMismatch(format!("event context {:?} not among the contexts", e.context)))?;
        counts.entry(e.item.clone()).or_insert_with(|| vec![0; contexts.len()])[c] += 1;
    }
    Ok(ContextProbabilities {
        contexts,
        position,
        counts,
        lambda,
    })
}

impl ContextProbabilities {
    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    pub fn get(&self, item: &str, context: &str) -> f64 {
        let n_ctx = self.contexts.len() as f64;
        let Some(row) = self.counts.get(item) else {
            return 1.0 / n_ctx;
        };
        let total: u32 = row.iter().sum();
        let in_ctx = self.position.get(context).map_or(0, |&c| row[c]);
        (in_ctx as f64 + self.lambda) / (total as f64 + self.lambda * n_ctx)
    }

    /// `(item_id, topic_id, probability)` lines for every accessed item.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        for item in self.counts.keys() {
            for c in &self.contexts {
                out.push_str(&format!("{item}\t{c}\t{}\n", self.get(item, c)));
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    /// Reads a probability dump and checks each item's row sums to 1.
    pub fn read_table(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            let p = (f.len() == 3).then(|| f[2].parse::<f64>().ok()).flatten();
            let p = p.ok_or_else(|| Error::parse(path, i + 1, "expected item<TAB>topic<TAB>probability"))?;
            table.entry(f[0].to_string()).or_default().insert(f[1].to_string(), p);
        }
        for (item, row) in &table {
            let s: f64 = row.values().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Invariant(format!("probabilities of {item:?} sum to {s}")));
            }
        }
        Ok(table)
    }
}

/// Multiplies each score by `P(c|item)` and re-sorts, stable on ties.
pub fn weight_pof(baseline: &RecommendationList, probs: &ContextProbabilities, context: &str) -> RecommendationList {
    let mut items: Vec<(String, f64)> = baseline
        .items
        .iter()
        .map(|(i, s)| (i.clone(), s * probs.get(i, context)))
        .collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1));
    RecommendationList {
        user: baseline.user.clone(),
        items,
    }
}

/// Keeps items with `P(c|item) >= tau`, preserving order.
pub fn filter_pof(
    baseline: &RecommendationList,
    probs: &ContextProbabilities,
    context: &str,
    tau: f64,
) -> Result<RecommendationList> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("threshold τ = {tau} outside [0,1]")));
    }
    Ok(RecommendationList {
        user: baseline.user.clone(),
        items: baseline
            .items
            .iter()
            .filter(|(i, _)| probs.get(i, context) >= tau)
            .cloned()
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostFilterMode {
    Weight,
    Filter { tau: f64 },
}

/// Baseline IBCF followed by a post-filter. The baseline list is taken at
/// `pool` entries (all positive-score candidates when `None`) before the
/// filter, then cut to the requested length.
#[derive(Debug, Clone)]
pub struct PostFilter {
    pub baseline: SimilarityModel,
    pub probs: ContextProbabilities,
    pub mode: PostFilterMode,
    pub pool: Option<usize>,
}

impl Recommender for PostFilter {
    fn recommend(&self, req: &Request<'_>) -> RecommendationList {
        let pool = self.pool.unwrap_or(usize::MAX).max(req.n);
        let base = self.baseline.recommend_for(req.user, req.observed, pool);
        let out = match self.mode {
            PostFilterMode::Weight => weight_pof(&base, &self.probs, req.context),
            PostFilterMode::Filter { tau } => {
                filter_pof(&base, &self.probs, req.context, tau).expect("tau validated at construction")
            }
        };
        out.truncate(req.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recsys::Access;

    fn ev(user: &str, item: &str, ctx: &str) -> Access {
        Access {
            user: user.into(),
            item: item.into(),
            context: ctx.into(),
        }
    }

    fn ctxs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn list(items: &[(&str, f64)]) -> RecommendationList {
        RecommendationList {
            user: "u".into(),
            items: items.iter().map(|(i, s)| (i.to_string(), *s)).collect(),
        }
    }

    #[test]
    fn laplace_estimate_by_formula() {
        let log = AccessLog::from_events(vec![
            ev("a", "i", "c1"),
            ev("b", "i", "c1"),
            ev("c", "i", "c1"),
            ev("d", "i", "c2"),
        ]);
        let p = estimate_context_probability(&log, &ctxs(&["c1", "c2"]), 1.0).unwrap();
        assert!((p.get("i", "c1") - 4.0 / 6.0).abs() < 1e-15);
        assert!((p.get("i", "c2") - 2.0 / 6.0).abs() < 1e-15);
        let p4 = estimate_context_probability(&log, &ctxs(&["c1", "c2", "c3", "c4"]), 1.0).unwrap();
        assert_eq!(p4.get("never", "c3"), 0.25);
    }

    #[test]
    fn small_lambda_concentrates_mass() {
        let log = AccessLog::from_events(vec![ev("a", "i", "c1"), ev("b", "i", "c1")]);
        let p = estimate_context_probability(&log, &ctxs(&["c1", "c2"]), 1e-9).unwrap();
        assert!(p.get("i", "c1") > 1.0 - 1e-8);
    }

    #[test]
    fn weight_reorders_by_context_probability() {
        let log = AccessLog::from_events(vec![ev("a", "r1", "c"), ev("a", "r2", "d")]);
        let p = estimate_context_probability(&log, &ctxs(&["c", "d"]), 1.0).unwrap();
        let out = weight_pof(&list(&[("r2", 0.5), ("r1", 0.5)]), &p, "c");
        assert_eq!(out.item_ids().collect::<Vec<_>>(), ["r1", "r2"]);
    }

    #[test]
    fn uniform_probabilities_keep_order() {
        let log = AccessLog::from_events(vec![ev("a", "zz", "c")]);
        let p = estimate_context_probability(&log, &ctxs(&["c", "d", "e", "f"]), 1.0).unwrap();
        let input = list(&[("x", 0.9), ("y", 0.9), ("w", 0.3), ("v", 0.1)]);
        let out = weight_pof(&input, &p, "d");
        assert_eq!(out.item_ids().collect::<Vec<_>>(), input.item_ids().collect::<Vec<_>>());
    }

    #[test]
    fn filter_threshold_edges() {
        let log = AccessLog::from_events(vec![ev("a", "x", "c"), ev("a", "y", "d")]);
        let p = estimate_context_probability(&log, &ctxs(&["c", "d"]), 1.0).unwrap();
        let input = list(&[("x", 0.9), ("y", 0.5)]);
        assert_eq!(filter_pof(&input, &p, "c", 0.0).unwrap(), input);
        assert!(filter_pof(&input, &p, "c", 1.0).unwrap().is_empty());
        // P(c|x) = 2/3, P(c|y) = 1/3.
        let half = filter_pof(&input, &p, "c", 0.5).unwrap();
        assert_eq!(half.item_ids().collect::<Vec<_>>(), ["x"]);
        assert!(filter_pof(&input, &p, "c", 1.5).is_err());
    }

    #[test]
    fn dump_rows_sum_to_one() {
        let log = AccessLog::from_events(vec![ev("a", "x", "c"), ev("b", "x", "d"), ev("a", "y", "d")]);
        let p = estimate_context_probability(&log, &ctxs(&["c", "d", "e"]), 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        p.write(&path).unwrap();
        let t = ContextProbabilities::read_table(&path).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t["x"].len(), 3);
    }
}
