//! Item-based collaborative filtering over binary access vectors.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use super::{AccessLog, RecommendationList, Recommender, Request};
use crate::error::{Error, Result};
use crate::textfmt;

/// Item × item cosine similarities plus the cached top-k neighbourhoods.
#[derive(Debug, Clone)]
pub struct SimilarityModel {
    items: Vec<String>,
    index: HashMap<String, usize>,
    sims: Vec<f64>,
    /// Top-k neighbours of each item (itself excluded), by similarity
    /// descending then item id. Only positive similarities are kept; zero
    /// neighbours contribute nothing to a score.
    neighbors: Vec<Vec<(usize, f64)>>,
    recommendable: Vec<bool>,
    k: usize,
}

/// Cosine model over the items of `log`. Items are indexed in sorted id order.
pub fn build_ibcf(log: &AccessLog, k: usize) -> Result<SimilarityModel> {
    SimilarityModel::build(log, k, |_| true)
}

impl SimilarityModel {
    /// Builds the model; items failing `recommendable` take part in
    /// similarities but are never returned.
    pub fn build(log: &AccessLog, k: usize, recommendable: impl Fn(&str) -> bool) -> Result<Self> {
        if log.is_empty() {
            return Err(Error::Insufficient("empty access log".into()));
        }
        if k == 0 {
            return Err(Error::Config("neighbourhood size k must be positive".into()));
        }
        let items: Vec<String> = log
            .events()
            .iter()
            .map(|e| e.item.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if items.len() < 2 {
            return Err(Error::Insufficient(format!("{} distinct item(s)", items.len())));
        }
        let index: HashMap<String, usize> = items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let n = items.len();

        let mut baskets: HashMap<&str, BTreeSet<usize>> = HashMap::new();
        for e in log.events() {
            baskets.entry(&e.user).or_default().insert(index[&e.item]);
        }
        let mut co = vec![0u32; n * n];
        for basket in baskets.values() {
            let b: Vec<usize> = basket.iter().copied().collect();
            for (x, &i) in b.iter().enumerate() {
                co[i * n + i] += 1;
                for &j in &b[x + 1..] {
                    co[i * n + j] += 1;
                    co[j * n + i] += 1;
                }
            }
        }
        let mut sims = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let c = co[i * n + j];
                if c > 0 {
                    sims[i * n + j] = if i == j {
                        1.0
                    } else {
                        let denom = co[i * n + i] as u64 * co[j * n + j] as u64;
                        (c as f64 / (denom as f64).sqrt()).min(1.0)
                    };
                }
            }
        }
        let recommendable = items.iter().map(|i| recommendable(i)).collect();
        Ok(SimilarityModel::from_parts(items, sims, recommendable, k))
    }

    fn from_parts(items: Vec<String>, sims: Vec<f64>, recommendable: Vec<bool>, k: usize) -> Self {
        let n = items.len();
        let neighbors = (0..n)
            .map(|r| {
                let mut cand: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| j != r && sims[r * n + j] > 0.0)
                    .map(|j| (j, sims[r * n + j]))
                    .collect();
                cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                cand.truncate(k);
                cand
            })
            .collect();
        let index = items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        SimilarityModel {
            items,
            index,
            sims,
            neighbors,
            recommendable,
            k,
        }
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn contains(&self, item: &str) -> bool {
        self.index.contains_key(item)
    }

    /// Cosine similarity; 0 for unknown items.
    pub fn sim(&self, a: &str, b: &str) -> f64 {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.sims[i * self.items.len() + j],
            _ => 0.0,
        }
    }

    /// Ids of the neighbourhood `K_r` of `item`.
    pub fn neighbors(&self, item: &str) -> Vec<(&str, f64)> {
        self.index
            .get(item)
            .map(|&r| {
                self.neighbors[r]
                    .iter()
                    .map(|&(j, s)| (self.items[j].as_str(), s))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Ranks every recommendable candidate outside `observed` with a positive
    /// score; at most `n` entries.
    pub fn recommend_for(&self, user: &str, observed: &[String], n: usize) -> RecommendationList {
        let obs: HashSet<usize> = observed.iter().filter_map(|o| self.index.get(o).copied()).collect();
        let mut scored: Vec<(usize, f64)> = Vec::new();
        for r in 0..self.items.len() {
            if !self.recommendable[r] || obs.contains(&r) {
                continue;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for &(j, s) in &self.neighbors[r] {
                den += s;
                if obs.contains(&j) {
                    num += s;
                }
            }
            if num > 0.0 && den > 0.0 {
                scored.push((r, (num / den).min(1.0)));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(n);
        RecommendationList {
            user: user.to_string(),
            items: scored.into_iter().map(|(r, s)| (self.items[r].clone(), s)).collect(),
        }
    }

    /// Similarity matrix in the triangular text layout.
    pub fn write(&self, path: &Path) -> Result<()> {
        textfmt::write_triangular(path, &self.items, &self.sims)
    }

    /// Reloads a dumped matrix; neighbourhoods are rebuilt with `k`.
    pub fn read(path: &Path, k: usize) -> Result<Self> {
        let t = textfmt::read_triangular(path)?;
        if t.ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("similarity ids are not strictly sorted".into()));
        }
        if let Some(v) = t.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invariant(format!("similarity {v} outside [0,1]")));
        }
        let rec = vec![true; t.ids.len()];
        Ok(SimilarityModel::from_parts(t.ids, t.values, rec, k))
    }
}

/// Top-`n` list for a user who accessed `observed`.
pub fn recommend(model: &SimilarityModel, observed: &[String], n: usize) -> RecommendationList {
    model.recommend_for("", observed, n)
}

impl Recommender for SimilarityModel {
    fn recommend(&self, req: &Request<'_>) -> RecommendationList {
        self.recommend_for(req.user, req.observed, req.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(pairs: &[(&str, &str)]) -> AccessLog {
        AccessLog::uniform_context(pairs.iter().map(|(u, i)| (u.to_string(), i.to_string())), "c")
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn cosine_on_small_fixtures() {
        let m = build_ibcf(
            &log(&[("u1", "i1"), ("u2", "i1"), ("u2", "i2"), ("u3", "i2"), ("u4", "i3"), ("u4", "i4"), ("u5", "i3"), ("u5", "i4")]),
            4,
        )
        .unwrap();
        // i1 = {u1,u2}, i2 = {u2,u3}: 1 / (√2·√2).
        assert!((m.sim("i1", "i2") - 0.5).abs() < 1e-15);
        assert_eq!(m.sim("i3", "i4"), 1.0);
        assert_eq!(m.sim("i1", "i3"), 0.0);
        assert_eq!(m.sim("i1", "i1"), 1.0);
    }

    #[test]
    fn build_errors() {
        assert!(build_ibcf(&AccessLog::default(), 4).is_err());
        assert!(build_ibcf(&log(&[("u", "a")]), 4).is_err());
    }

    #[test]
    fn scores_zero_and_one_cases() {
        // a–b co-accessed; c–d co-accessed; no link between the pairs.
        let m = build_ibcf(&log(&[("u1", "a"), ("u1", "b"), ("u2", "c"), ("u2", "d")]), 4).unwrap();
        let list = recommend(&m, &s(&["a"]), 10);
        // K_b = {a} ⊆ O → score 1; K_c ∩ O = ∅ → 0, excluded.
        assert_eq!(list.items, vec![("b".to_string(), 1.0)]);
    }

    #[test]
    fn observed_items_never_returned() {
        let m = build_ibcf(&log(&[("u1", "a"), ("u1", "b"), ("u1", "c"), ("u2", "a"), ("u2", "c")]), 4).unwrap();
        let list = recommend(&m, &s(&["a", "c"]), 10);
        assert!(list.item_ids().all(|i| i != "a" && i != "c"));
        assert_eq!(list.item_ids().collect::<Vec<_>>(), ["b"]);
    }

    #[test]
    fn neighbourhood_ties_by_item_id() {
        let m = build_ibcf(
            &log(&[("u1", "x"), ("u1", "a"), ("u2", "x"), ("u2", "b"), ("u3", "x"), ("u3", "c")]),
            2,
        )
        .unwrap();
        let ids: Vec<&str> = m.neighbors("x").into_iter().map(|(i, _)| i).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn dump_roundtrip_keeps_neighbourhoods() {
        let m = build_ibcf(&log(&[("u1", "a"), ("u1", "b"), ("u2", "b"), ("u2", "c"), ("u3", "a")]), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sim.txt");
        m.write(&p).unwrap();
        let back = SimilarityModel::read(&p, 4).unwrap();
        assert_eq!(back.items(), m.items());
        assert_eq!(recommend(&back, &s(&["a"]), 5).item_ids().collect::<Vec<_>>(), recommend(&m, &s(&["a"]), 5).item_ids().collect::<Vec<_>>());
    }
}
