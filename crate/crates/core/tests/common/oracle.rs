//! Straightforward reference implementations, written from the definitions
//! and sharing no code with the library.

use std::collections::{BTreeMap, BTreeSet};

/// `M[i][j]` = share of partitions with `labels[i] == labels[j]`.
pub fn co_association(partitions: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = partitions[0].len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let same = partitions.iter().filter(|p| p[i] == p[j]).count();
            m[i][j] = same as f64 / partitions.len() as f64;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveMerge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// O(n³) average linkage on `1 - sim`. Ties go to the pair of clusters whose
/// smallest member ids are smallest, compared as an ordered pair. Node ids:
/// leaves `0..n`, merge `t` creates `n + t`; `a` is the cluster with the
/// smaller smallest id. Heights are made non-decreasing.
pub fn average_linkage(ids: &[String], sim: &[Vec<f64>]) -> Vec<NaiveMerge> {
    let n = ids.len();
    // (node id, members)
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let smallest = |c: &Vec<usize>| c.iter().map(|&i| ids[i].clone()).min().unwrap();
    let mut out = Vec::new();
    let mut prev = 0.0f64;
    for t in 0..n - 1 {
        let mut best: Option<(f64, (String, String), usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                let (cx, cy) = (&clusters[x].1, &clusters[y].1);
                let mut total = 0.0;
                for &i in cx {
                    for &j in cy {
                        total += 1.0 - sim[i][j];
                    }
                }
                let d = total / (cx.len() * cy.len()) as f64;
                let (sx, sy) = (smallest(cx), smallest(cy));
                let key = if sx < sy { (sx, sy) } else { (sy, sx) };
                let better = match &best {
                    None => true,
                    Some((bd, bk, _, _)) => d < *bd || (d == *bd && key < *bk),
                };
                if better {
                    best = Some((d, key, x, y));
                }
            }
        }
        let (d, _, x, y) = best.unwrap();
        let (mut x, mut y) = (x, y);
        if smallest(&clusters[y].1) < smallest(&clusters[x].1) {
            std::mem::swap(&mut x, &mut y);
        }
        prev = prev.max(d);
        out.push(NaiveMerge {
            a: clusters[x].0,
            b: clusters[y].0,
            height: prev,
        });
        let mut merged = clusters[x].1.clone();
        merged.extend(&clusters[y].1);
        let (hi, lo) = (x.max(y), x.min(y));
        clusters.remove(hi);
        clusters.remove(lo);
        clusters.push((n + t, merged));
    }
    out
}

/// Maximal nodes of size within `[lo, hi]`, as sorted member id sets, plus
/// the sorted ids covered by none of them. Exhaustive over every node.
pub fn select(
    leaves: &[String],
    merges: &[(usize, usize)],
    lo: usize,
    hi: usize,
) -> (BTreeSet<Vec<String>>, Vec<String>) {
    let n = leaves.len();
    let total = 2 * n - 1;
    let mut members: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    let mut parent = vec![usize::MAX; total];
    for (t, &(a, b)) in merges.iter().enumerate() {
        let mut m = members[a].clone();
        m.extend(&members[b]);
        members.push(m);
        parent[a] = n + t;
        parent[b] = n + t;
    }
    let in_range = |v: usize| (lo..=hi).contains(&members[v].len());
    let mut chosen = BTreeSet::new();
    let mut covered = BTreeSet::new();
    for v in 0..total {
        if !in_range(v) {
            continue;
        }
        let mut up = parent[v];
        let mut maximal = true;
        while up != usize::MAX {
            if in_range(up) {
                maximal = false;
            }
            up = parent[up];
        }
        if maximal {
            let mut ids: Vec<String> = members[v].iter().map(|&i| leaves[i].clone()).collect();
            ids.sort();
            covered.extend(members[v].iter().copied());
            chosen.insert(ids);
        }
    }
    let mut rest: Vec<String> = (0..n).filter(|i| !covered.contains(i)).map(|i| leaves[i].clone()).collect();
    rest.sort();
    (chosen, rest)
}

/// Binary cosine between user sets.
pub fn cosine(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let common = a.intersection(b).count();
    if common == 0 {
        return 0.0;
    }
    common as f64 / ((a.len() * b.len()) as f64).sqrt()
}

/// Top-N: candidates outside `observed`, scored by the share of their
/// k-neighbourhood similarity that falls in `observed`.
pub fn recommend(log: &[(String, String)], k: usize, observed: &[String], n: usize) -> Vec<(String, f64)> {
    let mut users_of: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (u, i) in log {
        users_of.entry(i.clone()).or_default().insert(u.clone());
    }
    let items: Vec<&String> = users_of.keys().collect();
    let obs: BTreeSet<&String> = observed.iter().collect();
    let mut scored = Vec::new();
    for r in &items {
        if obs.contains(r) {
            continue;
        }
        let mut nb: Vec<(&String, f64)> = items
            .iter()
            .filter(|j| *j != r)
            .map(|j| (*j, cosine(&users_of[*r], &users_of[*j])))
            .collect();
        nb.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(y.0)));
        nb.truncate(k);
        let den: f64 = nb.iter().map(|x| x.1).sum();
        let num: f64 = nb.iter().filter(|x| obs.contains(x.0)).map(|x| x.1).sum();
        let score = if den > 0.0 { num / den } else { 0.0 };
        if score > 0.0 {
            scored.push(((*r).clone(), score));
        }
    }
    scored.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    scored.truncate(n);
    scored
}

/// Mean over cases of `1/rank` of the hidden item within the top `n`.
pub fn map_at_n(cases: &[(Vec<String>, String)], n: usize) -> f64 {
    let mut total = 0.0;
    for (list, hidden) in cases {
        for (r, item) in list.iter().take(n).enumerate() {
            if item == hidden {
                total += 1.0 / (r + 1) as f64;
            }
        }
    }
    total / cases.len() as f64
}

/// `(count in c + λ) / (count + λ·|C|)`.
pub fn context_probability(counts: &BTreeMap<String, usize>, context: &str, n_contexts: usize, lambda: f64) -> f64 {
    let total: usize = counts.values().sum();
    (*counts.get(context).unwrap_or(&0) as f64 + lambda) / (total as f64 + lambda * n_contexts as f64)
}

/// Multiply-and-sort, stable on ties.
pub fn weight(list: &[(String, f64)], p: impl Fn(&str) -> f64) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = list.iter().map(|(i, s)| (i.clone(), s * p(i))).collect();
    // Insertion sort: stable by construction.
    for x in 1..out.len() {
        let mut y = x;
        while y > 0 && out[y - 1].1 < out[y].1 {
            out.swap(y - 1, y);
            y -= 1;
        }
    }
    out
}

pub fn filter(list: &[(String, f64)], p: impl Fn(&str) -> f64, tau: f64) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (i, s) in list {
        if p(i) >= tau {
            out.push((i.clone(), *s));
        }
    }
    out
}

/// Paired t statistic from the textbook formula.
pub fn paired_t(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    mean / (var / n).sqrt()
}
