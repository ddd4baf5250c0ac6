//! Clustering ensembles, co-association matrices and their consensus.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{SparseRow, View, ViewMatrix};
use crate::error::{Error, Result};
use crate::textfmt;

const KMEANS_MAX_ITER: usize = 100;

/// One ensemble member: number of clusters and RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub k: usize,
    pub seed: u64,
}

/// `k = 2..=⌈√n⌉` with `seeds_per_k` seeds each (capped at `n`).
pub fn default_ensemble_spec(n: usize, seeds_per_k: usize, base_seed: u64) -> Vec<EnsembleMember> {
    let k_max = ((n as f64).sqrt().ceil() as usize).clamp(2, n.max(2));
    let mut spec = Vec::new();
    for k in 2..=k_max {
        for s in 0..seeds_per_k {
            spec.push(EnsembleMember {
                k,
                seed: base_seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((k * 1_000 + s) as u64),
            });
        }
    }
    spec
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSource {
    pub algorithm: &'static str,
    pub k: usize,
    pub seed: u64,
}

/// Hard partition of a set of documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub ids: Vec<String>,
    /// `labels[i]` is the cluster of `ids[i]`; labels are `0..k`.
    pub labels: Vec<usize>,
    pub k: usize,
    pub source: PartitionSource,
}

impl Partition {
    /// Relabels clusters in order of first appearance.
    pub fn new(ids: Vec<String>, labels: Vec<usize>, source: PartitionSource) -> Self {
        let mut remap = HashMap::new();
        let labels: Vec<usize> = labels
            .into_iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            ids,
            k: remap.len(),
            labels,
            source,
        }
    }

    pub fn label_of(&self, doc_id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == doc_id).map(|p| self.labels[p])
    }
}

fn sparse_dot(row: &SparseRow, dense: &[f64]) -> f64 {
    row.iter().map(|&(j, v)| v * dense[j]).sum()
}

/// Spherical k-means on unit-norm sparse rows (cosine similarity), seeded
/// k-means++ initialisation. Returns one label per row.
pub fn spherical_kmeans(rows: &[&SparseRow], dim: usize, k: usize, seed: u64) -> Vec<usize> {
    let n = rows.len();
    assert!(k >= 1 && k <= n, "k = {k} outside 1..={n}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let densify = |r: &SparseRow| {
        let mut c = vec![0.0; dim];
        for &(j, v) in r {
            c[j] = v;
        }
        c
    };

    // k-means++ with distance 1 - cos.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.push(densify(rows[first]));
    let mut best_sim: Vec<f64> = rows.iter().map(|r| sparse_dot(r, &centroids[0])).collect();
    while centroids.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|i| if chosen[i] { 0.0 } else { (1.0 - best_sim[i]).max(0.0).powi(2) })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    pick = Some(i);
                    if target < *w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        let c = densify(rows[pick]);
        for (i, r) in rows.iter().enumerate() {
            best_sim[i] = best_sim[i].max(sparse_dot(r, &c));
        }
        centroids.push(c);
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        let mut sims = vec![0.0; n];
        for (i, r) in rows.iter().enumerate() {
            let (mut best, mut best_s) = (0, f64::NEG_INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let s = sparse_dot(r, centroid);
                if s > best_s {
                    best = c;
                    best_s = s;
                }
            }
            sims[i] = best_s;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (i, r) in rows.iter().enumerate() {
            sizes[labels[i]] += 1;
            for &(j, v) in r.iter() {
                sums[labels[i]][j] += v;
            }
        }
        // Empty cluster: steal the worst-fitting point of a cluster with more than one member.
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let worst = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .min_by(|&a, &b| sims[a].total_cmp(&sims[b]).then(a.cmp(&b)));
            if let Some(i) = worst {
                let old = labels[i];
                sizes[old] -= 1;
                for &(j, v) in rows[i].iter() {
                    sums[old][j] -= v;
                    sums[c][j] += v;
                }
                sizes[c] = 1;
                labels[i] = c;
                sims[i] = 1.0;
                changed = true;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                centroids[c] = sum.into_iter().map(|v| v / norm).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Runs one spherical k-means per ensemble member over the rows of `ids`.
pub fn run_base_clusterings(matrix: &ViewMatrix, ids: &[String], spec: &[EnsembleMember]) -> Result<Vec<Partition>> {
    if spec.is_empty() {
        return Err(Error::Config("empty ensemble spec".into()));
    }
    if ids.len() < 2 {
        return Err(Error::Insufficient(format!("{} documents to cluster", ids.len())));
    }
    if let Some(m) = spec.iter().find(|m| m.k < 2 || m.k > ids.len()) {
        return Err(Error::Config(format!("ensemble k = {} outside 2..={}", m.k, ids.len())));
    }
    let rows: Vec<&SparseRow> = ids
        .iter()
        .map(|id| {
            matrix
                .row(id)
                .ok_or_else(|| Error::IdMismatch(format!("doc {id:?} has no row in the {} view", matrix.view)))
        })
        .collect::<Result<_>>()?;
    let dim = matrix.vocabulary.len();
    Ok(spec
        .par_iter()
        .map(|m| {
            let labels = spherical_kmeans(&rows, dim, m.k, m.seed);
            Partition::new(
                ids.to_vec(),
                labels,
                PartitionSource {
                    algorithm: "spherical-kmeans",
                    k: m.k,
                    seed: m.seed,
                },
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixTag {
    Technical,
    NamedEntity,
    DomainTerm,
    Consensus,
}

impl From<View> for MatrixTag {
    fn from(v: View) -> Self {
        match v {
            View::Technical => MatrixTag::Technical,
            View::NamedEntity => MatrixTag::NamedEntity,
            View::DomainTerm => MatrixTag::DomainTerm,
        }
    }
}

/// Symmetric pairwise co-clustering frequencies, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoAssocMatrix {
    pub ids: Vec<String>,
    values: Vec<f64>,
    pub tag: MatrixTag,
}

impl CoAssocMatrix {
    pub fn from_dense(ids: Vec<String>, values: Vec<f64>, tag: MatrixTag) -> Result<Self> {
        if values.len() != ids.len() * ids.len() {
            return Err(Error::Invariant(format!(
                "{} values for {} ids",
                values.len(),
                ids.len()
            )));
        }
        let m = CoAssocMatrix { ids, values, tag };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.get(i, i) != 1.0 {
                return Err(Error::Invariant(format!("diagonal ({i},{i}) is {}", self.get(i, i))));
            }
            for j in 0..i {
                let v = self.get(i, j);
                if v != self.get(j, i) {
                    return Err(Error::Invariant(format!("asymmetric at ({i},{j})")));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Invariant(format!("entry ({i},{j}) = {v} outside [0,1]")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Header of ordered ids, then the lower triangle with 9 significant digits.
    pub fn write(&self, path: &Path) -> Result<()> {
        textfmt::write_triangular(path, &self.ids, &self.values)
    }

    pub fn read(path: &Path, tag: MatrixTag) -> Result<Self> {
        let t = textfmt::read_triangular(path)?;
        CoAssocMatrix::from_dense(t.ids, t.values, tag)
    }
}

/// Fraction of partitions that put each pair in the same cluster.
pub fn co_association(partitions: &[Partition], tag: MatrixTag) -> Result<CoAssocMatrix> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::Config("co-association needs at least one partition".into()))?;
    let ids = first.ids.clone();
    let n = ids.len();
    let position: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let mut counts = vec![0u32; n * n];
    for (p_idx, p) in partitions.iter().enumerate() {
        let mismatch = || {
            Error::IdMismatch(format!(
                "partition {p_idx} ({} k={} seed={}) does not cover the same ids as partition 0",
                p.source.algorithm, p.source.k, p.source.seed
            ))
        };
        if p.ids.len() != n || p.labels.len() != n {
            return Err(mismatch());
        }
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); p.k];
        let mut seen = vec![false; n];
        for (id, &label) in p.ids.iter().zip(&p.labels) {
            let &i = position.get(id.as_str()).ok_or_else(mismatch)?;
            if seen[i] || label >= p.k {
                return Err(mismatch());
            }
            seen[i] = true;
            clusters[label].push(i);
        }
        for members in &clusters {
            for &a in members {
                for &b in members {
                    counts[a * n + b] += 1;
                }
            }
        }
    }
    let total = partitions.len() as f64;
    let values = counts.into_iter().map(|c| c as f64 / total).collect();
    CoAssocMatrix::from_dense(ids, values, tag)
}

/// Weights of the technical, named-entity and domain-term models.
///
/// The technical model gets `1 - alpha`; the privileged share `alpha` is split
/// into `beta` (named entities) and `theta` (domain terms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

impl ConsensusConfig {
    pub fn new(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        let cfg = ConsensusConfig { alpha, beta, theta };
        match cfg.violations().as_slice() {
            [] => Ok(cfg),
            v => Err(Error::Violations(v.to_vec())),
        }
    }

    /// The single-privileged-view form: `(1 - alpha)·Mt + alpha·Mp`.
    pub fn single(alpha: f64) -> Result<Self> {
        ConsensusConfig::new(alpha, alpha, 0.0)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.alpha) {
            v.push(format!("alpha={} outside [0,1]", self.alpha));
        }
        if !(self.beta >= 0.0) {
            v.push(format!("beta={} is negative", self.beta));
        }
        if !(self.theta >= 0.0) {
            v.push(format!("theta={} is negative", self.theta));
        }
        if !((self.beta + self.theta - self.alpha).abs() <= 1e-12) {
            v.push(format!(
                "β+θ≠α: {}+{}≠{}",
                self.beta, self.theta, self.alpha
            ));
        }
        v
    }

    /// Short label in percent, technical/named-entity/domain-term.
    pub fn label(&self) -> String {
        let pct = |x: f64| (x * 100.0).round() as i64;
        format!(
            "BOW{}-NE{}-DT{}",
            pct(1.0 - self.alpha),
            pct(self.beta),
            pct(self.theta)
        )
    }
}

impl fmt::Display for ConsensusConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The twelve weight rows `(technical, named entities, domain terms)` in
/// percent, grouped by alpha = 0.3, 0.5, 0.7, 1.0.
pub const WEIGHT_GRID_PERCENT: [(u32, u32, u32); 12] = [
    (70, 10, 20),
    (70, 20, 10),
    (70, 15, 15),
    (50, 20, 30),
    (50, 30, 20),
    (50, 25, 25),
    (30, 20, 50),
    (30, 50, 20),
    (30, 35, 35),
    (0, 30, 70),
    (0, 70, 30),
    (0, 50, 50),
];

/// [`WEIGHT_GRID_PERCENT`] as configs.
pub fn default_weight_grid() -> Vec<ConsensusConfig> {
    WEIGHT_GRID_PERCENT
        .iter()
        .map(|&(_, ne, dt)| {
            let beta = ne as f64 / 100.0;
            let theta = dt as f64 / 100.0;
            let alpha = (ne + dt) as f64 / 100.0;
            ConsensusConfig::new(alpha, beta, theta).expect("grid rows are valid")
        })
        .collect()
}

fn check_same_ids(a: &CoAssocMatrix, b: &CoAssocMatrix, what: &str) -> Result<()> {
    if a.ids != b.ids {
        return Err(Error::IdMismatch(format!(
            "{what}: id order differs from the technical matrix"
        )));
    }
    Ok(())
}

fn finish(ids: &[String], mut values: Vec<f64>) -> Result<CoAssocMatrix> {
    let n = ids.len();
    for (idx, v) in values.iter_mut().enumerate() {
        *v = if idx / n == idx % n { 1.0 } else { v.clamp(0.0, 1.0) };
    }
    CoAssocMatrix::from_dense(ids.to_vec(), values, MatrixTag::Consensus)
}

/// `(1 - alpha)·Mt + alpha·Mp`.
pub fn combine_pair(mt: &CoAssocMatrix, mp: &CoAssocMatrix, alpha: f64) -> Result<CoAssocMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha={alpha} outside [0,1]")));
    }
    check_same_ids(mt, mp, "privileged matrix")?;
    let wt = 1.0 - alpha;
    let values = mt
        .values
        .iter()
        .zip(&mp.values)
        .map(|(&t, &p)| wt * t + alpha * p)
        .collect();
    finish(&mt.ids, values)
}

/// `(1 - alpha)·Mt + beta·Mne + theta·Mdt`.
///
/// Evaluated left to right so that `theta = 0, beta = alpha` reproduces
/// [`combine_pair`] bit for bit.
pub fn combine_consensus(
    mt: &CoAssocMatrix,
    mne: &CoAssocMatrix,
    mdt: &CoAssocMatrix,
    cfg: &ConsensusConfig,
) -> Result<CoAssocMatrix> {
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(Error::Violations(violations));
    }
    check_same_ids(mt, mne, "named-entity matrix")?;
    check_same_ids(mt, mdt, "domain-term matrix")?;
    let wt = 1.0 - cfg.alpha;
    let values = mt
        .values
        .iter()
        .zip(&mne.values)
        .zip(&mdt.values)
        .map(|((&t, &ne), &dt)| wt * t + cfg.beta * ne + cfg.theta * dt)
        .collect();
    finish(&mt.ids, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    fn part(labels: &[usize]) -> Partition {
        Partition::new(
            ids(labels.len()),
            labels.to_vec(),
            PartitionSource {
                algorithm: "fixture",
                k: 0,
                seed: 0,
            },
        )
    }

    #[test]
    fn co_association_fixture_counts() {
        // (d0, d1) share a cluster in partitions 0, 1 and 3 only.
        let ps = [part(&[0, 0, 1]), part(&[1, 1, 0]), part(&[0, 1, 1]), part(&[2, 2, 2])];
        let m = co_association(&ps, MatrixTag::Technical).unwrap();
        assert_eq!(m.get(0, 1), 0.75);
        assert_eq!(m.get(1, 2), 0.5);
        assert_eq!(m.get(0, 2), 0.25);
        assert_eq!(m.get(2, 2), 1.0);
    }

    #[test]
    fn single_partition_is_binary() {
        let m = co_association(&[part(&[0, 1, 0, 2])], MatrixTag::Technical).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(m.get(0, 2), 1.0);
    }

    #[test]
    fn mismatched_partition_is_named() {
        let mut bad = part(&[0, 1, 0]);
        bad.ids[2] = "zz".into();
        let err = co_association(&[part(&[0, 1, 0]), bad], MatrixTag::Technical).unwrap_err();
        assert!(err.to_string().contains("partition 1"), "{err}");
        assert!(co_association(&[], MatrixTag::Technical).is_err());
    }

    #[test]
    fn consensus_config_checks() {
        assert!(ConsensusConfig::new(0.3, 0.1, 0.2).is_ok());
        let err = ConsensusConfig::new(0.3, 0.2, 0.2).unwrap_err();
        assert!(err.to_string().contains("β+θ≠α"));
        assert!(ConsensusConfig::new(1.2, 0.6, 0.6).is_err());
        assert_eq!(ConsensusConfig::new(0.3, 0.1, 0.2).unwrap().label(), "BOW70-NE10-DT20");
    }

    #[test]
    fn weight_grid_rows_sum_to_one_hundred() {
        for (t, ne, dt) in WEIGHT_GRID_PERCENT {
            assert_eq!(t + ne + dt, 100);
        }
        assert_eq!(default_weight_grid().len(), 12);
    }

    #[test]
    fn combine_table_row_is_convex_combination() {
        let ps_t = [part(&[0, 0, 1])];
        let ps_ne = [part(&[0, 1, 1])];
        let ps_dt = [part(&[0, 1, 0])];
        let mt = co_association(&ps_t, MatrixTag::Technical).unwrap();
        let mne = co_association(&ps_ne, MatrixTag::NamedEntity).unwrap();
        let mdt = co_association(&ps_dt, MatrixTag::DomainTerm).unwrap();
        let cfg = ConsensusConfig::new(0.3, 0.1, 0.2).unwrap();
        let m = combine_consensus(&mt, &mne, &mdt, &cfg).unwrap();
        assert!((m.get(0, 1) - 0.7).abs() < 1e-15);
        assert!((m.get(1, 2) - 0.1).abs() < 1e-15);
        assert!((m.get(0, 2) - 0.2).abs() < 1e-15);
        assert_eq!(m.tag, MatrixTag::Consensus);

        let zero = ConsensusConfig::new(0.0, 0.0, 0.0).unwrap();
        let m0 = combine_consensus(&mt, &mne, &mdt, &zero).unwrap();
        assert_eq!(m0.values(), mt.values());
    }

    #[test]
    fn combine_rejects_reordered_ids() {
        let mt = co_association(&[part(&[0, 0, 1])], MatrixTag::Technical).unwrap();
        let mut other = mt.clone();
        other.ids.swap(0, 1);
        let cfg = ConsensusConfig::single(0.5).unwrap();
        assert!(matches!(
            combine_consensus(&mt, &other, &mt, &cfg),
            Err(Error::IdMismatch(_))
        ));
    }

    fn distortion(rows: &[SparseRow], labels: &[usize], dim: usize) -> f64 {
        // Sum over clusters of (1 - cos(x, normalized centroid)).
        let k = labels.iter().max().unwrap() + 1;
        let mut total = 0.0;
        for c in 0..k {
            let mut sum = vec![0.0; dim];
            for (r, _) in rows.iter().zip(labels).filter(|(_, &l)| l == c) {
                for &(j, v) in r {
                    sum[j] += v;
                }
            }
            let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (r, _) in rows.iter().zip(labels).filter(|(_, &l)| l == c) {
                total += 1.0 - sparse_dot(r, &sum) / norm;
            }
        }
        total
    }

    #[test]
    fn kmeans_matches_brute_force_best_two_partition() {
        let s = 0.5f64.sqrt();
        let rows: Vec<SparseRow> = vec![vec![(0, s), (1, s)], vec![(0, s), (1, s)], vec![(2, 1.0)]];
        // Exhaustive search over all labelings with two non-empty clusters.
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1u32..(1 << 3) - 1 {
            let labels: Vec<usize> = (0..3).map(|i| ((mask >> i) & 1) as usize).collect();
            let d = distortion(&rows, &labels, 3);
            if d < best.0 - 1e-12 {
                best = (d, labels);
            }
        }
        assert_eq!(best.1[0], best.1[1]);
        let refs: Vec<&SparseRow> = rows.iter().collect();
        for seed in 0..20 {
            let labels = spherical_kmeans(&refs, 3, 2, seed);
            assert_eq!(labels[0], labels[1], "seed {seed}");
            assert_ne!(labels[0], labels[2], "seed {seed}");
        }
    }

    #[test]
    fn kmeans_is_deterministic_and_fills_clusters() {
        let rows: Vec<SparseRow> = (0..12).map(|i| vec![(i % 4, 1.0)]).collect();
        let refs: Vec<&SparseRow> = rows.iter().collect();
        let a = spherical_kmeans(&refs, 4, 4, 7);
        assert_eq!(a, spherical_kmeans(&refs, 4, 4, 7));
        let mut used = a.clone();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), 4);
    }

    #[test]
    fn default_spec_sweeps_k() {
        let spec = default_ensemble_spec(20, 5, 1);
        // ⌈√20⌉ = 5 → k ∈ {2,3,4,5}.
        assert_eq!(spec.len(), 4 * 5);
        assert_eq!(spec.iter().map(|m| m.k).max(), Some(5));
        assert_eq!(default_ensemble_spec(2, 1, 0), vec![EnsembleMember { k: 2, seed: 2000 }]);
    }
}
