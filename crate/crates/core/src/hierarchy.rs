//! Topic hierarchy: dendrogram over the consensus matrix, granularity-bounded
//! topics and the item → topic context map.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{SparseRow, ViewMatrix};
use crate::ensemble::CoAssocMatrix;
use crate::error::{Error, Result};

/// Topic id of the reserved pool of documents that fall under no selected node.
pub const OVERFLOW_TOPIC: &str = "overflow";

/// Label used when a topic has no terms at all.
pub const EMPTY_LABEL: &str = "∅";

/// One agglomeration step. Nodes `0..n` are leaves, node `n + t` is created by
/// merge `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(leaves: Vec<String>, merges: Vec<Merge>) -> Result<Self> {
        let d = Dendrogram { leaves, merges };
        d.validate()?;
        Ok(d)
    }

    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> usize {
        2 * self.leaves.len() - 2
    }

    pub fn node_size(&self, node: usize) -> usize {
        let n = self.leaves.len();
        if node < n {
            1
        } else {
            self.merges[node - n].size
        }
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        let n = self.leaves.len();
        (node >= n).then(|| {
            let m = &self.merges[node - n];
            (m.a, m.b)
        })
    }

    /// Leaf indices under `node`, left subtree first.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.node_size(node));
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            match self.children(x) {
                Some((a, b)) => {
                    stack.push(b);
                    stack.push(a);
                }
                None => out.push(x),
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.leaves.len();
        let bad = |m: String| Err(Error::Invariant(format!("dendrogram: {m}")));
        if n < 2 {
            return bad(format!("{n} leaves"));
        }
        if self.merges.len() != n - 1 {
            return bad(format!("{} merges for {n} leaves", self.merges.len()));
        }
        let mut used = vec![false; 2 * n - 1];
        let mut prev = f64::NEG_INFINITY;
        for (t, m) in self.merges.iter().enumerate() {
            let limit = n + t;
            if m.a >= limit || m.b >= limit || m.a == m.b {
                return bad(format!("merge {t} refers to unavailable nodes"));
            }
            if used[m.a] || used[m.b] {
                return bad(format!("merge {t} reuses a merged node"));
            }
            used[m.a] = true;
            used[m.b] = true;
            if !(m.height >= prev) || !m.height.is_finite() {
                return bad(format!("merge {t} height {} below {prev}", m.height));
            }
            prev = m.height;
            if m.size != self.node_size(m.a) + self.node_size(m.b) {
                return bad(format!("merge {t} size mismatch"));
            }
        }
        // n-1 valid merges of distinct unused nodes always end at a single root.
        Ok(())
    }

    /// First line `leaves<TAB>id...`, then `a<TAB>b<TAB>height` per merge.
    pub fn encode(&self) -> String {
        let mut out = format!("leaves\t{}\n", self.leaves.join("\t"));
        for m in &self.merges {
            out.push_str(&format!("{}\t{}\t{}\n", m.a, m.b, m.height));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let leaves: Vec<String> = lines
            .next()
            .and_then(|l| l.strip_prefix("leaves\t"))
            .ok_or_else(|| Error::parse(path, 1, "missing leaves header"))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let mut merges: Vec<Merge> = Vec::new();
        let n = leaves.len();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            let parsed = (f.len() == 3)
                .then(|| Some((f[0].parse().ok()?, f[1].parse().ok()?, f[2].parse().ok()?)))
                .flatten();
            let (a, b, height): (usize, usize, f64) =
                parsed.ok_or_else(|| Error::parse(path, i + 2, "expected a<TAB>b<TAB>height"))?;
            let size_of = |x: usize| {
                if x < n {
                    Some(1)
                } else {
                    merges.get(x - n).map(|m| m.size)
                }
            };
            let size = size_of(a)
                .zip(size_of(b))
                .map(|(x, y)| x + y)
                .ok_or_else(|| Error::parse(path, i + 2, "merge refers to a later node"))?;
            merges.push(Merge { a, b, height, size });
        }
        Dendrogram::new(leaves, merges)
    }
}

/// Average-linkage agglomerative clustering on `1 - consensus`.
///
/// Ties on distance go to the pair whose smallest member ids are
/// lexicographically smallest. Each node keeps a cached nearest neighbour, so
/// typical inputs need O(n²) work.
pub fn agglomerate(consensus: &CoAssocMatrix) -> Result<Dendrogram> {
    let n = consensus.len();
    if n < 2 {
        return Err(Error::Insufficient(format!("{n} documents to agglomerate")));
    }
    // Cluster key = lexicographic rank of its smallest member id.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| consensus.ids[a].cmp(&consensus.ids[b]));
    let mut key = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        key[i] = rank;
    }

    let mut dsum: Vec<f64> = (0..n * n)
        .map(|idx| 1.0 - consensus.get(idx / n, idx % n))
        .collect();
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    let mut active = vec![true; n];
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    let avg = |dsum: &[f64], size: &[usize], a: usize, b: usize| dsum[a * n + b] / (size[a] * size[b]) as f64;
    let better = |d1: f64, k1: usize, d2: f64, k2: usize| d1.total_cmp(&d2).then(k1.cmp(&k2)) == Ordering::Less;

    let find_nn = |c: usize, dsum: &[f64], size: &[usize], active: &[bool], key: &[usize]| {
        let (mut best, mut best_d) = (usize::MAX, f64::INFINITY);
        for d in 0..n {
            if d == c || !active[d] {
                continue;
            }
            let dist = avg(dsum, size, c, d);
            if best == usize::MAX || better(dist, key[d], best_d, key[best]) {
                best = d;
                best_d = dist;
            }
        }
        (best, best_d)
    };

    for c in 0..n {
        (nn[c], nn_dist[c]) = find_nn(c, &dsum, &size, &active, &key);
    }

    let mut merges = Vec::with_capacity(n - 1);
    let mut prev_height = 0.0f64;
    for step in 0..n - 1 {
        // Global minimum over cached rows, ties by ordered pair key.
        let mut pick = usize::MAX;
        let mut pick_key = (usize::MAX, usize::MAX);
        for c in 0..n {
            if !active[c] {
                continue;
            }
            let pk = (key[c].min(key[nn[c]]), key[c].max(key[nn[c]]));
            if pick == usize::MAX
                || nn_dist[c]
                    .total_cmp(&nn_dist[pick])
                    .then(pk.cmp(&pick_key))
                    == Ordering::Less
            {
                pick = c;
                pick_key = pk;
            }
        }
        let (mut a, mut b) = (pick, nn[pick]);
        if key[b] < key[a] {
            std::mem::swap(&mut a, &mut b);
        }
        let height = nn_dist[pick].max(prev_height);
        prev_height = height;
        merges.push(Merge {
            a: node[a],
            b: node[b],
            height,
            size: size[a] + size[b],
        });

        // Merge b into slot a.
        for c in 0..n {
            if active[c] && c != a && c != b {
                let s = dsum[a * n + c] + dsum[b * n + c];
                dsum[a * n + c] = s;
                dsum[c * n + a] = s;
            }
        }
        size[a] += size[b];
        active[b] = false;
        node[a] = n + step;
        key[a] = key[a].min(key[b]);

        for c in 0..n {
            if !active[c] || c == a {
                continue;
            }
            if nn[c] == a || nn[c] == b {
                (nn[c], nn_dist[c]) = find_nn(c, &dsum, &size, &active, &key);
            } else {
                let d = avg(&dsum, &size, c, a);
                if better(d, key[a], nn_dist[c], key[nn[c]]) {
                    nn[c] = a;
                    nn_dist[c] = d;
                }
            }
        }
        if step + 2 < n {
            (nn[a], nn_dist[a]) = find_nn(a, &dsum, &size, &active, &key);
        }
    }
    Dendrogram::new(consensus.ids.clone(), merges)
}

/// Bounds `{min_items, max_items}` on topic size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Granularity {
    pub min_items: usize,
    pub max_items: usize,
}

impl Granularity {
    pub fn new(min_items: usize, max_items: usize) -> Result<Self> {
        let g = Granularity { min_items, max_items };
        match g.violations().as_slice() {
            [] => Ok(g),
            v => Err(Error::Violations(v.to_vec())),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.min_items < 1 {
            v.push(format!("granularity {self}: min<1"));
        }
        if self.min_items > self.max_items {
            v.push(format!("granularity {self}: min>max"));
        }
        v
    }

    /// The three configurations `{50,100}`, `{15,20}`, `{2,7}`.
    pub fn defaults() -> Vec<Granularity> {
        vec![
            Granularity { min_items: 50, max_items: 100 },
            Granularity { min_items: 15, max_items: 20 },
            Granularity { min_items: 2, max_items: 7 },
        ]
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.min_items, self.max_items)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    /// Sorted doc ids.
    pub member_ids: Vec<String>,
    pub label_terms: Vec<String>,
}

impl Topic {
    pub fn is_overflow(&self) -> bool {
        self.topic_id == OVERFLOW_TOPIC
    }
}

/// Maximal dendrogram nodes whose size lies within `g`, top-down.
///
/// Leaves under no selected node are pooled in the [`OVERFLOW_TOPIC`], placed
/// last. Label terms are left empty; see [`label_topic`].
pub fn select_topics(dendro: &Dendrogram, g: Granularity) -> Vec<Topic> {
    let mut selected = Vec::new();
    let mut overflow = Vec::new();
    let mut stack = vec![dendro.root()];
    while let Some(node) = stack.pop() {
        let size = dendro.node_size(node);
        if size > g.max_items {
            let (a, b) = dendro.children(node).expect("leaf nodes have size 1 <= max");
            stack.push(b);
            stack.push(a);
        } else if size >= g.min_items {
            selected.push(node);
        } else {
            overflow.extend(dendro.members(node));
        }
    }
    let width = selected.len().to_string().len().max(3);
    let names = |leaves: Vec<usize>| {
        let mut ids: Vec<String> = leaves.into_iter().map(|l| dendro.leaves()[l].clone()).collect();
        ids.sort();
        ids
    };
    let mut topics: Vec<Topic> = selected
        .into_iter()
        .enumerate()
        .map(|(i, node)| Topic {
            topic_id: format!("t{:0width$}", i, width = width),
            member_ids: names(dendro.members(node)),
            label_terms: Vec::new(),
        })
        .collect();
    if !overflow.is_empty() {
        topics.push(Topic {
            topic_id: OVERFLOW_TOPIC.to_string(),
            member_ids: names(overflow),
            label_terms: Vec::new(),
        });
    }
    topics
}

/// The `t` terms with the largest summed raw count over `member_ids`,
/// descending, ties in lexicographic order.
pub fn label_topic(member_ids: &[String], technical: &ViewMatrix, t: usize) -> Vec<String> {
    let mut totals: HashMap<usize, u64> = HashMap::new();
    for id in member_ids {
        let Some(i) = technical.row_index(id) else { continue };
        for &(j, c) in &technical.counts[i] {
            *totals.entry(j).or_insert(0) += c as u64;
        }
    }
    let mut ranked: Vec<(usize, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| technical.vocabulary[a.0].cmp(&technical.vocabulary[b.0]))
    });
    let labels: Vec<String> = ranked
        .into_iter()
        .take(t)
        .map(|(j, _)| technical.vocabulary[j].clone())
        .collect();
    if labels.is_empty() {
        vec![EMPTY_LABEL.to_string()]
    } else {
        labels
    }
}

/// Fills `label_terms` of every topic.
pub fn label_topics(topics: &mut [Topic], technical: &ViewMatrix, t: usize) {
    for topic in topics {
        topic.label_terms = label_topic(&topic.member_ids, technical, t);
    }
}

/// Brute-force cosine nearest neighbour over the technical rows of the
/// privileged documents, through an inverted index.
#[derive(Debug, Clone)]
pub struct NearestNeighbors {
    ids: Vec<String>,
    postings: HashMap<usize, Vec<(usize, f64)>>,
}

impl NearestNeighbors {
    pub fn new(ids: &[String], technical: &ViewMatrix) -> Result<Self> {
        let mut sorted = ids.to_vec();
        sorted.sort();
        let mut postings: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for (p, id) in sorted.iter().enumerate() {
            let row = technical
                .row(id)
                .ok_or_else(|| Error::IdMismatch(format!("privileged doc {id:?} has no technical row")))?;
            for &(j, v) in row {
                postings.entry(j).or_default().push((p, v));
            }
        }
        Ok(NearestNeighbors { ids: sorted, postings })
    }

    /// Most similar indexed document; ties to the smallest doc id.
    pub fn nearest(&self, vector: &SparseRow) -> Option<(&str, f64)> {
        if self.ids.is_empty() {
            return None;
        }
        let mut scores = vec![0.0; self.ids.len()];
        for &(j, v) in vector {
            if let Some(list) = self.postings.get(&j) {
                for &(p, w) in list {
                    scores[p] += v * w;
                }
            }
        }
        let mut best = 0;
        for (p, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = p;
            }
        }
        Some((self.ids[best].as_str(), scores[best]))
    }
}

/// Total map from doc id to topic id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextAssignment {
    map: BTreeMap<String, String>,
}

impl ContextAssignment {
    /// Assigns every member of every topic.
    pub fn from_topics(topics: &[Topic]) -> Self {
        let mut map = BTreeMap::new();
        for topic in topics {
            for id in &topic.member_ids {
                map.insert(id.clone(), topic.topic_id.clone());
            }
        }
        ContextAssignment { map }
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Self {
        ContextAssignment {
            map: pairs.into_iter().collect(),
        }
    }

    /// Attaches `doc_id` to the topic of its nearest privileged neighbour.
    /// A missing (all-zero) technical vector goes to the overflow topic.
    pub fn insert_incremental(
        &mut self,
        index: &NearestNeighbors,
        doc_id: &str,
        technical: Option<&SparseRow>,
    ) -> Result<&str> {
        let topic = match technical.filter(|r| !r.is_empty()) {
            None => {
                log::info!("doc {doc_id:?} has a zero technical vector; assigned to {OVERFLOW_TOPIC}");
                OVERFLOW_TOPIC.to_string()
            }
            Some(row) => {
                let (nn, _) = index
                    .nearest(row)
                    .ok_or_else(|| Error::Insufficient("empty neighbour index".into()))?;
                self.map
                    .get(nn)
                    .cloned()
                    .ok_or_else(|| Error::IdMismatch(format!("neighbour {nn:?} has no topic")))?
            }
        };
        self.map.insert(doc_id.to_string(), topic);
        Ok(&self.map[doc_id])
    }

    pub fn get(&self, doc_id: &str) -> Option<&str> {
        self.map.get(doc_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// Distinct topic ids, sorted.
    pub fn topics(&self) -> Vec<String> {
        let mut t: Vec<String> = self.map.values().cloned().collect();
        t.sort();
        t.dedup();
        t
    }

    pub fn encode(&self) -> String {
        self.map.iter().map(|(d, t)| format!("{d}\t{t}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let pairs = crate::corpus::read_pairs(path)?;
        let mut map = BTreeMap::new();
        for (i, (d, t)) in pairs.into_iter().enumerate() {
            if map.insert(d.clone(), t).is_some() {
                return Err(Error::parse(path, i + 1, format!("doc {d:?} assigned twice")));
            }
        }
        Ok(ContextAssignment { map })
    }
}

/// Topic file: `topic_id<TAB>label,label<TAB>member,member` per line.
pub fn encode_topics(topics: &[Topic]) -> String {
    topics
        .iter()
        .map(|t| {
            format!(
                "{}\t{}\t{}\n",
                t.topic_id,
                t.label_terms.join(","),
                t.member_ids.join(",")
            )
        })
        .collect()
}

pub fn write_topics(path: &Path, topics: &[Topic]) -> Result<()> {
    fs::write(path, encode_topics(topics)).map_err(|e| Error::io(path, e))
}

pub fn read_topics(path: &Path) -> Result<Vec<Topic>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let split = |s: &str| -> Vec<String> {
        if s.is_empty() {
            Vec::new()
        } else {
            s.split(',').map(str::to_string).collect()
        }
    };
    let mut topics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected topic_id<TAB>labels<TAB>members"));
        }
        let topic = Topic {
            topic_id: f[0].to_string(),
            label_terms: split(f[1]),
            member_ids: split(f[2]),
        };
        if topic.label_terms.is_empty() {
            return Err(Error::parse(path, i + 1, "topic without labels"));
        }
        topics.push(topic);
    }
    Ok(topics)
}
