//! Synthetic corpus and access log with planted topics.
//!
//! Documents belong to topics nested in super-topics. Each topic owns a
//! vocabulary, a set of named entities and a set of domain terms; super-topics
//! share a second vocabulary, and a common vocabulary is shared by all.
//!
//! Focused users have a few topics of interest and browse in sessions: each
//! session picks one interest and mostly stays inside it. Broad users browse
//! anywhere in one super-topic, which links sibling topics in co-access
//! statistics without making any single focused user less focused.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_corpus, Corpus, Document};
use crate::error::Result;
use crate::recsys::write_log;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub super_topics: usize,
    pub topics_per_super: usize,
    pub docs_per_topic: usize,
    pub words_per_doc: usize,
    /// Vocabulary sizes.
    pub topic_vocab: usize,
    pub super_vocab: usize,
    pub common_vocab: usize,
    /// Token mix of a document: topic words, super-topic words, rest common.
    pub topic_share: f64,
    pub super_share: f64,
    /// Chance that a document carries named entities; likewise domain terms.
    pub annotation_rate: f64,
    pub users: usize,
    pub min_interests: usize,
    pub max_interests: usize,
    pub min_sessions: usize,
    pub max_sessions: usize,
    pub min_session_len: usize,
    pub max_session_len: usize,
    /// Chance that an access stays in the session's topic; otherwise any
    /// document is picked uniformly.
    pub in_topic_rate: f64,
    /// Share of users who browse a whole super-topic.
    pub broad_user_rate: f64,
    /// Session count multiplier of broad users.
    pub broad_activity: usize,
    /// Zipf exponent of document popularity inside a topic.
    pub popularity_skew: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            super_topics: 5,
            topics_per_super: 5,
            docs_per_topic: 22,
            words_per_doc: 60,
            topic_vocab: 40,
            super_vocab: 40,
            common_vocab: 200,
            topic_share: 0.45,
            super_share: 0.2,
            annotation_rate: 0.9,
            users: 1200,
            min_interests: 1,
            max_interests: 1,
            min_sessions: 1,
            max_sessions: 1,
            min_session_len: 2,
            max_session_len: 4,
            in_topic_rate: 0.85,
            broad_user_rate: 0.0,
            broad_activity: 1,
            popularity_skew: 0.8,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub corpus: Corpus,
    /// Chronological `(user, doc)` accesses.
    pub log: Vec<(String, String)>,
    /// Planted doc → topic.
    pub planted: BTreeMap<String, String>,
}

/// Alphabetic pseudo-word, so the tokenizer keeps it whole.
fn word(prefix: &str, mut i: usize) -> String {
    let mut s = prefix.to_string();
    loop {
        s.push((b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    s
}

/// Two-letter prefix unique to `i`.
fn tag(i: usize) -> String {
    word("", i + 26)
}

pub fn generate(spec: &SynthSpec) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_topics = spec.super_topics * spec.topics_per_super;
    let common: Vec<String> = (0..spec.common_vocab).map(|i| word("com", i)).collect();
    let supers: Vec<Vec<String>> = (0..spec.super_topics)
        .map(|s| (0..spec.super_vocab).map(|i| word(&format!("sup{}", tag(s)), i)).collect())
        .collect();
    let topic_words: Vec<Vec<String>> = (0..n_topics)
        .map(|t| (0..spec.topic_vocab).map(|i| word(&format!("top{}", tag(t)), i)).collect())
        .collect();

    let mut docs = Vec::new();
    let mut planted = BTreeMap::new();
    let mut by_topic: Vec<Vec<String>> = vec![Vec::new(); n_topics];
    for t in 0..n_topics {
        let s = t / spec.topics_per_super;
        for d in 0..spec.docs_per_topic {
            let id = format!("d{t:02}_{d:03}");
            let mut tokens = Vec::with_capacity(spec.words_per_doc);
            for _ in 0..spec.words_per_doc {
                let u: f64 = rng.random();
                let pool = if u < spec.topic_share {
                    &topic_words[t]
                } else if u < spec.topic_share + spec.super_share {
                    &supers[s]
                } else {
                    &common
                };
                tokens.push(pool[rng.random_range(0..pool.len())].clone());
            }
            let mut doc = Document::new(id.clone(), tokens.join(" "));
            if rng.random_bool(spec.annotation_rate) {
                doc.ne_annotations = (0..rng.random_range(2..=4))
                    .map(|_| format!("Entity {} {}", tag(t), tag(rng.random_range(0..6))))
                    .collect();
            }
            if rng.random_bool(spec.annotation_rate) {
                doc.dt_annotations = (0..rng.random_range(2..=4))
                    .map(|_| format!("term {} {}", tag(t), tag(rng.random_range(0..6))))
                    .collect();
            }
            planted.insert(id.clone(), format!("topic{t:02}"));
            by_topic[t].push(id);
            docs.push(doc);
        }
    }

    let popularity: Vec<f64> = (0..spec.docs_per_topic)
        .map(|r| 1.0 / ((r + 1) as f64).powf(spec.popularity_skew))
        .collect();
    let within = WeightedIndex::new(&popularity).expect("positive weights");
    // Popularity rank is shuffled per topic so that it does not follow doc ids,
    // which would leak into id-ordered tie-breaks.
    let ranked: Vec<Vec<String>> = by_topic
        .iter()
        .map(|ids| {
            let mut v = ids.clone();
            v.shuffle(&mut rng);
            v
        })
        .collect();
    let all_ids: Vec<&String> = by_topic.iter().flatten().collect();
    let mut log = Vec::new();
    for u in 0..spec.users {
        let user = format!("u{u:05}");
        let broad = rng.random_bool(spec.broad_user_rate);
        let interests: Vec<usize> = (0..rng.random_range(spec.min_interests..=spec.max_interests))
            .map(|_| rng.random_range(0..n_topics))
            .collect();
        let mut sessions = rng.random_range(spec.min_sessions..=spec.max_sessions);
        if broad {
            sessions *= spec.broad_activity.max(1);
        }
        for _ in 0..sessions {
            let mut topic = interests[rng.random_range(0..interests.len())];
            for _ in 0..rng.random_range(spec.min_session_len..=spec.max_session_len) {
                if broad {
                    let first = interests[0] / spec.topics_per_super * spec.topics_per_super;
                    topic = first + rng.random_range(0..spec.topics_per_super);
                }
                let doc = if rng.random_bool(spec.in_topic_rate) {
                    &ranked[topic][within.sample(&mut rng)]
                } else {
                    all_ids[rng.random_range(0..all_ids.len())]
                };
                log.push((user.clone(), doc.clone()));
            }
        }
    }

    SynthData {
        corpus: Corpus::new(docs).expect("generated ids are unique"),
        log,
        planted,
    }
}

/// Files written by [`SynthData::write`].
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub corpus: PathBuf,
    pub named_entities: PathBuf,
    pub domain_terms: PathBuf,
    pub log: PathBuf,
}

impl SynthData {
    pub fn write(&self, dir: &Path) -> Result<SynthPaths> {
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
        let paths = SynthPaths {
            corpus: dir.join("corpus.jsonl"),
            named_entities: dir.join("named_entities.tsv"),
            domain_terms: dir.join("domain_terms.tsv"),
            log: dir.join("log.tsv"),
        };
        write_corpus(&self.corpus, &paths.corpus, &paths.named_entities, &paths.domain_terms)?;
        write_log(&paths.log, &self.log)?;
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let spec = SynthSpec {
            users: 50,
            ..SynthSpec::default()
        };
        let a = generate(&spec);
        assert_eq!(a.corpus.n(), 550);
        assert!(a.log.len() >= 100);
        let b = generate(&spec);
        assert_eq!(a.log, b.log);
        assert_eq!(a.corpus, b.corpus);
        let privileged = a.corpus.docs().iter().filter(|d| d.is_privileged()).count();
        assert!((400..500).contains(&privileged), "{privileged}");
    }

    #[test]
    fn words_are_alphabetic_and_distinct() {
        assert_eq!(word("x", 0), "xa");
        assert_eq!(word("x", 27), "xbb");
        assert!(tag(5).chars().all(|c| c.is_ascii_lowercase()));
        assert_ne!(tag(0), tag(26));
    }
}
