//! Item-based collaborative filtering and context-aware strategies that use
//! an item's topic as its context.
//!
//! Every strategy builds on the same binary implicit-feedback cosine model
//! ([`ibcf`]). Contextual information enters at three points: before training
//! by segmenting the data ([`reduction`]), inside the model as virtual items
//! ([`davi`]), or after ranking by reweighting or filtering ([`pof`]).

pub mod davi;
pub mod ibcf;
pub mod pof;
pub mod reduction;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::ContextAssignment;

pub use davi::{train_davi_best, ContextDimension, DaviBest};
pub use ibcf::{build_ibcf, recommend, SimilarityModel};
pub use pof::{estimate_context_probability, filter_pof, weight_pof, ContextProbabilities, PostFilter, PostFilterMode};
pub use reduction::{train_c_reduction, CReduction};

/// Default neighbourhood size.
pub const DEFAULT_K: usize = 4;
/// Default Filter PoF threshold.
pub const DEFAULT_TAU: f64 = 0.1;

/// One access, with the context (topic) of the accessed item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub user: String,
    pub item: String,
    pub context: String,
}

/// Chronological binary implicit-feedback log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessLog {
    events: Vec<Access>,
}

impl AccessLog {
    /// Attaches to every `(user, item)` pair the context of its item.
    pub fn new<I>(pairs: I, contexts: &ContextAssignment) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let events = pairs
            .into_iter()
            .map(|(user, item)| {
                let context = contexts
                    .get(&item)
                    .ok_or_else(|| Error::IdMismatch(format!("item {item:?} has no context")))?
                    .to_string();
                Ok(Access { user, item, context })
            })
            .collect::<Result<_>>()?;
        Ok(AccessLog { events })
    }

    /// Every event gets the same context value.
    pub fn uniform_context<I>(pairs: I, context: &str) -> Self
    where
        I: IntoIterator<Item = (String, String)>,
    {
        AccessLog {
            events: pairs
                .into_iter()
                .map(|(user, item)| Access {
                    user,
                    item,
                    context: context.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_events(events: Vec<Access>) -> Self {
        AccessLog { events }
    }

    pub fn events(&self) -> &[Access] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Access) -> bool) -> AccessLog {
        AccessLog {
            events: self.events.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    /// Distinct items per user, ordered by their most recent access.
    pub fn histories(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut last: BTreeMap<&str, HashMap<&str, usize>> = BTreeMap::new();
        for (t, e) in self.events.iter().enumerate() {
            last.entry(&e.user).or_default().insert(&e.item, t);
        }
        last.into_iter()
            .map(|(u, items)| {
                let mut v: Vec<(&str, usize)> = items.into_iter().collect();
                v.sort_by_key(|&(_, t)| t);
                (u, v.into_iter().map(|(i, _)| i).collect())
            })
            .collect()
    }

    /// Context of each item as seen in the log.
    pub fn item_contexts(&self) -> HashMap<&str, &str> {
        self.events
            .iter()
            .map(|e| (e.item.as_str(), e.context.as_str()))
            .collect()
    }

    pub fn users(&self) -> Vec<&str> {
        self.histories().into_keys().collect()
    }
}

/// Reads `user<TAB>item` lines (comma also accepted), in chronological order.
pub fn read_log(path: &Path) -> Result<Vec<(String, String)>> {
    crate::corpus::read_pairs(path)
}

pub fn write_log(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let text: String = pairs.iter().map(|(u, i)| format!("{u}\t{i}\n")).collect();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Ranked recommendations for one user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecommendationList {
    pub user: String,
    pub items: Vec<(String, f64)>,
}

impl RecommendationList {
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(i, _)| i.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn truncate(mut self, n: usize) -> Self {
        self.items.truncate(n);
        self
    }

    /// 1-based rank of `item`, if present.
    pub fn rank_of(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|(i, _)| i == item).map(|p| p + 1)
    }
}

/// A recommendation request. `observed` is chronological; `context` is the
/// active context of the user.
#[derive(Debug, Clone, Copy)]
pub struct Request<'a> {
    pub user: &'a str,
    pub observed: &'a [String],
    pub context: &'a str,
    pub n: usize,
}

pub trait Recommender: Send + Sync {
    fn recommend(&self, req: &Request<'_>) -> RecommendationList;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ibcf,
    CReduction,
    DaviBest,
    WeightPof,
    FilterPof,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ibcf,
        Algorithm::CReduction,
        Algorithm::DaviBest,
        Algorithm::WeightPof,
        Algorithm::FilterPof,
    ];

    pub const CONTEXTUAL: [Algorithm; 4] = [
        Algorithm::CReduction,
        Algorithm::DaviBest,
        Algorithm::WeightPof,
        Algorithm::FilterPof,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Ibcf => "IBCF",
            Algorithm::CReduction => "C.Reduction",
            Algorithm::DaviBest => "DaVI-BEST",
            Algorithm::WeightPof => "WeightPoF",
            Algorithm::FilterPof => "FilterPoF",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Algorithm::Ibcf => "ibcf",
            Algorithm::CReduction => "c_reduction",
            Algorithm::DaviBest => "davi_best",
            Algorithm::WeightPof => "weight_pof",
            Algorithm::FilterPof => "filter_pof",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
        .find(|a| a.key() == s || a.display_name() == s)
        .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Validation split carved out of a training log for model selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSplit {
    /// Fraction of users held out for validation.
    pub validation_fraction: f64,
    pub seed: u64,
    /// List length used by the selection metric.
    pub n: usize,
}

impl Default for InnerSplit {
    fn default() -> Self {
        InnerSplit {
            validation_fraction: 0.2,
            seed: 17,
            n: 10,
        }
    }
}

/// Hyper-parameters shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub k: usize,
    pub tau: f64,
    pub lambda: f64,
    pub inner: InnerSplit,
    /// Baseline list length fed to the PoF post-filters; all positive
    /// candidates when `None`.
    pub pof_pool: Option<usize>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            k: DEFAULT_K,
            tau: DEFAULT_TAU,
            lambda: 1.0,
            inner: InnerSplit::default(),
            pof_pool: None,
        }
    }
}

/// Trains `algorithm` on `log`. `contexts` lists every context value;
/// `dimensions` are the candidates for DaVI-BEST.
pub fn train(
    algorithm: Algorithm,
    log: &AccessLog,
    contexts: &[String],
    dimensions: &[ContextDimension],
    params: &ModelParams,
) -> Result<Box<dyn Recommender>> {
    Ok(match algorithm {
        Algorithm::Ibcf => Box::new(build_ibcf(log, params.k)?),
        Algorithm::CReduction => Box::new(train_c_reduction(log, contexts, &params.inner, params.k)?),
        Algorithm::DaviBest => Box::new(train_davi_best(log, dimensions, &params.inner, params.k)?),
        Algorithm::WeightPof | Algorithm::FilterPof => {
            let mode = if algorithm == Algorithm::WeightPof {
                pof::PostFilterMode::Weight
            } else {
                if !(0.0..=1.0).contains(&params.tau) {
                    return Err(Error::Config(format!("threshold τ = {} outside [0,1]", params.tau)));
                }
                pof::PostFilterMode::Filter { tau: params.tau }
            };
            Box::new(PostFilter {
                baseline: build_ibcf(log, params.k)?,
                probs: estimate_context_probability(log, contexts, params.lambda)?,
                mode,
                pool: params.pof_pool,
            })
        }
    })
}

/// Hold-one-out query built from a validation user.
#[derive(Debug, Clone)]
pub(crate) struct ValidationCase {
    pub user: String,
    pub observed: Vec<String>,
    pub hidden: String,
    pub context: String,
}

/// Splits users into (training log, validation cases). Each validation user
/// with two or more distinct items hides one at random; the active context is
/// the context of the most recent observed item.
pub(crate) fn inner_split(log: &AccessLog, split: &InnerSplit) -> (AccessLog, Vec<ValidationCase>) {
    let histories = log.histories();
    let mut users: Vec<&str> = histories.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(split.seed);
    users.shuffle(&mut rng);
    let n_val = ((users.len() as f64) * split.validation_fraction).round() as usize;
    let mut val_users: Vec<&str> = users[..n_val.min(users.len())].to_vec();
    val_users.sort();
    let contexts = log.item_contexts();

    let mut cases = Vec::new();
    for u in &val_users {
        let items = &histories[u];
        if items.len() < 2 {
            continue;
        }
        let h = rng.random_range(0..items.len());
        let observed: Vec<String> = items
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != h)
            .map(|(_, i)| i.to_string())
            .collect();
        let last = observed.last().expect("at least one observed item");
        cases.push(ValidationCase {
            user: u.to_string(),
            context: contexts[last.as_str()].to_string(),
            hidden: items[h].to_string(),
            observed,
        });
    }
    let val_set: std::collections::HashSet<&str> = val_users.into_iter().collect();
    let train = log.filter(|e| !val_set.contains(e.user.as_str()));
    (train, cases)
}
