//! Contextual modelling with context values as virtual items (DaVI-BEST).
//!
//! For each candidate context dimension, every access `(u, i)` also adds the
//! access `(u, virtual(context of i))`. The dimension whose enhanced model
//! scores best on an inner validation split is kept, and only if it strictly
//! beats the plain model; otherwise predictions are the plain model's.

use std::collections::{BTreeSet, HashMap};

use super::{inner_split, Access, AccessLog, InnerSplit, RecommendationList, Recommender, Request, SimilarityModel};
use crate::error::{Error, Result};
use crate::eval::average_precision;
use crate::hierarchy::ContextAssignment;

/// Prefix of virtual item ids; a NUL byte never occurs in real ids read from
/// line-oriented files.
const VIRTUAL_PREFIX: &str = "\u{0}ctx";

/// A named item → context mapping, e.g. one topic granularity.
#[derive(Debug, Clone)]
pub struct ContextDimension {
    pub name: String,
    pub assignment: ContextAssignment,
}

fn virtual_item(dim: &str, context: &str) -> String {
    format!("{VIRTUAL_PREFIX}/{dim}/{context}")
}

pub fn is_virtual(item: &str) -> bool {
    item.starts_with(VIRTUAL_PREFIX)
}

fn augment_log(log: &AccessLog, dim: &ContextDimension) -> AccessLog {
    let mut events = Vec::with_capacity(log.len() * 2);
    for e in log.events() {
        events.push(e.clone());
        if let Some(c) = dim.assignment.get(&e.item) {
            events.push(Access {
                user: e.user.clone(),
                item: virtual_item(&dim.name, c),
                context: e.context.clone(),
            });
        }
    }
    AccessLog::from_events(events)
}

fn augment_observed(observed: &[String], dim: &ContextDimension) -> Vec<String> {
    let mut out = observed.to_vec();
    let virt: BTreeSet<String> = observed
        .iter()
        .filter_map(|o| dim.assignment.get(o))
        .map(|c| virtual_item(&dim.name, c))
        .collect();
    out.extend(virt);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionScore {
    pub dimension: String,
    pub map: f64,
}

#[derive(Debug, Clone)]
pub struct DaviBest {
    pub baseline: SimilarityModel,
    /// Selected dimension and its enhanced model, trained on the full log.
    pub chosen: Option<(ContextDimension, SimilarityModel)>,
    pub baseline_map: f64,
    pub scores: Vec<DimensionScore>,
}

fn inner_map(model: &SimilarityModel, cases: &[super::ValidationCase], n: usize, dim: Option<&ContextDimension>) -> f64 {
    if cases.is_empty() {
        return 0.0;
    }
    cases
        .iter()
        .map(|q| {
            let obs = match dim {
                Some(d) => augment_observed(&q.observed, d),
                None => q.observed.clone(),
            };
            average_precision(&model.recommend_for(&q.user, &obs, n), &q.hidden, n)
        })
        .sum::<f64>()
        / cases.len() as f64
}

pub fn train_davi_best(log: &AccessLog, dimensions: &[ContextDimension], split: &InnerSplit, k: usize) -> Result<DaviBest> {
    let names: BTreeSet<&str> = dimensions.iter().map(|d| d.name.as_str()).collect();
    if names.len() != dimensions.len() {
        return Err(Error::Config("context dimension names must be unique".into()));
    }
    let baseline = SimilarityModel::build(log, k, |_| true)?;
    let (train, cases) = inner_split(log, split);
    let Ok(base_inner) = SimilarityModel::build(&train, k, |_| true) else {
        return Ok(DaviBest {
            baseline,
            chosen: None,
            baseline_map: 0.0,
            scores: Vec::new(),
        });
    };
    let baseline_map = inner_map(&base_inner, &cases, split.n, None);

    let mut scores = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (d, dim) in dimensions.iter().enumerate() {
        // A dimension with a single value carries no information.
        let values: BTreeSet<&str> = log
            .events()
            .iter()
            .filter_map(|e| dim.assignment.get(&e.item))
            .collect();
        if values.len() < 2 {
            continue;
        }
        let model = SimilarityModel::build(&augment_log(&train, dim), k, |i| !is_virtual(i))?;
        let map = inner_map(&model, &cases, split.n, Some(dim));
        scores.push(DimensionScore {
            dimension: dim.name.clone(),
            map,
        });
        if best.is_none_or(|(_, m)| map > m) {
            best = Some((d, map));
        }
    }

    let chosen = match best {
        Some((d, map)) if map > baseline_map => {
            let dim = dimensions[d].clone();
            let model = SimilarityModel::build(&augment_log(log, &dim), k, |i| !is_virtual(i))?;
            Some((dim, model))
        }
        _ => None,
    };
    Ok(DaviBest {
        baseline,
        chosen,
        baseline_map,
        scores,
    })
}

impl Recommender for DaviBest {
    fn recommend(&self, req: &Request<'_>) -> RecommendationList {
        match &self.chosen {
            Some((dim, model)) => model.recommend_for(req.user, &augment_observed(req.observed, dim), req.n),
            None => self.baseline.recommend_for(req.user, req.observed, req.n),
        }
    }
}

/// Dimension built from a log's own event contexts.
pub fn dimension_from_log(name: &str, log: &AccessLog) -> ContextDimension {
    let map: HashMap<&str, &str> = log.item_contexts();
    ContextDimension {
        name: name.to_string(),
        assignment: ContextAssignment::from_pairs(map.into_iter().map(|(i, c)| (i.to_string(), c.to_string()))),
    }
}
