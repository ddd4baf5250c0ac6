//! Contextual pre-filtering by data segmentation (C. Reduction).
//!
//! One IBCF model is trained per context segment. A segment is retained only
//! if, on an inner validation split, it beats the global model in F1@N on the
//! validation queries whose active context is that segment.
//!
//! A segment model only knows the items of its segment. When its list is
//! shorter than requested, the remaining slots are filled from the global
//! model's list, skipping duplicates.

use std::collections::{BTreeMap, BTreeSet};

use super::{inner_split, AccessLog, InnerSplit, RecommendationList, Recommender, Request, SimilarityModel};
use crate::error::Result;
use crate::eval::f1_at_n;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentScore {
    pub context: String,
    pub cases: usize,
    pub f1_segment: f64,
    pub f1_global: f64,
    pub retained: bool,
}

#[derive(Debug, Clone)]
pub struct CReduction {
    pub global: SimilarityModel,
    /// Retained segment models, trained on the full log.
    pub segments: BTreeMap<String, SimilarityModel>,
    pub scores: Vec<SegmentScore>,
}

pub fn train_c_reduction(log: &AccessLog, contexts: &[String], split: &InnerSplit, k: usize) -> Result<CReduction> {
    let (train, cases) = inner_split(log, split);
    let global_inner = SimilarityModel::build(&train, k, |_| true).ok();

    let mut scores = Vec::new();
    let mut retained = Vec::new();
    for c in contexts.iter().collect::<BTreeSet<_>>() {
        let seg_log = train.filter(|e| &e.context == c);
        let distinct: BTreeSet<&str> = seg_log.events().iter().map(|e| e.item.as_str()).collect();
        let queries: Vec<_> = cases.iter().filter(|q| &q.context == c).collect();
        let (f1_segment, f1_global, ok) = match (&global_inner, distinct.len() >= 2 && !queries.is_empty()) {
            (Some(global), true) => {
                let seg = SimilarityModel::build(&seg_log, k, |_| true)?;
                let f1 = |m: Option<&SimilarityModel>| {
                    queries
                        .iter()
                        .map(|q| {
                            let list = segment_list(m, global, &q.user, &q.observed, split.n);
                            f1_at_n(&list, &q.hidden, split.n)
                        })
                        .sum::<f64>()
                        / queries.len() as f64
                };
                let (fs, fg) = (f1(Some(&seg)), f1(None));
                (fs, fg, fs > fg)
            }
            _ => (0.0, 0.0, false),
        };
        if ok {
            retained.push(c.clone());
        }
        scores.push(SegmentScore {
            context: c.clone(),
            cases: queries.len(),
            f1_segment,
            f1_global,
            retained: ok,
        });
    }

    let global = SimilarityModel::build(log, k, |_| true)?;
    let mut segments = BTreeMap::new();
    for c in retained {
        let seg_log = log.filter(|e| e.context == c);
        segments.insert(c, SimilarityModel::build(&seg_log, k, |_| true)?);
    }
    Ok(CReduction {
        global,
        segments,
        scores,
    })
}

/// Segment list completed from the global list; the global list alone
/// without a segment model.
fn segment_list(
    segment: Option<&SimilarityModel>,
    global: &SimilarityModel,
    user: &str,
    observed: &[String],
    n: usize,
) -> RecommendationList {
    let Some(seg) = segment else {
        return global.recommend_for(user, observed, n);
    };
    let mut list = seg.recommend_for(user, observed, n);
    if list.len() < n {
        let have: BTreeSet<String> = list.item_ids().map(str::to_string).collect();
        let fill: Vec<(String, f64)> = global
            .recommend_for(user, observed, n + have.len())
            .items
            .into_iter()
            .filter(|(i, _)| !have.contains(i))
            .collect();
        list.items.extend(fill);
        list.items.truncate(n);
    }
    list
}

impl Recommender for CReduction {
    fn recommend(&self, req: &Request<'_>) -> RecommendationList {
        segment_list(self.segments.get(req.context), &self.global, req.user, req.observed, req.n)
    }
}
