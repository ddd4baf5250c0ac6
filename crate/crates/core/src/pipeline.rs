//! End-to-end runner: ingest → ensemble → consensus hierarchy → topics →
//! evaluation cells, with every stage output cached under a content hash of
//! its inputs.
//!
//! Artifacts are always written first and then read back, so a fresh run and
//! a fully cached rerun see exactly the same bytes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{validate_config, RunConfig};
use crate::corpus::{build_view_matrix, load_corpus, load_stopwords, Preprocessor, SkipReport, View, ViewMatrix};
use crate::ensemble::{
    co_association, combine_consensus, default_ensemble_spec, run_base_clusterings, CoAssocMatrix, ConsensusConfig,
    MatrixTag,
};
use crate::error::{Error, Result};
use crate::eval::{average_precision, eligible_users, make_cases, make_folds, EvalReport, FoldPlan, FoldRow, BASELINE_CONFIG};
use crate::hierarchy::{
    agglomerate, label_topics, read_topics, select_topics, write_topics, ContextAssignment, Dendrogram, Granularity,
    NearestNeighbors, Topic,
};
use crate::recsys::{
    self, read_log, AccessLog, Algorithm, ContextDimension, CReduction, DaviBest, PostFilter, PostFilterMode, Request,
};

const DONE: &str = ".complete";
/// Context of every event in the un-contextual baseline.
const NO_CONTEXT: &str = "all";

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::io(path, e))
}

/// Cache hits and recomputations, per stage instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub computed: BTreeSet<String>,
    pub cached: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub key: String,
    pub technical: ViewMatrix,
    pub named_entity: ViewMatrix,
    pub domain_term: ViewMatrix,
    pub skipped: SkipReport,
    /// Clustered documents, sorted.
    pub privileged: Vec<String>,
    /// Every other document, sorted; they join topics incrementally.
    pub remainder: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    pub key: String,
    pub technical: CoAssocMatrix,
    pub named_entity: CoAssocMatrix,
    pub domain_term: CoAssocMatrix,
}

#[derive(Debug, Clone)]
pub struct HierarchyOutput {
    pub key: String,
    pub weights: ConsensusConfig,
    pub consensus: CoAssocMatrix,
    pub dendrogram: Dendrogram,
}

#[derive(Debug, Clone)]
pub struct TopicsOutput {
    pub key: String,
    pub weights: ConsensusConfig,
    pub granularity: Granularity,
    pub topics: Vec<Topic>,
    /// Every document, including incrementally inserted ones.
    pub assignment: ContextAssignment,
}

impl TopicsOutput {
    /// Selected topics, overflow excluded.
    pub fn topic_count(&self) -> usize {
        self.topics.iter().filter(|t| !t.is_overflow()).count()
    }
}

/// The access log restricted to known documents, with its folds.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    pub key: String,
    pub pairs: Vec<(String, String)>,
    pub folds: FoldPlan,
}

/// One evaluated cell: the baseline, or an algorithm on one topic set.
#[derive(Debug, Clone, Copy)]
pub struct CellSpec<'a> {
    pub algorithm: Algorithm,
    pub topics: Option<&'a TopicsOutput>,
}

pub struct Pipeline {
    cfg: RunConfig,
    cache_root: PathBuf,
    stats: Mutex<RunStats>,
    locks: Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>,
    pool: rayon::ThreadPool,
}

fn hash_of<T: Serialize>(parts: &T) -> String {
    let bytes = serde_json::to_vec(parts).expect("cache key parts serialize");
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(&bytes);
    hex::encode(&h.finalize()[..12])
}

fn file_hash(path: Option<&Path>) -> Result<String> {
    let Some(path) = path else {
        return Ok(String::new());
    };
    let bytes = io(path, fs::read(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn granularity_slug(g: Granularity) -> String {
    format!("g{}-{}", g.min_items, g.max_items)
}

impl Pipeline {
    /// Validates the configuration and prepares the cache directory.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        validate_config(&cfg).map_err(Error::Violations)?;
        let cache_root = cfg.output_dir.join("cache");
        io(&cache_root, fs::create_dir_all(&cache_root))?;
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cfg.workers {
            pool = pool.num_threads(w);
        }
        let pool = pool
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Pipeline {
            cfg,
            cache_root,
            stats: Mutex::new(RunStats::default()),
            locks: Mutex::new(HashMap::new()),
            pool,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn stats(&self) -> RunStats {
        self.stats.lock().expect("stats lock").clone()
    }

    /// Directory of a stage instance, produced by `produce` unless already
    /// complete. Access to one key is serialized.
    fn stage(&self, stage: &str, key: &str, produce: impl FnOnce(&Path) -> Result<()>) -> Result<PathBuf> {
        let dir = self.cache_root.join(stage).join(key);
        let lock = {
            let mut locks = self.locks.lock().expect("lock table");
            locks.entry(dir.clone()).or_default().clone()
        };
        let _guard = lock.lock().expect("stage lock");
        let name = format!("{stage}/{key}");
        if dir.join(DONE).is_file() {
            log::debug!("cache hit {name}");
            self.stats.lock().expect("stats lock").cached.insert(name);
            return Ok(dir);
        }
        let tmp = dir.with_extension("partial");
        if tmp.exists() {
            io(&tmp, fs::remove_dir_all(&tmp))?;
        }
        if dir.exists() {
            io(&dir, fs::remove_dir_all(&dir))?;
        }
        io(&tmp, fs::create_dir_all(&tmp))?;
        log::info!("computing {name}");
        produce(&tmp)?;
        io(&tmp, fs::write(tmp.join(DONE), key))?;
        io(&dir, fs::rename(&tmp, &dir))?;
        self.stats.lock().expect("stats lock").computed.insert(name);
        Ok(dir)
    }

    /// Views, skip report and the privileged split.
    pub fn ingest(&self) -> Result<Ingested> {
        let inp = &self.cfg.inputs;
        let key = hash_of(&(
            "ingest",
            file_hash(Some(&inp.corpus))?,
            file_hash(inp.named_entities.as_deref())?,
            file_hash(inp.domain_terms.as_deref())?,
            file_hash(inp.stopwords.as_deref())?,
        ));
        let dir = self.stage("ingest", &key, |out| {
            let corpus = load_corpus(&inp.corpus, inp.named_entities.as_deref(), inp.domain_terms.as_deref())?;
            let pre = match &inp.stopwords {
                Some(p) => Preprocessor::with_stopwords(load_stopwords(p)?),
                None => Preprocessor::default(),
            };
            let mut skipped = SkipReport::default();
            let mut views = Vec::new();
            for view in View::ALL {
                let (m, s) = build_view_matrix(&corpus, view, &pre);
                m.write(&out.join(format!("{}.txt", view.as_str())))?;
                skipped.extend(s);
                views.push(m);
            }
            // Privileged documents must have a row in all three views.
            let mut privileged: Vec<&str> = corpus
                .docs()
                .iter()
                .filter(|d| d.is_privileged() && views.iter().all(|v| v.contains(&d.doc_id)))
                .map(|d| d.doc_id.as_str())
                .collect();
            privileged.sort();
            if privileged.len() < 2 {
                return Err(Error::Insufficient(format!(
                    "{} privileged document(s) with all three views; at least 2 are needed",
                    privileged.len()
                )));
            }
            let keep: HashSet<&str> = privileged.iter().copied().collect();
            let mut remainder: Vec<&str> = corpus.ids().filter(|d| !keep.contains(d)).collect();
            remainder.sort();
            let mut split = String::new();
            for d in &privileged {
                split.push_str(&format!("privileged\t{d}\n"));
            }
            for d in &remainder {
                split.push_str(&format!("remainder\t{d}\n"));
            }
            let p = out.join("split.tsv");
            io(&p, fs::write(&p, split))?;
            let p = out.join("skipped.tsv");
            io(&p, fs::write(&p, skipped.encode()))
        })?;

        let read_view = |v: View| ViewMatrix::read(&dir.join(format!("{}.txt", v.as_str())));
        let split_path = dir.join("split.tsv");
        let (mut privileged, mut remainder) = (Vec::new(), Vec::new());
        for (i, line) in io(&split_path, fs::read_to_string(&split_path))?.lines().enumerate() {
            match line.split_once('\t') {
                Some(("privileged", d)) => privileged.push(d.to_string()),
                Some(("remainder", d)) => remainder.push(d.to_string()),
                _ => return Err(Error::parse(&split_path, i + 1, "expected privileged|remainder<TAB>doc")),
            }
        }
        let skipped_path = dir.join("skipped.tsv");
        let mut skipped = SkipReport::default();
        for line in io(&skipped_path, fs::read_to_string(&skipped_path))?.lines() {
            let f: Vec<&str> = line.splitn(3, '\t').collect();
            if let [doc, view, reason] = f[..] {
                skipped.push(doc, view.parse()?, reason);
            }
        }
        Ok(Ingested {
            key,
            technical: read_view(View::Technical)?,
            named_entity: read_view(View::NamedEntity)?,
            domain_term: read_view(View::DomainTerm)?,
            skipped,
            privileged,
            remainder,
        })
    }

    /// One co-association matrix per view over the privileged documents.
    pub fn ensemble(&self, ing: &Ingested) -> Result<EnsembleOutput> {
        let es = self.cfg.ensemble;
        let key = hash_of(&("ensemble", &ing.key, es.seeds_per_k, es.seed));
        let dir = self.stage("ensemble", &key, |out| {
            let spec = default_ensemble_spec(ing.privileged.len(), es.seeds_per_k, es.seed);
            let views = [&ing.technical, &ing.named_entity, &ing.domain_term];
            let matrices: Vec<Result<CoAssocMatrix>> = self.pool.install(|| {
                views
                    .par_iter()
                    .map(|m| {
                        let parts = run_base_clusterings(m, &ing.privileged, &spec)?;
                        co_association(&parts, MatrixTag::from(m.view))
                    })
                    .collect()
            });
            for (m, view) in matrices.into_iter().zip(View::ALL) {
                m?.write(&out.join(format!("{}.txt", view.as_str())))?;
            }
            Ok(())
        })?;
        let read = |v: View| CoAssocMatrix::read(&dir.join(format!("{}.txt", v.as_str())), MatrixTag::from(v));
        Ok(EnsembleOutput {
            key,
            technical: read(View::Technical)?,
            named_entity: read(View::NamedEntity)?,
            domain_term: read(View::DomainTerm)?,
        })
    }

    /// Consensus matrix and dendrogram for one weight row.
    pub fn hierarchy(&self, ens: &EnsembleOutput, weights: &ConsensusConfig) -> Result<HierarchyOutput> {
        let key = hash_of(&("hierarchy", &ens.key, weights));
        let dir = self.stage("hierarchy", &key, |out| {
            let consensus = combine_consensus(&ens.technical, &ens.named_entity, &ens.domain_term, weights)?;
            consensus.write(&out.join("consensus.txt"))?;
            agglomerate(&consensus)?.write(&out.join("dendrogram.txt"))
        })?;
        Ok(HierarchyOutput {
            key,
            weights: *weights,
            consensus: CoAssocMatrix::read(&dir.join("consensus.txt"), MatrixTag::Consensus)?,
            dendrogram: Dendrogram::read(&dir.join("dendrogram.txt"))?,
        })
    }

    /// Topics at one granularity, labelled, with the remainder attached.
    pub fn topics(&self, ing: &Ingested, hier: &HierarchyOutput, g: Granularity) -> Result<TopicsOutput> {
        let key = hash_of(&("topics", &hier.key, g, self.cfg.label_terms));
        let dir = self.stage("topics", &key, |out| {
            let mut topics = select_topics(&hier.dendrogram, g);
            label_topics(&mut topics, &ing.technical, self.cfg.label_terms);
            let mut assignment = ContextAssignment::from_topics(&topics);
            let nn = NearestNeighbors::new(&ing.privileged, &ing.technical)?;
            for doc in &ing.remainder {
                assignment.insert_incremental(&nn, doc, ing.technical.row(doc))?;
            }
            write_topics(&out.join("topics.tsv"), &topics)?;
            assignment.write(&out.join("contexts.tsv"))
        })?;
        Ok(TopicsOutput {
            key,
            weights: hier.weights,
            granularity: g,
            topics: read_topics(&dir.join("topics.tsv"))?,
            assignment: ContextAssignment::read(&dir.join("contexts.tsv"))?,
        })
    }

    /// Every (weight row, granularity) topic set, in configuration order.
    /// A failing weight row is reported instead of aborting the others.
    pub fn all_topics(&self, ing: &Ingested, ens: &EnsembleOutput) -> Vec<(ConsensusConfig, Result<Vec<TopicsOutput>>)> {
        self.pool.install(|| {
            self.cfg
                .weights
                .par_iter()
                .map(|w| {
                    let r = self.hierarchy(ens, w).and_then(|h| {
                        self.cfg
                            .granularities
                            .par_iter()
                            .map(|&g| self.topics(ing, &h, g))
                            .collect::<Result<Vec<_>>>()
                    });
                    (*w, r)
                })
                .collect()
        })
    }

    /// Log restricted to corpus documents, plus the fold plan.
    pub fn eval_plan(&self, ing: &Ingested) -> Result<EvalPlan> {
        let raw = read_log(&self.cfg.inputs.log)?;
        let known: HashSet<&str> = ing.privileged.iter().chain(&ing.remainder).map(String::as_str).collect();
        let total = raw.len();
        let pairs: Vec<(String, String)> = raw.into_iter().filter(|(_, i)| known.contains(i.as_str())).collect();
        if pairs.len() < total {
            log::warn!("{} log event(s) reference unknown documents and were dropped", total - pairs.len());
        }
        let log = AccessLog::uniform_context(pairs.clone(), NO_CONTEXT);
        let folds = make_folds(&eligible_users(&log), self.cfg.seeds.folds, self.cfg.folds)?;
        let key = hash_of(&("plan", file_hash(Some(&self.cfg.inputs.log))?, &ing.key, self.cfg.seeds.folds, self.cfg.folds));
        Ok(EvalPlan { key, pairs, folds })
    }

    fn cell_key(&self, plan: &EvalPlan, cell: &CellSpec<'_>, dims: &[&TopicsOutput]) -> String {
        let c = &self.cfg;
        let topic_keys: Vec<&str> = dims.iter().map(|t| t.key.as_str()).collect();
        hash_of(&(
            "cell",
            &plan.key,
            cell.algorithm,
            cell.topics.map(|t| t.key.as_str()),
            topic_keys,
            c.model_params(),
            &c.n_values,
            c.seeds.cases,
            c.active_context,
        ))
    }

    /// Fold rows of one cell. `dims` are the DaVI-BEST candidates.
    pub fn evaluate_cell(&self, plan: &EvalPlan, cell: CellSpec<'_>, dims: &[&TopicsOutput]) -> Result<Vec<FoldRow>> {
        let key = self.cell_key(plan, &cell, dims);
        let (weights, granularity) = match cell.topics {
            Some(t) => (t.weights.label(), t.granularity.to_string()),
            None => (BASELINE_CONFIG.to_string(), BASELINE_CONFIG.to_string()),
        };
        let dir = self.stage("cells", &key, |out| {
            let rows = self.compute_cell(plan, cell, dims, &weights, &granularity)?;
            let report = EvalReport {
                rows,
                ..EvalReport::default()
            };
            let p = out.join("rows.tsv");
            io(&p, fs::write(&p, report.table()))
        })?;
        EvalReport::read_rows(&dir.join("rows.tsv"))
    }

    fn compute_cell(
        &self,
        plan: &EvalPlan,
        cell: CellSpec<'_>,
        dims: &[&TopicsOutput],
        weights: &str,
        granularity: &str,
    ) -> Result<Vec<FoldRow>> {
        let params = self.cfg.model_params();
        let full = match cell.topics {
            Some(t) => AccessLog::new(plan.pairs.clone(), &t.assignment)?,
            None => AccessLog::uniform_context(plan.pairs.clone(), NO_CONTEXT),
        };
        let contexts: Vec<String> = match cell.topics {
            Some(t) => t.assignment.topics(),
            None => vec![NO_CONTEXT.to_string()],
        };
        let dimensions: Vec<ContextDimension> = dims
            .iter()
            .map(|t| ContextDimension {
                name: t.granularity.to_string(),
                assignment: t.assignment.clone(),
            })
            .collect();
        let max_n = *self.cfg.n_values.iter().max().expect("validated non-empty");

        let per_fold: Vec<Result<Vec<FoldRow>>> = (0..plan.folds.n_folds)
            .into_par_iter()
            .map(|f| {
                let test: HashSet<&str> = plan.folds.fold_users(f).into_iter().collect();
                let train = full.filter(|e| !test.contains(e.user.as_str()));
                let model = recsys::train(cell.algorithm, &train, &contexts, &dimensions, &params)?;
                let users: Vec<&str> = test.iter().copied().collect();
                let (cases, _) = make_cases(&users, &full, self.cfg.seeds.cases.wrapping_add(f as u64), self.cfg.active_context);
                if cases.is_empty() {
                    return Err(Error::Insufficient(format!("fold {f} has no test cases")));
                }
                let lists: Vec<_> = cases
                    .iter()
                    .map(|c| {
                        model.recommend(&Request {
                            user: &c.user,
                            observed: &c.observed,
                            context: &c.active_context,
                            n: max_n,
                        })
                    })
                    .collect();
                Ok(self
                    .cfg
                    .n_values
                    .iter()
                    .map(|&n| {
                        let map = lists
                            .iter()
                            .zip(&cases)
                            .map(|(l, c)| average_precision(l, &c.hidden, n))
                            .sum::<f64>()
                            / cases.len() as f64;
                        FoldRow {
                            algorithm: cell.algorithm.to_string(),
                            weights: weights.to_string(),
                            granularity: granularity.to_string(),
                            n,
                            fold: f,
                            map,
                        }
                    })
                    .collect())
            })
            .collect();
        let mut rows = Vec::new();
        for r in per_fold {
            rows.extend(r?);
        }
        Ok(rows)
    }

    /// Baseline plus every configured (weight row × granularity × algorithm)
    /// cell. Failed cells are recorded, not fatal.
    pub fn evaluate(&self, ing: &Ingested, ens: &EnsembleOutput) -> Result<EvalReport> {
        let plan = self.eval_plan(ing)?;
        let mut failures: Vec<(String, String)> = Vec::new();
        let topic_sets = self.all_topics(ing, ens);

        let mut jobs: Vec<(String, CellSpec<'_>, Vec<&TopicsOutput>)> = vec![(
            "IBCF".to_string(),
            CellSpec {
                algorithm: Algorithm::Ibcf,
                topics: None,
            },
            Vec::new(),
        )];
        let algorithms: Vec<Algorithm> = self
            .cfg
            .algorithms
            .iter()
            .copied()
            .filter(|&a| a != Algorithm::Ibcf)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for (w, r) in &topic_sets {
            match r {
                Err(e) => {
                    for g in &self.cfg.granularities {
                        for a in &algorithms {
                            failures.push((format!("{a} {} {g}", w.label()), e.to_string()));
                        }
                    }
                }
                Ok(sets) => {
                    for t in sets {
                        for &a in &algorithms {
                            let dims: Vec<&TopicsOutput> = match (a, self.cfg.davi_all_granularities) {
                                (Algorithm::DaviBest, true) => sets.iter().collect(),
                                (Algorithm::DaviBest, false) => vec![t],
                                _ => Vec::new(),
                            };
                            let name = format!("{a} {} {}", w.label(), t.granularity);
                            jobs.push((
                                name,
                                CellSpec {
                                    algorithm: a,
                                    topics: Some(t),
                                },
                                dims,
                            ));
                        }
                    }
                }
            }
        }

        let results: Vec<(String, Result<Vec<FoldRow>>)> = self.pool.install(|| {
            jobs.par_iter()
                .map(|(name, cell, dims)| (name.clone(), self.evaluate_cell(&plan, *cell, dims)))
                .collect()
        });
        let mut rows = Vec::new();
        for (name, r) in results {
            match r {
                Ok(r) => rows.extend(r),
                Err(e) if name == "IBCF" => return Err(e),
                Err(e) => {
                    log::error!("cell {name} failed: {e}");
                    failures.push((name, e.to_string()));
                }
            }
        }
        failures.sort();
        self.write_overview(&topic_sets)?;
        EvalReport::from_rows(rows, Algorithm::Ibcf.display_name(), failures)
    }

    /// Topic counts per configuration, plus a copy of each topic file.
    fn write_overview(&self, sets: &[(ConsensusConfig, Result<Vec<TopicsOutput>>)]) -> Result<()> {
        let dir = self.cfg.output_dir.join("topics");
        io(&dir, fs::create_dir_all(&dir))?;
        let mut overview = String::from("weights\tgranularity\ttopics\toverflow_docs\n");
        for (w, r) in sets {
            let Ok(sets) = r else { continue };
            for t in sets {
                let overflow = t.assignment.iter().filter(|(_, c)| *c == crate::hierarchy::OVERFLOW_TOPIC).count();
                overview.push_str(&format!("{}\t{}\t{}\t{}\n", w.label(), t.granularity, t.topic_count(), overflow));
                write_topics(&dir.join(format!("{}_{}.tsv", w.label(), granularity_slug(t.granularity))), &t.topics)?;
            }
        }
        let p = self.cfg.output_dir.join("topics_overview.tsv");
        io(&p, fs::write(&p, overview))
    }

    /// Trains one algorithm on the full log and writes its model dump to `out`.
    pub fn train_and_dump(&self, topics: Option<&TopicsOutput>, algorithm: Algorithm, out: &Path) -> Result<()> {
        io(out, fs::create_dir_all(out))?;
        let ing = self.ingest()?;
        let plan = self.eval_plan(&ing)?;
        let params = self.cfg.model_params();
        let (log, contexts) = match topics {
            Some(t) => (AccessLog::new(plan.pairs, &t.assignment)?, t.assignment.topics()),
            None => (AccessLog::uniform_context(plan.pairs, NO_CONTEXT), vec![NO_CONTEXT.to_string()]),
        };
        let write = |name: &str, text: String| {
            let p = out.join(name);
            io(&p, fs::write(&p, text))
        };
        match algorithm {
            Algorithm::Ibcf => recsys::build_ibcf(&log, params.k)?.write(&out.join("similarity.txt")),
            Algorithm::WeightPof | Algorithm::FilterPof => {
                let mode = match algorithm {
                    Algorithm::WeightPof => PostFilterMode::Weight,
                    _ => PostFilterMode::Filter { tau: params.tau },
                };
                let m = PostFilter {
                    baseline: recsys::build_ibcf(&log, params.k)?,
                    probs: recsys::estimate_context_probability(&log, &contexts, params.lambda)?,
                    mode,
                    pool: params.pof_pool,
                };
                m.baseline.write(&out.join("similarity.txt"))?;
                m.probs.write(&out.join("context_probabilities.tsv"))
            }
            Algorithm::CReduction => {
                let m: CReduction = recsys::train_c_reduction(&log, &contexts, &params.inner, params.k)?;
                m.global.write(&out.join("similarity.txt"))?;
                let seg_dir = out.join("segments");
                io(&seg_dir, fs::create_dir_all(&seg_dir))?;
                for (c, s) in &m.segments {
                    s.write(&seg_dir.join(format!("{c}.txt")))?;
                }
                let mut t = String::from("context\tcases\tf1_segment\tf1_global\tretained\n");
                for s in &m.scores {
                    t.push_str(&format!(
                        "{}\t{}\t{}\t{}\t{}\n",
                        s.context, s.cases, s.f1_segment, s.f1_global, s.retained
                    ));
                }
                write("segments.tsv", t)
            }
            Algorithm::DaviBest => {
                let dims: Vec<ContextDimension> = topics
                    .map(|t| ContextDimension {
                        name: t.granularity.to_string(),
                        assignment: t.assignment.clone(),
                    })
                    .into_iter()
                    .collect();
                let m: DaviBest = recsys::train_davi_best(&log, &dims, &params.inner, params.k)?;
                m.baseline.write(&out.join("similarity.txt"))?;
                let mut t = format!("baseline\t{}\n", m.baseline_map);
                for s in &m.scores {
                    t.push_str(&format!("{}\t{}\n", s.dimension, s.map));
                }
                t.push_str(&format!(
                    "chosen\t{}\n",
                    m.chosen.as_ref().map_or("none", |(d, _)| d.name.as_str())
                ));
                write("selection.tsv", t)
            }
        }
    }
}

/// Output paths of a finished run.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutputs {
    pub table: PathBuf,
    pub summary: PathBuf,
    pub topics_overview: PathBuf,
}

pub fn report_paths(output_dir: &Path) -> RunOutputs {
    RunOutputs {
        table: output_dir.join("report.tsv"),
        summary: output_dir.join("summary.txt"),
        topics_overview: output_dir.join("topics_overview.tsv"),
    }
}

/// Runs every stage and writes `report.tsv` and `summary.txt` to the output
/// directory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<(EvalReport, RunStats)> {
    let p = Pipeline::new(cfg.clone())?;
    let ing = p.ingest()?;
    let ens = p.ensemble(&ing)?;
    let report = p.evaluate(&ing, &ens)?;
    let out = report_paths(&cfg.output_dir);
    report.write(&out.table, &out.summary)?;
    Ok((report, p.stats()))
}

/// Re-aggregates a written table into a report.
pub fn report_from_table(path: &Path) -> Result<EvalReport> {
    EvalReport::from_rows(EvalReport::read_rows(path)?, Algorithm::Ibcf.display_name(), Vec::new())
}

/// `(granularity, topic count)` per weight row, without evaluation.
pub fn topic_counts(p: &Pipeline) -> Result<BTreeMap<String, Vec<(Granularity, usize)>>> {
    let ing = p.ingest()?;
    let ens = p.ensemble(&ing)?;
    let mut out = BTreeMap::new();
    for (w, r) in p.all_topics(&ing, &ens) {
        out.insert(w.label(), r?.iter().map(|t| (t.granularity, t.topic_count())).collect());
    }
    Ok(out)
}
