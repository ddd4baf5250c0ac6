//! Declarative run configuration (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{default_weight_grid, ConsensusConfig};
use crate::error::{Error, Result};
use crate::eval::ActiveContextRule;
use crate::hierarchy::Granularity;
use crate::recsys::{Algorithm, InnerSplit, ModelParams, DEFAULT_K, DEFAULT_TAU};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    /// Documents, JSON lines or `doc_id<TAB>text`.
    pub corpus: PathBuf,
    pub named_entities: Option<PathBuf>,
    pub domain_terms: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// `user<TAB>item` access log.
    pub log: PathBuf,
}

impl Default for InputPaths {
    fn default() -> Self {
        InputPaths {
            corpus: "corpus.tsv".into(),
            named_entities: None,
            domain_terms: None,
            stopwords: None,
            log: "log.tsv".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSettings {
    /// Restarts per k, for k = 2..=⌈√n⌉.
    pub seeds_per_k: usize,
    pub seed: u64,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings { seeds_per_k: 5, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub folds: u64,
    pub cases: u64,
    pub inner: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            folds: 7,
            cases: 11,
            inner: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub output_dir: PathBuf,
    pub ensemble: EnsembleSettings,
    pub weights: Vec<ConsensusConfig>,
    pub granularities: Vec<Granularity>,
    /// Contextual algorithms; IBCF always runs as the baseline.
    pub algorithms: Vec<Algorithm>,
    pub k: usize,
    pub tau: f64,
    /// Laplace smoothing of the context probabilities.
    pub lambda: f64,
    pub n_values: Vec<usize>,
    pub folds: usize,
    pub seeds: Seeds,
    pub label_terms: usize,
    pub active_context: ActiveContextRule,
    pub validation_fraction: f64,
    /// List length of the inner selection metric of C. Reduction and DaVI-BEST.
    pub inner_n: usize,
    pub pof_pool: Option<usize>,
    /// Let DaVI-BEST choose among every granularity rather than only the
    /// cell's own.
    pub davi_all_granularities: bool,
    /// Worker threads; the rayon default when absent.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: InputPaths::default(),
            output_dir: "out".into(),
            ensemble: EnsembleSettings::default(),
            weights: default_weight_grid(),
            granularities: Granularity::defaults(),
            algorithms: Algorithm::CONTEXTUAL.to_vec(),
            k: DEFAULT_K,
            tau: DEFAULT_TAU,
            lambda: 1.0,
            n_values: vec![5, 10],
            folds: crate::eval::DEFAULT_FOLDS,
            seeds: Seeds::default(),
            label_terms: 5,
            active_context: ActiveContextRule::MostRecent,
            validation_fraction: 0.2,
            inner_n: 10,
            pof_pool: None,
            davi_all_granularities: false,
            workers: None,
        }
    }
}

impl RunConfig {
    /// Parses TOML; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.inputs.corpus);
        fix(&mut self.inputs.log);
        fix(&mut self.output_dir);
        for p in [
            &mut self.inputs.named_entities,
            &mut self.inputs.domain_terms,
            &mut self.inputs.stopwords,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            k: self.k,
            tau: self.tau,
            lambda: self.lambda,
            inner: InnerSplit {
                validation_fraction: self.validation_fraction,
                seed: self.seeds.inner,
                n: self.inner_n,
            },
            pof_pool: self.pof_pool,
        }
    }
}

/// Every violated invariant, in a stable order.
pub fn validate_config(cfg: &RunConfig) -> std::result::Result<(), Vec<String>> {
    let mut v = Vec::new();
    let mut must_exist = |what: &str, p: &Path| {
        if !p.is_file() {
            v.push(format!("{what} {} does not exist", p.display()));
        }
    };
    must_exist("corpus", &cfg.inputs.corpus);
    must_exist("log", &cfg.inputs.log);
    if let Some(p) = &cfg.inputs.named_entities {
        must_exist("named-entity file", p);
    }
    if let Some(p) = &cfg.inputs.domain_terms {
        must_exist("domain-term file", p);
    }
    if let Some(p) = &cfg.inputs.stopwords {
        must_exist("stopword file", p);
    }
    v.extend(config_violations(cfg));
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Violations that do not depend on the file system.
pub fn config_violations(cfg: &RunConfig) -> Vec<String> {
    let mut v = Vec::new();
    if cfg.weights.is_empty() {
        v.push("weight grid is empty".to_string());
    }
    for (i, w) in cfg.weights.iter().enumerate() {
        v.extend(w.violations().into_iter().map(|m| format!("weights[{i}]: {m}")));
    }
    if cfg.granularities.is_empty() {
        v.push("no granularities".to_string());
    }
    for (i, g) in cfg.granularities.iter().enumerate() {
        v.extend(g.violations().into_iter().map(|m| format!("granularities[{i}]: {m}")));
    }
    if cfg.ensemble.seeds_per_k == 0 {
        v.push("ensemble.seeds_per_k must be positive".to_string());
    }
    if cfg.k == 0 {
        v.push("k must be positive".to_string());
    }
    if !(0.0..=1.0).contains(&cfg.tau) {
        v.push(format!("tau={} outside [0,1]", cfg.tau));
    }
    if !(cfg.lambda > 0.0) {
        v.push(format!("lambda={} must be positive", cfg.lambda));
    }
    if cfg.n_values.is_empty() || cfg.n_values.contains(&0) {
        v.push("n_values must be non-empty and positive".to_string());
    }
    if cfg.folds < 2 {
        v.push(format!("folds={} must be at least 2", cfg.folds));
    }
    if cfg.label_terms == 0 {
        v.push("label_terms must be positive".to_string());
    }
    if !(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0) {
        v.push(format!("validation_fraction={} outside (0,1)", cfg.validation_fraction));
    }
    if cfg.inner_n == 0 {
        v.push("inner_n must be positive".to_string());
    }
    if cfg.pof_pool == Some(0) {
        v.push("pof_pool must be positive".to_string());
    }
    if cfg.workers == Some(0) {
        v.push("workers must be positive".to_string());
    }
    v
}
