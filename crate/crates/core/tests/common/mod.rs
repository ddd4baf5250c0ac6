#![allow(dead_code)]

pub mod oracle;
pub mod ttest_reference;

use std::path::Path;

use topic_context::config::RunConfig;
use topic_context::synth::{generate, SynthSpec};

/// Writes a synthetic dataset under `dir/data` and returns a config reading it.
pub fn synth_config(dir: &Path, spec: &SynthSpec) -> RunConfig {
    let paths = generate(spec).write(&dir.join("data")).expect("write synthetic data");
    let mut cfg = RunConfig::default();
    cfg.inputs.corpus = paths.corpus;
    cfg.inputs.named_entities = Some(paths.named_entities);
    cfg.inputs.domain_terms = Some(paths.domain_terms);
    cfg.inputs.log = paths.log;
    cfg.output_dir = dir.join("run");
    cfg
}

/// Small ChaCha-free generator for fixtures; a plain LCG keeps the oracles
/// independent of the crate's RNG choices.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 42) as f64
    }
}
