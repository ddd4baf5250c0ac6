//! Generates a planted-topic corpus and access log, runs one consensus
//! configuration end to end and prints the MAP summary against IBCF.
//!
//! cargo run --release --example planted_experiment [output_dir]

use std::path::PathBuf;
use std::time::Instant;

use topic_context::config::RunConfig;
use topic_context::ensemble::ConsensusConfig;
use topic_context::hierarchy::Granularity;
use topic_context::pipeline::{run_pipeline, topic_counts, Pipeline};
use topic_context::recsys::Algorithm;
use topic_context::synth::{generate, SynthSpec};

fn main() -> topic_context::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("planted_experiment"));
    let data = generate(&SynthSpec::default());
    let paths = data.write(&out.join("data"))?;

    let mut cfg = RunConfig::default();
    cfg.inputs.corpus = paths.corpus;
    cfg.inputs.named_entities = Some(paths.named_entities);
    cfg.inputs.domain_terms = Some(paths.domain_terms);
    cfg.inputs.log = paths.log;
    cfg.output_dir = out.join("run");
    cfg.weights = vec![ConsensusConfig::new(0.5, 0.25, 0.25)?];

    let started = Instant::now();
    let counts = topic_counts(&Pipeline::new(cfg.clone())?)?;
    for (w, per_g) in &counts {
        for (g, n) in per_g {
            println!("{w} {g}: {n} topics");
        }
    }

    cfg.granularities = vec![Granularity::new(15, 20)?];
    cfg.algorithms = Algorithm::CONTEXTUAL.to_vec();
    let (report, _) = run_pipeline(&cfg)?;
    print!("{}", report.summary());
    println!("elapsed {:.1}s, artifacts in {}", started.elapsed().as_secs_f64(), cfg.output_dir.display());
    Ok(())
}
