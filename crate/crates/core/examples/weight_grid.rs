//! Runs the pipeline from a TOML configuration over a small weight grid,
//! then reruns it to show that every stage is served from the cache.
//!
//! cargo run --release --example weight_grid [output_dir]

use std::path::PathBuf;

use topic_context::config::RunConfig;
use topic_context::pipeline::run_pipeline;
use topic_context::synth::{generate, SynthSpec};

fn main() -> topic_context::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("weight_grid"));
    let paths = generate(&SynthSpec::default()).write(&out.join("data"))?;
    let text = format!(
        r#"
output_dir = "run"
algorithms = ["c_reduction", "weight_pof"]
n_values = [5, 10]

[inputs]
corpus = "{}"
named_entities = "{}"
domain_terms = "{}"
log = "{}"

[[weights]]
alpha = 0.0
beta = 0.0
theta = 0.0

[[weights]]
alpha = 0.5
beta = 0.25
theta = 0.25

[[granularities]]
min_items = 15
max_items = 20
"#,
        paths.corpus.display(),
        paths.named_entities.display(),
        paths.domain_terms.display(),
        paths.log.display()
    );
    let cfg_path = out.join("run.toml");
    std::fs::write(&cfg_path, text).map_err(|e| topic_context::Error::Config(e.to_string()))?;
    let cfg = RunConfig::load(&cfg_path)?;

    let (report, first) = run_pipeline(&cfg)?;
    print!("{}", report.summary());
    println!("first run computed {} stages", first.computed.len());
    let (_, second) = run_pipeline(&cfg)?;
    println!("second run: {} computed, {} cached", second.computed.len(), second.cached.len());
    Ok(())
}
