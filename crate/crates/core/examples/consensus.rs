//! Clusters each view of a synthetic corpus with a k-means ensemble, then
//! combines the co-association matrices for a few weight rows.
//!
//! cargo run --release --example consensus

use topic_context::corpus::{build_view_matrix, Preprocessor, View};
use topic_context::ensemble::{co_association, combine_consensus, default_ensemble_spec, run_base_clusterings, ConsensusConfig};
use topic_context::synth::{generate, SynthSpec};

fn main() -> topic_context::Result<()> {
    let spec = SynthSpec {
        super_topics: 2,
        topics_per_super: 2,
        docs_per_topic: 8,
        annotation_rate: 1.0,
        users: 10,
        ..SynthSpec::default()
    };
    let data = generate(&spec);
    let pre = Preprocessor::default();
    let ids: Vec<String> = data.corpus.ids().map(str::to_string).collect();
    let members = default_ensemble_spec(ids.len(), 5, 1);
    println!("{} documents, {} ensemble members per view", ids.len(), members.len());

    let mut matrices = Vec::new();
    for view in [View::Technical, View::NamedEntity, View::DomainTerm] {
        let (m, _) = build_view_matrix(&data.corpus, view, &pre);
        let parts = run_base_clusterings(&m, &ids, &members)?;
        matrices.push(co_association(&parts, view.into())?);
    }

    // Mean consensus within planted topics versus across them.
    let n = ids.len();
    for w in [ConsensusConfig::new(0.0, 0.0, 0.0)?, ConsensusConfig::new(0.5, 0.25, 0.25)?, ConsensusConfig::new(1.0, 0.5, 0.5)?] {
        let c = combine_consensus(&matrices[0], &matrices[1], &matrices[2], &w)?;
        let (mut inside, mut across, mut ni, mut na) = (0.0, 0.0, 0, 0);
        for i in 0..n {
            for j in i + 1..n {
                if data.planted[&ids[i]] == data.planted[&ids[j]] {
                    inside += c.get(i, j);
                    ni += 1;
                } else {
                    across += c.get(i, j);
                    na += 1;
                }
            }
        }
        println!("{w}: within-topic {:.3}, across {:.3}", inside / ni as f64, across / na as f64);
    }
    Ok(())
}
