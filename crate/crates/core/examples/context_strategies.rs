//! Trains the four context-aware strategies on a planted log where the
//! context of an item is its planted topic, and compares their lists with
//! plain IBCF for one user.
//!
//! cargo run --release --example context_strategies

use topic_context::hierarchy::ContextAssignment;
use topic_context::recsys::{train, AccessLog, Algorithm, ContextDimension, ModelParams, Request};
use topic_context::synth::{generate, SynthSpec};

fn main() -> topic_context::Result<()> {
    let data = generate(&SynthSpec {
        users: 1500,
        ..SynthSpec::default()
    });
    let contexts = ContextAssignment::from_pairs(data.planted.clone());
    let log = AccessLog::new(data.log.clone(), &contexts)?;
    let topics = contexts.topics();
    let dims = [ContextDimension {
        name: "planted".into(),
        assignment: contexts.clone(),
    }];
    let params = ModelParams::default();

    let histories = log.histories();
    let (user, items) = histories.iter().find(|(_, h)| h.len() >= 3).expect("a user with three accesses");
    let observed: Vec<String> = items.iter().map(|s| s.to_string()).collect();
    let context = contexts.get(&observed[observed.len() - 1]).expect("assigned");
    println!("user {user}, observed {observed:?}, active context {context}");

    for algorithm in Algorithm::ALL {
        let model = train(algorithm, &log, &topics, &dims, &params)?;
        let list = model.recommend(&Request {
            user,
            observed: &observed,
            context,
            n: 5,
        });
        let shown: Vec<String> = list
            .items
            .iter()
            .map(|(i, s)| format!("{i}[{}]:{s:.3}", contexts.get(i).unwrap_or("?")))
            .collect();
        println!("{:>12}: {}", algorithm.display_name(), shown.join(" "));
    }
    Ok(())
}
