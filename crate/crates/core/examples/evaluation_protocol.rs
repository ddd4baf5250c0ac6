//! All-but-one evaluation by hand: user folds, hidden items, MAP@N per fold
//! and a paired t-test between IBCF and Weight PoF.
//!
//! cargo run --release --example evaluation_protocol

use topic_context::eval::{average_precision, eligible_users, make_cases, make_folds, paired_t_test, ActiveContextRule};
use topic_context::hierarchy::ContextAssignment;
use topic_context::recsys::{train, AccessLog, Algorithm, ModelParams, Request};
use topic_context::synth::{generate, SynthSpec};

fn main() -> topic_context::Result<()> {
    let data = generate(&SynthSpec::default());
    let contexts = ContextAssignment::from_pairs(data.planted.clone());
    let log = AccessLog::new(data.log.clone(), &contexts)?;
    let topics = contexts.topics();
    let plan = make_folds(&eligible_users(&log), 7, 10)?;
    println!("{} eligible users, fold sizes {:?}", plan.len(), plan.fold_sizes());

    let n = 10;
    let mut per_alg = vec![Vec::new(), Vec::new()];
    for f in 0..10 {
        let test = plan.fold_users(f);
        let train_log = log.filter(|e| plan.fold_of(&e.user) != Some(f));
        let (cases, _) = make_cases(&test, &log, 11, ActiveContextRule::MostRecent);
        for (slot, algorithm) in [Algorithm::Ibcf, Algorithm::WeightPof].into_iter().enumerate() {
            let model = train(algorithm, &train_log, &topics, &[], &ModelParams::default())?;
            let map = cases
                .iter()
                .map(|c| {
                    let list = model.recommend(&Request {
                        user: &c.user,
                        observed: &c.observed,
                        context: &c.active_context,
                        n,
                    });
                    average_precision(&list, &c.hidden, n)
                })
                .sum::<f64>()
                / cases.len() as f64;
            per_alg[slot].push(map);
        }
        println!("fold {f}: IBCF {:.4}  WeightPoF {:.4}", per_alg[0][f], per_alg[1][f]);
    }
    let t = paired_t_test(&per_alg[1], &per_alg[0])?;
    println!("t = {:.3}, p = {:.4}, significant: {}", t.t, t.p, t.significant);
    Ok(())
}
