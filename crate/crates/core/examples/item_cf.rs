//! Item-based collaborative filtering on a toy binary log: similarities,
//! neighbourhoods and a top-N list.
//!
//! cargo run --example item_cf

use topic_context::recsys::{build_ibcf, recommend, AccessLog};

fn main() -> topic_context::Result<()> {
    let pairs = [
        ("ana", "rain"), ("ana", "soil"), ("ana", "clay"),
        ("bia", "rain"), ("bia", "soil"),
        ("caio", "soil"), ("caio", "clay"), ("caio", "drain"),
        ("davi", "cattle"), ("davi", "vaccine"),
        ("eva", "cattle"), ("eva", "herd"), ("eva", "vaccine"),
    ];
    let log = AccessLog::uniform_context(pairs.iter().map(|(u, i)| (u.to_string(), i.to_string())), "all");
    let model = build_ibcf(&log, 4)?;

    for item in model.items() {
        let nb: Vec<String> = model.neighbors(item).iter().map(|(j, s)| format!("{j}:{s:.2}")).collect();
        println!("{item:>8} -> {}", nb.join(" "));
    }
    let observed = vec!["rain".to_string(), "soil".to_string()];
    for (item, score) in recommend(&model, &observed, 5).items {
        println!("recommend {item} ({score:.3})");
    }
    Ok(())
}
