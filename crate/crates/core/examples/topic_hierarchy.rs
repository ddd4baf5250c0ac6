//! Builds the topic hierarchy over a hand-made consensus matrix, selects
//! topics at two granularities and attaches an unannotated document.
//!
//! cargo run --example topic_hierarchy

use topic_context::corpus::{build_view_matrix, Corpus, Document, Preprocessor, View};
use topic_context::ensemble::{CoAssocMatrix, MatrixTag};
use topic_context::hierarchy::{agglomerate, label_topics, select_topics, ContextAssignment, Granularity, NearestNeighbors};

fn main() -> topic_context::Result<()> {
    let texts = [
        ("a1", "soil soil moisture clay"),
        ("a2", "soil moisture sensor"),
        ("a3", "clay soil drainage"),
        ("b1", "cattle vaccine herd"),
        ("b2", "herd cattle pasture"),
        ("b3", "vaccine dose cattle"),
    ];
    let mut docs: Vec<Document> = texts.iter().map(|(id, t)| Document::new(*id, *t)).collect();
    docs.push(Document::new("new", "moisture of the soil after rain"));
    let corpus = Corpus::new(docs)?;
    let (technical, _) = build_view_matrix(&corpus, View::Technical, &Preprocessor::default());

    let ids: Vec<String> = texts.iter().map(|(id, _)| id.to_string()).collect();
    #[rustfmt::skip]
    let values = vec![
        1.0, 0.9, 0.7, 0.1, 0.0, 0.1,
        0.9, 1.0, 0.6, 0.0, 0.1, 0.0,
        0.7, 0.6, 1.0, 0.2, 0.1, 0.1,
        0.1, 0.0, 0.2, 1.0, 0.8, 0.9,
        0.0, 0.1, 0.1, 0.8, 1.0, 0.7,
        0.1, 0.0, 0.1, 0.9, 0.7, 1.0,
    ];
    let consensus = CoAssocMatrix::from_dense(ids.clone(), values, MatrixTag::Consensus)?;
    let dendro = agglomerate(&consensus)?;
    for m in dendro.merges() {
        println!("merge {} + {} at {:.3} (size {})", m.a, m.b, m.height, m.size);
    }

    for g in [Granularity::new(3, 3)?, Granularity::new(1, 2)?] {
        let mut topics = select_topics(&dendro, g);
        label_topics(&mut topics, &technical, 3);
        println!("granularity {g}:");
        for t in &topics {
            println!("  {} {:?} labels {:?}", t.topic_id, t.member_ids, t.label_terms);
        }
        let mut assignment = ContextAssignment::from_topics(&topics);
        let index = NearestNeighbors::new(&ids, &technical)?;
        let topic = assignment.insert_incremental(&index, "new", technical.row("new"))?;
        println!("  'new' joins {topic}");
    }
    Ok(())
}
