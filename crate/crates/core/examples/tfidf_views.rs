//! Builds the three TF-IDF views of a tiny annotated corpus and prints the
//! privileged split.
//!
//! cargo run --example tfidf_views

use topic_context::corpus::{build_view_matrix, split_privileged, Corpus, Document, Preprocessor, View};

fn main() -> topic_context::Result<()> {
    let corpus = Corpus::new(vec![
        Document::new("p1", "Soil moisture and irrigation of soybean fields").with_annotations(
            &["Embrapa", "Mato Grosso"],
            &["soil moisture", "irrigation"],
        ),
        Document::new("p2", "Soybean prices rise in Mato Grosso").with_annotations(&["Mato Grosso"], &["soybean price"]),
        Document::new("p3", "Cattle vaccination campaign").with_annotations(&["Ministry of Agriculture"], &["vaccination"]),
        Document::new("p4", "Irrigation credit for small farms"),
    ])?;
    let pre = Preprocessor::with_stopwords(["and", "of", "in", "for"]);

    for view in [View::Technical, View::NamedEntity, View::DomainTerm] {
        let (m, skipped) = build_view_matrix(&corpus, view, &pre);
        println!("{view}: {} rows x {} terms", m.len(), m.vocabulary.len());
        for (id, row) in m.row_ids.iter().zip(&m.rows) {
            let terms: Vec<String> = row.iter().map(|&(j, v)| format!("{}={v:.3}", m.vocabulary[j])).collect();
            println!("  {id}: {}", terms.join(" "));
        }
        if !skipped.is_empty() {
            print!("{}", skipped.encode());
        }
    }

    let split = split_privileged(&corpus)?;
    println!("privileged {:?}, remainder {:?}", split.privileged, split.remainder);
    Ok(())
}
