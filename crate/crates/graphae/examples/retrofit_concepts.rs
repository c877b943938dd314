//! Place ontology concepts in a word-vector space.
//!
//! Multi-word tags get the average of their word vectors; tags
//! with no known word start empty. Retrofitting pulls each concept towards
//! its ontology neighbours, which also gives the empty ones a position.

use graphae::retrofit::{annotation_scores, retrofit, Composition, ConceptSpace, Relation, RelationKind, WordVectors};

const WORDS: &str = "fever\t0.9 0.1 0.0\nhigh\t0.2 0.2 0.2\ncough\t0.1 0.9 0.0\ndry\t0.1 0.3 0.1\nrash\t0.0 0.1 0.9\nskin\t0.1 0.0 0.7\n";

fn main() -> graphae::Result<()> {
    let words = WordVectors::read(WORDS.as_bytes())?;
    let tags: Vec<String> = ["high fever", "dry cough", "skin rash", "influenza", "measles", "pyrexia"].map(String::from).to_vec();
    let initial = words.compose_tags(&tags, Composition::Avg)?;
    let known: Vec<bool> = initial.rows().into_iter().map(|r| r.iter().any(|&v| v != 0.0)).collect();

    let rel = |source, target, kind| Relation { source, target, kind, weight: None };
    let relations = vec![
        rel(3, 0, RelationKind::Related),
        rel(3, 1, RelationKind::Related),
        rel(4, 0, RelationKind::Related),
        rel(4, 2, RelationKind::Related),
        rel(5, 0, RelationKind::Equivalence),
    ];
    let space = ConceptSpace::new(tags.clone(), initial, known, relations)?;
    let q = retrofit(&space, 1000, 1e-9)?;
    for (tag, row) in tags.iter().zip(q.rows()) {
        println!("{tag:<11} {:.3} {:.3} {:.3}", row[0], row[1], row[2]);
    }

    let sources = [space.index_of("high fever").unwrap(), space.index_of("skin rash").unwrap()];
    let targets = [space.index_of("influenza").unwrap(), space.index_of("measles").unwrap()];
    let scores = annotation_scores(&sources, &targets, &q)?;
    println!("patient with fever and rash: influenza {:.3}, measles {:.3}", scores[0], scores[1]);
    Ok(())
}
