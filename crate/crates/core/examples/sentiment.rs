//! IDF-weighted verse vectors and a linear SVM for the positive vs.
//! non-positive task.
//!
//! cargo run --example sentiment

use concept_embed::embed::EmbeddingSpace;
use concept_embed::eval::{evaluate_sentiment, idf_table, LabeledVerse, SvmConfig, VerseLabel};

fn main() -> concept_embed::Result<()> {
    let words = ["e:joy", "e:glad", "e:grief", "e:wrath", "e:the", "e:house"];
    let vectors = [
        [1.0, 0.1], [0.9, -0.1], // positive
        [-1.0, 0.2], [-0.8, 0.0], // negative
        [0.0, 1.0], [0.1, -1.0], // neutral
    ];
    let space = EmbeddingSpace::from_rows(words.iter().map(|w| w.to_string()).collect(), 2, vectors.concat())?;
    let verse = |units: &[&str], positive: bool| LabeledVerse {
        units: units.iter().map(|u| u.to_string()).collect(),
        label: VerseLabel {
            positive,
            negative: !positive,
        },
    };
    let train = vec![
        verse(&["e:joy", "e:the"], true),
        verse(&["e:glad", "e:house"], true),
        verse(&["e:grief", "e:the"], false),
        verse(&["e:wrath", "e:house", "e:the"], false),
        verse(&["e:joy", "e:glad"], true),
        verse(&["e:grief", "e:wrath"], false),
    ];
    let test = vec![verse(&["e:glad", "e:the", "e:the"], true), verse(&["e:wrath"], false)];
    let idf = idf_table(train.iter().map(|v| v.units.clone()));
    let result = evaluate_sentiment(&space, &train, &test, &idf, &SvmConfig::default())?;
    println!("positive F1 {:.2}, negative F1 {:.2}", result.positive_f1, result.negative_f1);
    Ok(())
}
