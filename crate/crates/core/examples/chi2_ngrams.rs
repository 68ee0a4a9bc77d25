//! χ² dictionary from pivot words to byte 4-grams of another edition.
//!
//! cargo run --release --example chi2_ngrams

use std::collections::BTreeSet;

use concept_embed::align::EditionPair;
use concept_embed::chi2::{induce_chi2_dictionary, Chi2Params};
use concept_embed::corpus::{SegmentedEdition, UnitMode};
use concept_embed::synth::{cipher_id, SynthConfig, SynthCorpus, BASE_EDITION};

fn main() -> concept_embed::Result<()> {
    let corpus = SynthCorpus::generate(&SynthConfig {
        verses: 1000,
        ciphers: 1,
        ..Default::default()
    })?;
    let cipher = cipher_id(1);
    let verses: BTreeSet<_> = corpus.edition(BASE_EDITION).unwrap().verses().keys().cloned().collect();
    let pivot = SegmentedEdition::new(BASE_EDITION, corpus.edition(BASE_EDITION).unwrap(), UnitMode::Word, &verses);
    let target = SegmentedEdition::new(format!("{cipher}.char"), corpus.edition(&cipher).unwrap(), UnitMode::Char { n: 4 }, &verses);

    let dict = induce_chi2_dictionary(EditionPair::new(&pivot, &target), Chi2Params::default());
    println!("{} selections, {} edges", dict.selections.len(), dict.edges.len());
    // Frequent words come late; the first passes only see rare ones.
    for sel in dict.selections.iter().filter(|s| s.f_max >= 16).take(8) {
        let grams: Vec<String> = sel
            .targets
            .iter()
            .map(|&t| format!("{:?}", String::from_utf8_lossy(target.surface(t))))
            .collect();
        println!(
            "pass {} f_max {:>4} chi2 {:>8.1}  {} -> {}",
            sel.pass,
            sel.f_max,
            sel.chi2,
            String::from_utf8_lossy(pivot.surface(sel.source)),
            grams.join(" ")
        );
    }
    Ok(())
}
