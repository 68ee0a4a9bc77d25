//! Word-alignment dictionary between a synthetic text and a token cipher of
//! it. Every frequent word should map to its cipher image.
//!
//! cargo run --release --example align_cipher

use std::collections::BTreeSet;

use concept_embed::align::{induce_alignment_dictionary, EditionPair};
use concept_embed::corpus::{SegmentedEdition, UnitMode};
use concept_embed::synth::{cipher_id, SynthConfig, SynthCorpus, BASE_EDITION};

fn main() -> concept_embed::Result<()> {
    let corpus = SynthCorpus::generate(&SynthConfig {
        verses: 500,
        ciphers: 1,
        ..Default::default()
    })?;
    let view = |id: &str| {
        let ed = corpus.edition(id).expect("generated edition");
        let verses: BTreeSet<_> = ed.verses().keys().cloned().collect();
        SegmentedEdition::new(id, ed, UnitMode::Word, &verses)
    };
    let cipher = cipher_id(1);
    let (base, ciphered) = (view(BASE_EDITION), view(&cipher));
    let dict = induce_alignment_dictionary(EditionPair::new(&base, &ciphered), 5, 2)?;

    let gold = &corpus.ciphers[&cipher];
    let correct = dict
        .edges
        .iter()
        .filter(|e| gold.get(&String::from_utf8_lossy(&e.source.surface).into_owned()).map(String::as_bytes) == Some(&e.target.surface[..]))
        .count();
    println!("{} edges, {} match the cipher", dict.edges.len(), correct);
    for e in dict.edges.iter().take(10) {
        println!("{}\t{}\tlinks={} cooc={}", e.source, e.target, e.count, e.cooccurrences);
    }
    Ok(())
}
