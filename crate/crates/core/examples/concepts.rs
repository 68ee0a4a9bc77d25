//! Dictionary graph over three pivots and three targets, then CLIQUE and
//! N(t) concepts on it.
//!
//! cargo run --release --example concepts

use concept_embed::concepts::{clique_concepts, induce_target_neighborhoods, filter_nt, CliqueParams, NtFilter};
use concept_embed::graph::{AlignmentWeight, DictionaryGraph, Normalization};
use concept_embed::unit::Unit;

fn main() -> concept_embed::Result<()> {
    let mut g = DictionaryGraph::new(["eng", "deu", "fra"], ["eng", "deu", "fra", "spa", "ita", "nld"])?;
    let w = |links| AlignmentWeight {
        links,
        cooccurrences: 10,
        min_df: 10,
    };
    let u = |s: &str| s.parse::<Unit>().expect("edition:surface");
    for (a, b) in [("eng:water", "deu:wasser"), ("eng:water", "fra:eau"), ("deu:wasser", "fra:eau")] {
        g.add_alignment_edge(&u(a), &u(b), w(9))?;
    }
    for (a, b) in [("eng:fire", "deu:feuer"), ("eng:fire", "fra:feu"), ("deu:feuer", "fra:feu")] {
        g.add_alignment_edge(&u(a), &u(b), w(8))?;
    }
    for (p, t) in [
        ("eng:water", "spa:agua"),
        ("deu:wasser", "spa:agua"),
        ("fra:eau", "spa:agua"),
        ("eng:water", "ita:acqua"),
        ("fra:eau", "ita:acqua"),
        ("eng:fire", "nld:vuur"),
        ("deu:feuer", "nld:vuur"),
        ("fra:feu", "nld:vuur"),
    ] {
        g.add_alignment_edge(&u(p), &u(t), w(7))?;
    }

    let adj = g.normalize(Normalization::default())?;
    println!("CLIQUE");
    for c in clique_concepts(&g, &adj, CliqueParams::default())? {
        println!("  {:?} + {:?}", keys(&c.pivot_words), keys(&c.target_units));
    }
    let nt = induce_target_neighborhoods(&g);
    println!("N(t)");
    for c in &nt {
        println!("  {:?} + {:?}", keys(&c.pivot_words), keys(&c.target_units));
    }
    println!("N(t) restricted to connected pivot sets: {}", filter_nt(&nt, &g, NtFilter::Cc).len());
    Ok(())
}

fn keys(units: &[Unit]) -> Vec<String> {
    units.iter().map(Unit::key).collect()
}
