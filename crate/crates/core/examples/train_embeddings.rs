//! Skip-gram training on a concept pseudocorpus: units listed in the same
//! concept end up as nearest neighbours across editions.
//!
//! cargo run --release --example train_embeddings

use concept_embed::embed::{train_sgns, TrainConfig, TrainingCorpus};

fn main() -> concept_embed::Result<()> {
    let concepts = [
        ["eng:water", "deu:wasser", "fra:eau", "spa:agua"],
        ["eng:fire", "deu:feuer", "fra:feu", "spa:fuego"],
        ["eng:earth", "deu:erde", "fra:terre", "spa:tierra"],
        ["eng:air", "deu:luft", "fra:air", "spa:aire"],
    ];
    // Each concept becomes many shuffled lines, as the concept corpus does.
    let mut lines = Vec::new();
    for i in 0..400 {
        let c = &concepts[i % concepts.len()];
        let mut line: Vec<&str> = c.to_vec();
        line.rotate_left(i % c.len());
        lines.push(line.join(" "));
    }
    let corpus = TrainingCorpus::from_lines(&lines, 1)?;
    let config = TrainConfig {
        dim: 20,
        epochs: 10,
        subsample: 0.0,
        ..Default::default()
    };
    let (space, report) = train_sgns(&corpus, &config)?;
    println!("loss per epoch: {:?}", report.epoch_losses.iter().map(|l| format!("{l:.3}")).collect::<Vec<_>>());
    for q in ["eng:water", "eng:fire", "eng:earth"] {
        let nn = space.nearest_neighbors(q, "spa", 1)?;
        println!("{q} -> {} ({:.3})", nn[0].0, nn[0].1);
    }
    Ok(())
}
