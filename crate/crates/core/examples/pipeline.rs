//! Full run on a generated cipher corpus: writes the corpus and all stage
//! outputs under the given directory and prints the report.
//!
//! cargo run --release --example pipeline -- /tmp/concept-embed-demo

use std::path::PathBuf;

use concept_embed::pipeline::{Pipeline, PipelineConfig, Stage};
use concept_embed::synth::{SynthConfig, SynthCorpus};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("concept-embed-demo"), PathBuf::from);
    let corpus = SynthCorpus::generate(&SynthConfig {
        verses: 1500,
        ciphers: 7,
        drop_rate: 0.1,
        noise_rate: 0.02,
        ..Default::default()
    })?;
    corpus.write_dir(&dir, 100)?;

    let mut config = PipelineConfig::from_toml(
        r#"
        methods = ["NT", "CLIQUE", "S-ID", "BOW", "RTSIMPLE"]
        sid_epochs = 20

        [corpus]
        editions_dir = "editions"
        pivot_count = 5
        test_verses = 150
        query_edition = "base"
        queries = "queries.txt"
        lemmas = "lemmas.tsv"
        labels = "labels.tsv"

        [pseudocorpus]
        target_size = 5000000
        bow_max_bytes = 5000000

        [train]
        dim = 64
        "#,
    )?;
    config.resolve_paths(&dir);

    let pipeline = Pipeline::new(config);
    for (stage, outcome) in pipeline.run_all()? {
        println!("{stage}: {outcome:?}");
    }
    print!("{}", std::fs::read_to_string(pipeline.stage_dir(Stage::Report).join("report.txt"))?);
    Ok(())
}
