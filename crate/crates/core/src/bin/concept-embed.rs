use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use concept_embed::pipeline::{Pipeline, PipelineConfig, Stage, StageOutcome};
use concept_embed::synth::{SynthConfig, SynthCorpus};

#[derive(Parser)]
#[command(version, about = "Multilingual embeddings from concepts induced over a parallel corpus")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(short, long, global = true, default_value = "concept-embed.toml")]
    config: PathBuf,
    /// Worker threads; overrides the config. 0 uses every core.
    #[arg(short, long, global = true, env = "CONCEPT_EMBED_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load editions, pick pivots, split train/test verses.
    Ingest,
    /// Word alignment dictionaries between pivots and editions.
    Align,
    /// χ² dictionaries between pivot words and n-gram views.
    Chi2,
    /// Assemble the dictionary graph.
    Graph,
    /// Induce concepts for each configured method.
    Concepts,
    /// Write a pseudocorpus for each embedding method.
    Corpus,
    /// Train skip-gram spaces on the pseudocorpora.
    Train,
    /// Roundtrip translation and sentiment evaluation.
    Eval,
    /// Render the comparison tables.
    Report,
    /// Run every stage, skipping those that are up to date.
    Pipeline,
    /// Write a synthetic cipher corpus with queries, lemmas and labels.
    Synth {
        /// Output directory.
        dir: PathBuf,
        #[arg(long, default_value_t = 2000)]
        verses: usize,
        #[arg(long, default_value_t = 11)]
        ciphers: usize,
        #[arg(long, default_value_t = 0.0)]
        drop_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_rate: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Query words to write.
        #[arg(long, default_value_t = 100)]
        queries: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let stage = match cli.command {
        Command::Synth {
            dir,
            verses,
            ciphers,
            drop_rate,
            noise_rate,
            seed,
            queries,
        } => {
            let corpus = SynthCorpus::generate(&SynthConfig {
                verses,
                ciphers,
                drop_rate,
                noise_rate,
                seed,
                ..Default::default()
            })?;
            corpus.write_dir(&dir, queries)?;
            println!("wrote {} editions to {}", corpus.editions.len(), dir.display());
            return Ok(());
        }
        Command::Ingest => Some(Stage::Ingest),
        Command::Align => Some(Stage::Align),
        Command::Chi2 => Some(Stage::Chi2),
        Command::Graph => Some(Stage::Graph),
        Command::Concepts => Some(Stage::Concepts),
        Command::Corpus => Some(Stage::Corpus),
        Command::Train => Some(Stage::Train),
        Command::Eval => Some(Stage::Eval),
        Command::Report => Some(Stage::Report),
        Command::Pipeline => None,
    };
    let mut config = PipelineConfig::load(&cli.config)?;
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    let pipeline = Pipeline::new(config);
    let stages = match stage {
        Some(s) => vec![s],
        None => Stage::ALL.to_vec(),
    };
    for s in stages {
        match pipeline.run_stage(s)? {
            StageOutcome::Ran => eprintln!("{s}: done"),
            StageOutcome::UpToDate => eprintln!("{s}: up to date"),
        }
    }
    if stage.is_none() || stage == Some(Stage::Report) {
        let report = pipeline.stage_dir(Stage::Report).join("report.txt");
        print!("{}", std::fs::read_to_string(&report)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
