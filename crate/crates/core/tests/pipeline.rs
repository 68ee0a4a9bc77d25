use std::fs;
use std::path::Path;

use concept_embed::pipeline::{Method, Pipeline, PipelineConfig, Representation, Stage, StageOutcome};
use concept_embed::synth::{SynthConfig, SynthCorpus, BASE_EDITION};
use concept_embed::Error;

fn small_corpus(dir: &Path) -> SynthCorpus {
    let corpus = SynthCorpus::generate(&SynthConfig {
        verses: 300,
        ciphers: 3,
        lemmas: 80,
        topics: 4,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    corpus.write_dir(dir, 20).unwrap();
    corpus
}

fn config(dir: &Path, out: &str) -> PipelineConfig {
    let mut c = PipelineConfig::from_toml(
        r#"
        workers = 1
        methods = ["NT", "CLIQUE", "S-ID", "BOW", "RTSIMPLE"]
        sid_epochs = 2

        [corpus]
        pivots = ["base", "c01", "c02"]
        test_verses = 40
        query_edition = "base"

        [pseudocorpus]
        target_size = 100000
        bow_max_bytes = 100000

        [train]
        dim = 16
        epochs = 1
        "#,
    )
    .unwrap();
    c.out_dir = dir.join(out);
    c.corpus.editions_dir = dir.join("editions");
    c.corpus.queries = Some(dir.join("queries.txt"));
    c.corpus.lemmas = Some(dir.join("lemmas.tsv"));
    c.corpus.labels = Some(dir.join("labels.tsv"));
    c
}

#[test]
fn full_run_writes_reports_and_second_run_skips_everything() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let p = Pipeline::new(config(dir.path(), "out"));
    let first = p.run_all().unwrap();
    assert!(first.iter().all(|(_, o)| *o == StageOutcome::Ran));

    let tsv = fs::read_to_string(p.stage_dir(Stage::Report).join("report.tsv")).unwrap();
    let mut lines = tsv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method\tS1_mean\tS1_median\tR1_mean\tR1_median\tS4_mean\tS4_median\tS16_mean\tS16_median\tN\tcoverage\tpos_F1\tneg_F1"
    );
    let methods: Vec<&str> = lines.map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(methods, ["NT", "CLIQUE", "S-ID", "BOW", "RTSIMPLE"]);
    let rt_row = tsv.lines().last().unwrap();
    assert!(rt_row.ends_with("n/a\tn/a"), "RTSIMPLE has no sentiment scores: {rt_row}");

    let results = p.load_results().unwrap();
    let nt = results.iter().find(|r| r.method == Method::Concepts(concept_embed::concepts::ConceptMethod::Nt)).unwrap();
    assert_eq!(nt.queries, 20);
    assert!(nt.sentiment.is_some());
    assert!(nt.settings.iter().all(|s| (0.0..=1.0).contains(&s.mean)));

    let second = p.run_all().unwrap();
    assert!(second.iter().all(|(_, o)| *o == StageOutcome::UpToDate), "{second:?}");
}

#[test]
fn changing_a_stage_config_reruns_only_downstream_stages() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let mut c = config(dir.path(), "out");
    c.methods = vec!["NT".parse().unwrap()];
    Pipeline::new(c.clone()).run_all().unwrap();

    c.train.epochs = 2;
    let outcomes = Pipeline::new(c.clone()).run_all().unwrap();
    for (stage, outcome) in outcomes {
        let expected = if stage >= Stage::Train { StageOutcome::Ran } else { StageOutcome::UpToDate };
        assert_eq!(outcome, expected, "{stage}");
    }

    // A missing output forces its stage to run again.
    let p = Pipeline::new(c);
    fs::remove_file(p.stage_dir(Stage::Graph).join("graph.tsv")).unwrap();
    assert_eq!(p.run_stage(Stage::Graph).unwrap(), StageOutcome::Ran);
}

#[test]
fn stage_without_upstream_output_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let p = Pipeline::new(config(dir.path(), "out"));
    let err = p.run_stage(Stage::Train).unwrap_err();
    assert!(matches!(&err, Error::MissingStage { stage, required } if stage == "train" && required == "corpus"));
    assert!(err.to_string().starts_with("corpus required"), "{err}");
}

#[test]
fn single_worker_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let mut a = config(dir.path(), "a");
    a.methods = vec!["NT".parse().unwrap(), "S-ID".parse().unwrap()];
    let mut b = a.clone();
    b.out_dir = dir.path().join("b");
    Pipeline::new(a.clone()).run_all().unwrap();
    Pipeline::new(b.clone()).run_all().unwrap();
    for rel in ["concepts/nt.tsv", "corpus/nt.txt", "corpus/s-id.txt", "train/nt.vec", "train/s-id.vec", "report/report.tsv"] {
        let x = fs::read(a.out_dir.join(rel)).unwrap();
        let y = fs::read(b.out_dir.join(rel)).unwrap();
        assert!(x == y, "{rel} differs between identical runs");
    }
}

#[test]
fn char_mode_links_ngram_views_to_pivots() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let mut c = config(dir.path(), "out");
    c.corpus.mode = Representation::Char;
    c.methods = vec!["NT".parse().unwrap(), "RTSIMPLE".parse().unwrap()];
    c.chi2.chi_min = 20.0;
    let p = Pipeline::new(c);
    p.run_all().unwrap();

    let loaded = p.load().unwrap();
    let views: Vec<&str> = loaded.record.views.iter().map(|v| v.prefix.as_str()).collect();
    assert!(views.contains(&"base") && views.contains(&"base.char") && views.contains(&"c03"));
    assert!(loaded.record.views.iter().filter(|v| v.prefix != v.edition || !loaded.record.pivots.contains(&v.edition)).all(|v| v.n > 0));

    // χ² dictionaries run from every pivot to every n-gram view but its own.
    let chi2_dir = p.stage_dir(Stage::Chi2);
    assert!(chi2_dir.join("base__c03.tsv").exists());
    assert!(chi2_dir.join("base__c01.char.tsv").exists());
    assert!(!chi2_dir.join("base__base.char.tsv").exists());
    let graph = p.load_graph().unwrap();
    assert!(graph.editions().any(|e| e == "c03"));

    let results = p.load_results().unwrap();
    assert!(results.iter().all(|r| r.queries > 0));
    let space = p.load_space("NT".parse().unwrap()).unwrap().unwrap();
    assert!(space.words().iter().any(|w| w.starts_with(&format!("{BASE_EDITION}.char:"))));
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let mut c = config(dir.path(), "out");
    c.corpus.pivots = vec!["nope".into()];
    let err = Pipeline::new(c).run_stage(Stage::Ingest).unwrap_err();
    assert!(matches!(err, Error::UnknownEdition(e) if e == "nope"));

    let mut c = config(dir.path(), "out2");
    c.corpus.queries = None;
    let p = Pipeline::new(c);
    for s in [Stage::Ingest, Stage::Align, Stage::Chi2, Stage::Graph, Stage::Concepts, Stage::Corpus, Stage::Train] {
        p.run_stage(s).unwrap();
    }
    assert!(matches!(p.run_stage(Stage::Eval), Err(Error::Config(_))));
}
