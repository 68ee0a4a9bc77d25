//! Resumable end-to-end runs driven by one TOML config.
//!
//! Each stage writes into `<out_dir>/<stage>/` and finishes by writing a
//! `manifest.json` that records a key hashed from the stage's config, its
//! upstream keys and (for ingest) the input files. A stage whose key is
//! unchanged and whose outputs are all present is skipped.

mod config;
mod report;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{induce_alignment_dictionary, AlignmentEdgeSet, EditionPair};
use crate::chi2::{induce_chi2_dictionary, Chi2Dictionary};
use crate::concepts::{
    clique_concepts, filter_nt, induce_sample_concepts, induce_target_neighborhoods, read_concepts, write_concepts,
    ConceptMethod, NtFilter,
};
use crate::corpus::{
    base_edition, load_edition, median_byte_size, select_ngram_order, select_pivots, split_train_test, Edition,
    ParallelCorpus, SegmentedEdition, Split, UnitMode, VerseId, CHAR_VIEW_SUFFIX,
};
use crate::embed::{train_sgns, EmbeddingSpace, TrainConfig, TrainingCorpus};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_roundtrip, evaluate_sentiment, idf_table, read_labels, read_queries, rtsimple, target_editions,
    CharCounts, LabeledVerse, LemmaTable, QuerySet, RoundtripReport, Setting, SvmConfig,
};
use crate::graph::DictionaryGraph;
use crate::pseudocorpus::{
    emit_bow_corpus, emit_concept_corpus, emit_sid_corpus, keeps_hapaxes, unit_frequencies, CorpusSpec,
};
use crate::seed::derive_seed;

pub use config::{
    AlignConfig, Chi2Config, ConceptConfig, CorpusConfig, EvalConfig, GraphConfig, Method, PipelineConfig,
    PseudocorpusConfig, Representation,
};
pub use report::{render_report, EditionTable, MethodResult, ReportTables, SentimentScores, SettingScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Align,
    Chi2,
    Graph,
    Concepts,
    Corpus,
    Train,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Align,
        Stage::Chi2,
        Stage::Graph,
        Stage::Concepts,
        Stage::Corpus,
        Stage::Train,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Align => "align",
            Stage::Chi2 => "chi2",
            Stage::Graph => "graph",
            Stage::Concepts => "concepts",
            Stage::Corpus => "corpus",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this stage reads.
    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Align | Stage::Chi2 => &[Stage::Ingest],
            Stage::Graph => &[Stage::Ingest, Stage::Align, Stage::Chi2],
            Stage::Concepts => &[Stage::Ingest, Stage::Graph],
            Stage::Corpus => &[Stage::Ingest, Stage::Concepts],
            Stage::Train => &[Stage::Corpus],
            Stage::Eval => &[Stage::Ingest, Stage::Graph, Stage::Train],
            Stage::Report => &[Stage::Eval],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    stage: String,
    key: String,
    outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    UpToDate,
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config serializes")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_file(path: &Path) -> Result<String> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&data)))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let tmp = path.with_file_name(format!(
        "{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    let run = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
        drop(w);
        fs::rename(&tmp, path)
    };
    run().map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn with_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| in_file(path, e))
}

fn in_file(path: &Path, e: Error) -> Error {
    crate::tsv::with_path(e, path)
}

/// One unit view of the corpus: an edition under a prefix and a mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub prefix: String,
    pub edition: String,
    /// 0 for WORD, else the n-gram order.
    pub n: usize,
}

impl ViewSpec {
    pub fn mode(&self) -> UnitMode {
        if self.n == 0 {
            UnitMode::Word
        } else {
            UnitMode::Char { n: self.n }
        }
    }
}

/// What ingest decided: sources, pivots, split and unit views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRecord {
    pub editions: Vec<(String, PathBuf)>,
    pub pivots: Vec<String>,
    pub views: Vec<ViewSpec>,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Loaded corpus plus the per-view segmentation of the training verses.
pub struct Loaded {
    pub record: IngestRecord,
    pub corpus: ParallelCorpus,
    pub views: Vec<SegmentedEdition>,
}

impl Loaded {
    pub fn view(&self, prefix: &str) -> Option<&SegmentedEdition> {
        self.views.iter().find(|v| v.prefix == prefix)
    }

    pub fn pivot_set(&self) -> BTreeSet<String> {
        self.record.pivots.iter().cloned().collect()
    }
}

/// Runs stages of one configured pipeline.
pub struct Pipeline {
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Pipeline { config }
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.config.out_dir.join(stage.name())
    }

    fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("manifest.json")
    }

    fn read_manifest(&self, stage: Stage) -> Option<Manifest> {
        let data = fs::read(self.manifest_path(stage)).ok()?;
        serde_json::from_slice(&data).ok()
    }

    fn config_slice(&self, stage: Stage) -> serde_json::Value {
        let c = &self.config;
        let methods = c.sorted_methods();
        match stage {
            Stage::Ingest => serde_json::json!({ "seed": c.seed, "corpus": json(&c.corpus) }),
            Stage::Align => json(&c.align),
            Stage::Chi2 => json(&c.chi2),
            Stage::Graph => json(&c.graph),
            Stage::Concepts => serde_json::json!({ "concepts": json(&c.concepts), "methods": json(&methods) }),
            Stage::Corpus => serde_json::json!({ "pseudocorpus": json(&c.pseudocorpus), "methods": json(&methods) }),
            Stage::Train => serde_json::json!({
                "train": json(&c.train),
                "sid_epochs": c.sid_epochs,
                "methods": json(&methods),
                // Concurrent updates make the vectors depend on the worker count.
                "workers": c.effective_workers(),
            }),
            Stage::Eval => serde_json::json!({ "eval": json(&c.eval), "methods": json(&methods) }),
            Stage::Report => json(&methods),
        }
    }

    fn stage_key(&self, stage: Stage) -> Result<String> {
        let mut h = Sha256::new();
        h.update(stage.name().as_bytes());
        h.update(self.config_slice(stage).to_string().as_bytes());
        for &up in stage.upstream() {
            let m = self.read_manifest(up).ok_or_else(|| Error::MissingStage {
                stage: stage.name().into(),
                required: up.name().into(),
            })?;
            h.update(m.key.as_bytes());
        }
        if stage == Stage::Ingest {
            for (_, path) in self.edition_sources()? {
                h.update(sha256_file(&path)?.as_bytes());
            }
            let c = &self.config.corpus;
            for p in [&c.queries, &c.lemmas, &c.labels].into_iter().flatten() {
                h.update(sha256_file(p)?.as_bytes());
            }
        }
        Ok(hex(&h.finalize()))
    }

    /// Runs one stage unless its manifest shows it is up to date.
    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        let key = self.stage_key(stage)?;
        let dir = self.stage_dir(stage);
        if let Some(m) = self.read_manifest(stage) {
            if m.key == key && m.outputs.iter().all(|o| dir.join(o).exists()) {
                log::info!("{stage}: up to date");
                return Ok(StageOutcome::UpToDate);
            }
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let manifest = self.manifest_path(stage);
        if manifest.exists() {
            fs::remove_file(&manifest).map_err(|e| Error::io(&manifest, e))?;
        }
        log::info!("{stage}: running");
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.effective_workers())
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let outputs = pool.install(|| match stage {
            Stage::Ingest => self.ingest(),
            Stage::Align => self.align(),
            Stage::Chi2 => self.chi2(),
            Stage::Graph => self.graph(),
            Stage::Concepts => self.concepts(),
            Stage::Corpus => self.pseudocorpus(),
            Stage::Train => self.train(),
            Stage::Eval => self.eval(),
            Stage::Report => self.report(),
        })?;
        let m = Manifest {
            stage: stage.name().into(),
            key,
            outputs,
        };
        write_atomic(&manifest, |w| {
            serde_json::to_writer_pretty(&mut *w, &m)?;
            writeln!(w)
        })?;
        Ok(StageOutcome::Ran)
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<Vec<(Stage, StageOutcome)>> {
        Stage::ALL.iter().map(|&s| Ok((s, self.run_stage(s)?))).collect()
    }

    fn edition_sources(&self) -> Result<Vec<(String, PathBuf)>> {
        let c = &self.config.corpus;
        let dir = &c.editions_dir;
        let mut out = Vec::new();
        if c.editions.is_empty() {
            let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            for entry in entries {
                let path = entry.map_err(|e| Error::io(dir, e))?.path();
                if path.extension().is_some_and(|x| x == "txt") {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        out.push((stem.to_string(), path.clone()));
                    }
                }
            }
        } else {
            for id in &c.editions {
                out.push((id.clone(), dir.join(format!("{id}.txt"))));
            }
        }
        out.sort();
        if out.is_empty() {
            return Err(Error::Config(format!("no editions found in {}", dir.display())));
        }
        Ok(out)
    }

    fn ingest(&self) -> Result<Vec<String>> {
        let c = &self.config.corpus;
        let sources = self.edition_sources()?;
        let mut editions = Vec::with_capacity(sources.len());
        for (id, path) in &sources {
            let loaded = load_edition(path, id)?;
            if !loaded.skipped_lines.is_empty() {
                log::warn!("{id}: skipped {} malformed lines", loaded.skipped_lines.len());
            }
            editions.push(loaded.edition);
        }
        let pivots = if c.pivots.is_empty() {
            select_pivots(&editions, c.pivot_count, c.pivot_sample, derive_seed(self.config.seed, "pivots"))?
        } else {
            c.pivots.clone()
        };
        for p in &pivots {
            if !editions.iter().any(|e| e.id() == p) {
                return Err(Error::UnknownEdition(p.clone()));
            }
        }
        if !editions.iter().any(|e| e.id() == c.query_edition) {
            return Err(Error::UnknownEdition(c.query_edition.clone()));
        }
        let views = self.plan_views(&editions, &pivots);
        let split = split_train_test(&editions, c.test_verses, derive_seed(self.config.seed, "split"))?;
        let record = IngestRecord {
            editions: sources,
            pivots,
            views,
            train: split.train.iter().map(|v| v.to_string()).collect(),
            test: split.test.iter().map(|v| v.to_string()).collect(),
        };
        let path = self.stage_dir(Stage::Ingest).join("corpus.json");
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &record)?;
            writeln!(w)
        })?;
        Ok(vec!["corpus.json".into()])
    }

    fn plan_views(&self, editions: &[Edition], pivots: &[String]) -> Vec<ViewSpec> {
        let c = &self.config.corpus;
        let is_pivot = |id: &str| pivots.iter().any(|p| p == id);
        let mut views = Vec::new();
        for p in pivots {
            views.push(ViewSpec {
                prefix: p.clone(),
                edition: p.clone(),
                n: 0,
            });
        }
        let median = median_byte_size(editions).max(1);
        for e in editions {
            let n = match c.mode {
                Representation::Word => 0,
                Representation::Char => c
                    .ngram_orders
                    .get(e.id())
                    .copied()
                    .unwrap_or_else(|| select_ngram_order(e.byte_size(), median)),
            };
            if is_pivot(e.id()) && n == 0 {
                continue;
            }
            let prefix = if is_pivot(e.id()) {
                format!("{}{CHAR_VIEW_SUFFIX}", e.id())
            } else {
                e.id().to_string()
            };
            views.push(ViewSpec {
                prefix,
                edition: e.id().to_string(),
                n,
            });
        }
        views
    }

    pub fn load(&self) -> Result<Loaded> {
        let path = self.stage_dir(Stage::Ingest).join("corpus.json");
        let record: IngestRecord =
            serde_json::from_reader(open(&path)?).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line(),
                reason: e.to_string(),
            })?;
        let mut editions = Vec::new();
        for (id, p) in &record.editions {
            editions.push(load_edition(p, id)?.edition);
        }
        let ids = |v: &[String]| -> Result<BTreeSet<VerseId>> { v.iter().map(|s| VerseId::new(s.as_str())).collect() };
        let split = Split {
            train: ids(&record.train)?,
            test: ids(&record.test)?,
        };
        let corpus = ParallelCorpus::new(editions, record.pivots.clone(), split)?;
        let views = record
            .views
            .par_iter()
            .map(|v| {
                let e = corpus.edition(&v.edition).ok_or_else(|| Error::UnknownEdition(v.edition.clone()))?;
                Ok(SegmentedEdition::new(v.prefix.clone(), e, v.mode(), &corpus.train_ids))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Loaded { record, corpus, views })
    }

    /// Word-alignment pairs: every pivot with every other WORD view, each
    /// unordered pivot pair once.
    fn alignment_pairs(&self, loaded: &Loaded) -> Vec<(String, String)> {
        let pivots = &loaded.record.pivots;
        let mut pairs = Vec::new();
        for (i, p) in pivots.iter().enumerate() {
            for v in &loaded.record.views {
                if v.n != 0 || &v.prefix == p {
                    continue;
                }
                if let Some(j) = pivots.iter().position(|q| q == &v.prefix) {
                    if j < i {
                        continue;
                    }
                }
                pairs.push((p.clone(), v.prefix.clone()));
            }
        }
        pairs
    }

    /// χ² pairs: every pivot with every CHAR view except its own.
    fn chi2_pairs(&self, loaded: &Loaded) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        for p in &loaded.record.pivots {
            for v in &loaded.record.views {
                if v.n != 0 && base_edition(&v.prefix) != p {
                    pairs.push((p.clone(), v.prefix.clone()));
                }
            }
        }
        pairs
    }

    fn align(&self) -> Result<Vec<String>> {
        let loaded = self.load()?;
        let dir = self.stage_dir(Stage::Align);
        let cfg = self.config.align;
        let pairs = self.alignment_pairs(&loaded);
        let outputs = pairs
            .par_iter()
            .map(|(s, t)| {
                let pair = EditionPair::new(loaded.view(s).expect("view"), loaded.view(t).expect("view"));
                let dict = induce_alignment_dictionary(pair, cfg.iterations, cfg.min_count)?;
                let stem = format!("{s}__{t}");
                write_atomic(&dir.join(format!("{stem}.tsv")), |w| dict.write_tsv(w))?;
                write_atomic(&dir.join(format!("{stem}.cooc.tsv")), |w| dict.write_cooccurrence_tsv(w))?;
                log::debug!("align {s} -> {t}: {} edges", dict.edges.len());
                Ok(vec![format!("{stem}.tsv"), format!("{stem}.cooc.tsv")])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(outputs.into_iter().flatten().collect())
    }

    fn chi2(&self) -> Result<Vec<String>> {
        let loaded = self.load()?;
        let dir = self.stage_dir(Stage::Chi2);
        let params = self.config.chi2.into();
        let outputs = self
            .chi2_pairs(&loaded)
            .par_iter()
            .map(|(s, t)| {
                let pair = EditionPair::new(loaded.view(s).expect("view"), loaded.view(t).expect("view"));
                let dict = induce_chi2_dictionary(pair, params);
                let name = format!("{s}__{t}.tsv");
                write_atomic(&dir.join(&name), |w| dict.write_tsv(w))?;
                log::debug!("chi2 {s} -> {t}: {} edges", dict.edges.len());
                Ok(name)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(outputs)
    }

    fn graph(&self) -> Result<Vec<String>> {
        let loaded = self.load()?;
        let adir = self.stage_dir(Stage::Align);
        let cdir = self.stage_dir(Stage::Chi2);
        let mut alignment = Vec::new();
        for (s, t) in self.alignment_pairs(&loaded) {
            let stem = format!("{s}__{t}");
            let dp = adir.join(format!("{stem}.tsv"));
            let cp = adir.join(format!("{stem}.cooc.tsv"));
            alignment.push(with_file(&dp, AlignmentEdgeSet::read_tsv(&s, &t, open(&dp)?, Some(open(&cp)?)))?);
        }
        let mut chi2 = Vec::new();
        for (s, t) in self.chi2_pairs(&loaded) {
            let p = cdir.join(format!("{s}__{t}.tsv"));
            chi2.push(with_file(&p, Chi2Dictionary::read_tsv(&s, &t, open(&p)?))?);
        }
        let editions: Vec<String> = loaded.record.views.iter().map(|v| v.prefix.clone()).collect();
        let graph = DictionaryGraph::assemble(&loaded.record.pivots, &editions, &alignment, &chi2)?;
        log::info!("graph: {} nodes, {} edges", graph.node_count(), graph.edge_count());
        write_atomic(&self.stage_dir(Stage::Graph).join("graph.tsv"), |w| graph.write(w))?;
        Ok(vec!["graph.tsv".into()])
    }

    pub fn load_graph(&self) -> Result<DictionaryGraph> {
        let p = self.stage_dir(Stage::Graph).join("graph.tsv");
        with_file(&p, DictionaryGraph::read(open(&p)?))
    }

    fn concept_methods(&self) -> Vec<ConceptMethod> {
        self.config
            .sorted_methods()
            .into_iter()
            .filter_map(|m| match m {
                Method::Concepts(c) => Some(c),
                _ => None,
            })
            .collect()
    }

    fn concepts(&self) -> Result<Vec<String>> {
        let methods = self.concept_methods();
        if methods.is_empty() {
            return Ok(Vec::new());
        }
        let loaded = self.load()?;
        let graph = self.load_graph()?;
        let cfg = self.config.concepts;
        let nt = if methods.iter().any(|m| matches!(m, ConceptMethod::Nt | ConceptMethod::NtCc | ConceptMethod::NtClique | ConceptMethod::NtEdge)) {
            induce_target_neighborhoods(&graph)
        } else {
            Vec::new()
        };
        let mut outputs = Vec::new();
        for m in methods {
            let concepts = match m {
                ConceptMethod::Clique => {
                    let adj = graph.normalize(self.config.graph.normalization)?;
                    clique_concepts(&graph, &adj, cfg.clique_params())?
                }
                ConceptMethod::Nt => nt.clone(),
                ConceptMethod::NtCc => filter_nt(&nt, &graph, NtFilter::Cc),
                ConceptMethod::NtClique => filter_nt(&nt, &graph, NtFilter::Clique),
                ConceptMethod::NtEdge => filter_nt(&nt, &graph, NtFilter::Edge),
                ConceptMethod::Sample => {
                    let train: Vec<VerseId> = loaded.corpus.train_ids.iter().cloned().collect();
                    induce_sample_concepts(
                        &loaded.views,
                        &loaded.pivot_set(),
                        &train,
                        cfg.samples,
                        derive_seed(self.config.seed, "sample"),
                    )
                }
            };
            log::info!("concepts {m}: {}", concepts.len());
            let name = format!("{}.tsv", Method::Concepts(m).file_stem());
            write_atomic(&self.stage_dir(Stage::Concepts).join(&name), |w| write_concepts(&concepts, w))?;
            outputs.push(name);
        }
        Ok(outputs)
    }

    fn pseudocorpus(&self) -> Result<Vec<String>> {
        let loaded = self.load()?;
        let pc = self.config.pseudocorpus;
        let freq = unit_frequencies(&loaded.views);
        let dir = self.stage_dir(Stage::Corpus);
        let mut outputs = Vec::new();
        for m in self.config.sorted_methods().into_iter().filter(|m| m.is_embedding()) {
            let name = format!("{}.txt", m.file_stem());
            let path = dir.join(&name);
            let seed = derive_seed(self.config.seed, &format!("corpus/{}", m.file_stem()));
            let train = &loaded.corpus.train_ids;
            let mut stats = Default::default();
            match m {
                Method::Concepts(cm) => {
                    let cp = self.stage_dir(Stage::Concepts).join(format!("{}.tsv", m.file_stem()));
                    let concepts = with_file(&cp, read_concepts(open(&cp)?))?;
                    let spec = CorpusSpec {
                        target_size: pc.target_size,
                        max_line_units: pc.max_line_units,
                        seed,
                        hapax_filter: pc.hapax_filter,
                    };
                    let hapax = (pc.hapax_filter && !keeps_hapaxes(cm)).then_some(&freq);
                    write_atomic(&path, |w| {
                        stats = emit_concept_corpus(&concepts, &spec, hapax, w)?;
                        Ok(())
                    })?;
                }
                Method::Sid => {
                    let hapax = pc.hapax_filter.then_some(&freq);
                    write_atomic(&path, |w| {
                        stats = emit_sid_corpus(&loaded.views, train, hapax, seed, w)?;
                        Ok(())
                    })?;
                }
                Method::Bow => {
                    let hapax = pc.hapax_filter.then_some(&freq);
                    write_atomic(&path, |w| {
                        stats = emit_bow_corpus(&loaded.views, &loaded.pivot_set(), train, hapax, seed, pc.bow_max_bytes, w)?;
                        Ok(())
                    })?;
                }
                Method::Rtsimple => unreachable!("filtered above"),
            }
            log::info!("corpus {m}: {} lines, {} bytes", stats.lines, stats.bytes);
            outputs.push(name);
        }
        Ok(outputs)
    }

    pub fn train_config(&self, method: Method) -> TrainConfig {
        let mut t = self.config.train;
        t.seed = derive_seed(self.config.seed, &format!("train/{}", method.file_stem()));
        t.workers = self.config.effective_workers();
        if method == Method::Sid {
            t.epochs = self.config.sid_epochs;
        }
        t
    }

    fn train(&self) -> Result<Vec<String>> {
        let dir = self.stage_dir(Stage::Train);
        let mut outputs = Vec::new();
        for m in self.config.sorted_methods().into_iter().filter(|m| m.is_embedding()) {
            let cp = self.stage_dir(Stage::Corpus).join(format!("{}.txt", m.file_stem()));
            let corpus = match TrainingCorpus::from_reader(open(&cp)?, self.config.train.min_count) {
                Ok(c) => c,
                Err(Error::EmptyVocabulary) => {
                    log::warn!("train {m}: empty corpus, no embedding space");
                    continue;
                }
                Err(e) => return Err(in_file(&cp, e)),
            };
            let (space, report) = train_sgns(&corpus, &self.train_config(m))?;
            log::info!("train {m}: {} units, final loss {:?}", space.len(), report.epoch_losses.last());
            let name = format!("{}.vec", m.file_stem());
            write_atomic(&dir.join(&name), |w| space.save(w))?;
            let loss = format!("{}.loss.tsv", m.file_stem());
            write_atomic(&dir.join(&loss), |w| {
                for (i, l) in report.epoch_losses.iter().enumerate() {
                    writeln!(w, "{}\t{l}", i + 1)?;
                }
                Ok(())
            })?;
            outputs.push(name);
            outputs.push(loss);
        }
        Ok(outputs)
    }

    pub fn load_space(&self, method: Method) -> Result<Option<EmbeddingSpace>> {
        let p = self.stage_dir(Stage::Train).join(format!("{}.vec", method.file_stem()));
        if !p.exists() {
            return Ok(None);
        }
        with_file(&p, EmbeddingSpace::load(open(&p)?)).map(Some)
    }

    /// Unit prefix used for queries and sentiment: the CHAR view of an
    /// edition in CHAR mode, otherwise the edition itself.
    fn evaluation_prefix(&self, loaded: &Loaded, edition: &str) -> String {
        loaded
            .record
            .views
            .iter()
            .filter(|v| v.edition == edition)
            .max_by_key(|v| v.n)
            .map(|v| v.prefix.clone())
            .unwrap_or_else(|| edition.to_string())
    }

    pub fn query_set(&self, loaded: &Loaded) -> Result<QuerySet> {
        let c = &self.config.corpus;
        let qp = c
            .queries
            .as_ref()
            .ok_or_else(|| Error::Config("corpus.queries is required for evaluation".into()))?;
        let words = with_file(qp, read_queries(open(qp)?))?;
        let lemmas = match &c.lemmas {
            Some(p) => with_file(p, LemmaTable::read(open(p)?))?,
            None => LemmaTable::default(),
        };
        let prefix = self.evaluation_prefix(loaded, &c.query_edition);
        let view = loaded.record.views.iter().find(|v| v.prefix == prefix);
        Ok(match view {
            Some(v) if v.n > 0 => {
                let ed = loaded.corpus.edition(&v.edition).expect("query edition is loaded");
                QuerySet::char(&words, &prefix, &lemmas, &CharCounts::new([ed], v.n))
            }
            _ => QuerySet::word(&words, &prefix, &lemmas),
        })
    }

    /// Labeled verses per view with their unit keys, for the given verses.
    fn labeled(
        &self,
        loaded: &Loaded,
        views: &[&ViewSpec],
        verses: &BTreeSet<VerseId>,
        labels: &crate::eval::SentimentLabels,
        allowed: Option<&HashSet<String>>,
    ) -> Vec<LabeledVerse> {
        let keep: BTreeSet<VerseId> = verses.iter().filter(|v| labels.labels.contains_key(*v)).cloned().collect();
        let mut out = Vec::new();
        for spec in views {
            let ed = loaded.corpus.edition(&spec.edition).expect("view edition is loaded");
            let seg = SegmentedEdition::new(spec.prefix.clone(), ed, spec.mode(), &keep);
            for (v, ids) in &seg.verses {
                let units = ids
                    .iter()
                    .map(|&i| seg.unit(i).key())
                    .filter(|k| allowed.is_none_or(|a| a.contains(k)))
                    .collect();
                out.push(LabeledVerse {
                    units,
                    label: labels.labels[v],
                });
            }
        }
        out
    }

    fn eval(&self) -> Result<Vec<String>> {
        let loaded = self.load()?;
        let graph = self.load_graph()?;
        let queries = self.query_set(&loaded)?;
        if !queries.dropped.is_empty() {
            log::info!("eval: {} queries without strict n-gram ground truth dropped", queries.dropped.len());
        }
        let c = &self.config.corpus;
        let labels = match &c.labels {
            Some(p) => Some(with_file(p, read_labels(open(p)?))?),
            None => None,
        };
        let char_mode = c.mode == Representation::Char;
        // In CHAR mode every edition is represented by its n-gram view and
        // sentiment only uses n-grams that made it into a dictionary.
        let eval_views: Vec<&ViewSpec> = loaded.record.views.iter().filter(|v| !char_mode || v.n > 0).collect();
        let aligned: Option<HashSet<String>> =
            char_mode.then(|| (0..graph.node_count() as u32).map(|n| graph.unit(n).key()).collect());
        let sentiment_data = labels.as_ref().map(|labels| {
            let sent_ed = c.sentiment_edition.clone().unwrap_or_else(|| c.query_edition.clone());
            let prefix = self.evaluation_prefix(&loaded, &sent_ed);
            let train_view: Vec<&ViewSpec> = loaded.record.views.iter().filter(|v| v.prefix == prefix).collect();
            let train = self.labeled(&loaded, &train_view, &loaded.corpus.train_ids, labels, aligned.as_ref());
            let test = self.labeled(&loaded, &eval_views, &loaded.corpus.test_ids, labels, aligned.as_ref());
            let mut idf = HashMap::new();
            for spec in &eval_views {
                if let Some(seg) = loaded.view(&spec.prefix) {
                    let verses = seg.verses.values().map(|ids| ids.iter().map(|&i| seg.unit(i).key()).collect::<Vec<_>>());
                    idf.extend(idf_table(verses));
                }
            }
            (train, test, idf)
        });

        let dir = self.stage_dir(Stage::Eval);
        let mut outputs = Vec::new();
        let mut results = Vec::new();
        let own = base_edition(&queries.edition).to_string();
        for m in self.config.sorted_methods() {
            let rt: RoundtripReport = if m == Method::Rtsimple {
                let editions: Vec<String> = graph
                    .editions()
                    .filter(|e| base_edition(e) != own && (!char_mode || !graph.is_pivot_edition(e)))
                    .map(str::to_string)
                    .collect();
                rtsimple(&graph, &queries, &editions)
            } else {
                match self.load_space(m)? {
                    Some(space) => {
                        let editions = target_editions(&space, &queries.edition)
                            .into_iter()
                            .filter(|e| !char_mode || !loaded.record.pivots.contains(e))
                            .collect::<Vec<_>>();
                        evaluate_roundtrip(&space, &queries, &editions, &self.config.eval.settings)
                    }
                    None => evaluate_roundtrip(
                        &EmbeddingSpace::from_rows(vec!["_:_".into()], 1, vec![0.0])?,
                        &queries,
                        &[],
                        &self.config.eval.settings,
                    ),
                }
            };
            let name = format!("{}.rt.tsv", m.file_stem());
            write_atomic(&dir.join(&name), |w| rt.write_tsv(w))?;
            outputs.push(name);

            let sentiment = match (&sentiment_data, m.is_embedding()) {
                (Some((train, test, idf)), true) => match self.load_space(m)? {
                    Some(space) => {
                        let svm = SvmConfig {
                            seed: derive_seed(self.config.seed, &format!("svm/{}", m.file_stem())),
                            ..self.config.eval.svm
                        };
                        match evaluate_sentiment(&space, train, test, idf, &svm) {
                            Ok(r) => Some(SentimentScores {
                                positive_f1: r.positive_f1,
                                negative_f1: r.negative_f1,
                            }),
                            Err(Error::SingleClass) => {
                                log::warn!("eval {m}: sentiment training data has a single class");
                                None
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    None => None,
                },
                _ => None,
            };
            results.push(MethodResult::from_report(m, &rt, sentiment));
        }
        write_atomic(&dir.join("results.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &results)?;
            writeln!(w)
        })?;
        outputs.push("results.json".into());
        Ok(outputs)
    }

    pub fn load_results(&self) -> Result<Vec<MethodResult>> {
        let p = self.stage_dir(Stage::Eval).join("results.json");
        serde_json::from_reader(open(&p)?).map_err(|e| Error::Parse {
            path: p.clone(),
            line: e.line(),
            reason: e.to_string(),
        })
    }

    fn report(&self) -> Result<Vec<String>> {
        let results = self.load_results()?;
        let tables = render_report(&results, &self.config.eval.settings);
        let dir = self.stage_dir(Stage::Report);
        write_atomic(&dir.join("report.tsv"), |w| w.write_all(tables.tsv.as_bytes()))?;
        write_atomic(&dir.join("report.txt"), |w| w.write_all(tables.text.as_bytes()))?;
        write_atomic(&dir.join("editions.tsv"), |w| w.write_all(tables.editions.as_bytes()))?;
        Ok(vec!["report.tsv".into(), "report.txt".into(), "editions.tsv".into()])
    }
}

/// Settings evaluated for a method.
pub fn settings_for(method: Method, configured: &[Setting]) -> Vec<Setting> {
    if method == Method::Rtsimple {
        vec![Setting::S1, Setting::R1]
    } else {
        configured.to_vec()
    }
}
