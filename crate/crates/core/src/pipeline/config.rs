use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chi2::Chi2Params;
use crate::concepts::{CliqueLimits, CliqueParams, ConceptMethod, DEFAULT_NU, DEFAULT_THETA};
use crate::embed::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{Setting, SvmConfig};
use crate::graph::Normalization;

/// Everything that can be trained and scored. Report rows follow the order
/// of [`Method::rank`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Concepts(ConceptMethod),
    Bow,
    Sid,
    Rtsimple,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Concepts(m) => m.name(),
            Method::Bow => "BOW",
            Method::Sid => "S-ID",
            Method::Rtsimple => "RTSIMPLE",
        }
    }

    pub fn rank(self) -> usize {
        match self {
            Method::Concepts(ConceptMethod::Nt) => 0,
            Method::Concepts(ConceptMethod::NtCc) => 1,
            Method::Concepts(ConceptMethod::NtClique) => 2,
            Method::Concepts(ConceptMethod::NtEdge) => 3,
            Method::Concepts(ConceptMethod::Clique) => 4,
            Method::Concepts(ConceptMethod::Sample) => 5,
            Method::Sid => 6,
            Method::Bow => 7,
            Method::Rtsimple => 8,
        }
    }

    /// Stem for artifact file names.
    pub fn file_stem(self) -> String {
        self.name().to_ascii_lowercase()
    }

    /// Methods that produce an embedding space.
    pub fn is_embedding(self) -> bool {
        self != Method::Rtsimple
    }
}

impl Ord for Method {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for Method {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "BOW" => Ok(Method::Bow),
            "S-ID" | "SID" => Ok(Method::Sid),
            "RTSIMPLE" => Ok(Method::Rtsimple),
            _ => s.parse().map(Method::Concepts),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Every edition is tokenized into words.
    #[default]
    Word,
    /// Pivot editions stay WORD; every edition is also represented by byte
    /// n-grams, linked to the pivots by χ² dictionaries.
    Char,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Directory holding `<edition_id>.txt` files.
    pub editions_dir: PathBuf,
    /// Editions to load; empty means every `.txt` file in the directory.
    pub editions: Vec<String>,
    pub mode: Representation,
    /// Per-edition n-gram order overrides for CHAR mode.
    pub ngram_orders: BTreeMap<String, usize>,
    /// Explicit pivot editions; empty means select by type count.
    pub pivots: Vec<String>,
    pub pivot_count: usize,
    pub pivot_sample: usize,
    pub test_verses: usize,
    pub query_edition: String,
    pub queries: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Edition whose training verses train the sentiment classifiers;
    /// defaults to the query edition.
    pub sentiment_edition: Option<String>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            editions_dir: PathBuf::from("editions"),
            editions: Vec::new(),
            mode: Representation::Word,
            ngram_orders: BTreeMap::new(),
            pivots: Vec::new(),
            pivot_count: 10,
            pivot_sample: 5000,
            test_verses: 1500,
            query_edition: "eng".into(),
            queries: None,
            lemmas: None,
            labels: None,
            sentiment_edition: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignConfig {
    pub iterations: usize,
    pub min_count: u64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            iterations: crate::align::DEFAULT_EM_ITERATIONS,
            min_count: crate::align::DEFAULT_MIN_COUNT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Chi2Config {
    pub chi_min: f64,
    pub d_max: u32,
}

impl Default for Chi2Config {
    fn default() -> Self {
        let p = Chi2Params::default();
        Chi2Config {
            chi_min: p.chi_min,
            d_max: p.d_max,
        }
    }
}

impl From<Chi2Config> for Chi2Params {
    fn from(c: Chi2Config) -> Self {
        Chi2Params {
            chi_min: c.chi_min,
            d_max: c.d_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConceptConfig {
    pub theta: f64,
    pub nu: f64,
    /// Subcorpora drawn by SAMPLE.
    pub samples: usize,
    pub max_cliques: usize,
}

impl Default for ConceptConfig {
    fn default() -> Self {
        ConceptConfig {
            theta: DEFAULT_THETA,
            nu: DEFAULT_NU,
            samples: 1000,
            max_cliques: CliqueLimits::default().max_cliques,
        }
    }
}

impl ConceptConfig {
    pub fn clique_params(&self) -> CliqueParams {
        CliqueParams {
            theta: self.theta,
            nu: self.nu,
            limits: CliqueLimits {
                max_cliques: self.max_cliques,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PseudocorpusConfig {
    pub target_size: u64,
    pub max_line_units: usize,
    pub hapax_filter: bool,
    /// Cap on the BOW corpus size; lines are subsampled to fit.
    pub bow_max_bytes: Option<u64>,
}

impl Default for PseudocorpusConfig {
    fn default() -> Self {
        PseudocorpusConfig {
            target_size: 50_000_000,
            max_line_units: 1000,
            hapax_filter: true,
            bow_max_bytes: Some(500_000_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub settings: Vec<Setting>,
    pub svm: SvmConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            settings: Setting::STANDARD.to_vec(),
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    /// Root seed; every stage derives its own.
    pub seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub methods: Vec<Method>,
    pub corpus: CorpusConfig,
    pub align: AlignConfig,
    pub chi2: Chi2Config,
    pub graph: GraphConfig,
    pub concepts: ConceptConfig,
    pub pseudocorpus: PseudocorpusConfig,
    pub train: TrainConfig,
    /// Epochs for the S-ID corpus, which is much smaller than the others.
    pub sid_epochs: usize,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            out_dir: PathBuf::from("out"),
            seed: 1,
            workers: 0,
            methods: vec![
                Method::Concepts(ConceptMethod::Nt),
                Method::Concepts(ConceptMethod::Clique),
                Method::Sid,
                Method::Bow,
                Method::Rtsimple,
            ],
            corpus: CorpusConfig::default(),
            align: AlignConfig::default(),
            chi2: Chi2Config::default(),
            graph: GraphConfig::default(),
            concepts: ConceptConfig::default(),
            pseudocorpus: PseudocorpusConfig::default(),
            train: TrainConfig::default(),
            sid_epochs: 100,
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses a TOML file; relative paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        fix(&mut self.corpus.editions_dir);
        for p in [&mut self.corpus.queries, &mut self.corpus.lemmas, &mut self.corpus.labels]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.concepts.theta) {
            return bad("concepts.theta must lie in [0, 1]");
        }
        if !(self.concepts.nu > 0.0 && self.concepts.nu <= 1.0) {
            return bad("concepts.nu must lie in (0, 1]");
        }
        if self.chi2.chi_min < 0.0 || self.chi2.d_max == 0 {
            return bad("chi2.chi_min must be non-negative and chi2.d_max positive");
        }
        if self.align.iterations == 0 || self.align.min_count == 0 {
            return bad("align.iterations and align.min_count must be positive");
        }
        if self.pseudocorpus.max_line_units < 2 {
            return bad("pseudocorpus.max_line_units must be at least 2");
        }
        if self.train.dim == 0 || self.train.epochs == 0 || self.sid_epochs == 0 || self.train.window == 0 {
            return bad("train.dim, train.epochs, train.window and sid_epochs must be positive");
        }
        for (e, &n) in &self.corpus.ngram_orders {
            if !crate::corpus::NGRAM_ORDERS.contains(&n) {
                return Err(Error::Config(format!("n-gram order {n} for {e} is not one of 4, 8, 12")));
            }
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        Ok(())
    }

    pub fn effective_workers(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    /// Selected methods, deduplicated, in report order.
    pub fn sorted_methods(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }
}
