//! Roundtrip translation: a query goes to its nearest neighbours in another
//! edition and back to the query edition; the returned units are compared
//! with strict and relaxed ground-truth sets.

mod rtsimple;
mod sentiment;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{base_edition, ngramize, tokenize_word, Edition};
use crate::embed::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::tsv;
use crate::unit::Unit;

pub use rtsimple::{rtsimple, rtsimple_chain};
pub use sentiment::{
    chance_f1, evaluate_sentiment, f1_score, idf_table, read_labels, train_svm, verse_vector, LabeledVerse,
    LinearSvm, SentimentLabels, SentimentResult, SvmConfig, VerseLabel,
};

pub const SIGMA_STRICT: f64 = 0.75;
pub const SIGMA_RELAXED: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Truth {
    Strict,
    Relaxed,
}

/// Ground-truth strictness and the two neighbourhood sizes `k_I`, `k_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Setting {
    pub truth: Truth,
    pub k_intermediate: usize,
    pub k_target: usize,
}

impl Setting {
    pub const S1: Setting = Setting::new(Truth::Strict, 1, 1);
    pub const R1: Setting = Setting::new(Truth::Relaxed, 1, 1);
    pub const S4: Setting = Setting::new(Truth::Strict, 2, 2);
    pub const S16: Setting = Setting::new(Truth::Strict, 2, 8);
    pub const STANDARD: [Setting; 4] = [Setting::S1, Setting::R1, Setting::S4, Setting::S16];

    pub const fn new(truth: Truth, k_intermediate: usize, k_target: usize) -> Self {
        Setting {
            truth,
            k_intermediate,
            k_target,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.truth {
            Truth::Strict => 's',
            Truth::Relaxed => 'r',
        };
        match (self.k_intermediate, self.k_target) {
            (1, 1) | (2, 2) | (2, 8) => write!(f, "{}{}", t.to_ascii_uppercase(), self.k_intermediate * self.k_target),
            (i, k) => write!(f, "{t},{i},{k}"),
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown evaluation setting {s:?}"));
        match s {
            "S1" => return Ok(Setting::S1),
            "R1" => return Ok(Setting::R1),
            "S4" => return Ok(Setting::S4),
            "S16" => return Ok(Setting::S16),
            _ => {}
        }
        let parts: Vec<&str> = s.split(',').collect();
        let [t, i, k] = parts[..] else { return Err(bad()) };
        let truth = match t {
            "s" => Truth::Strict,
            "r" => Truth::Relaxed,
            _ => return Err(bad()),
        };
        let i: usize = i.parse().map_err(|_| bad())?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if i == 0 || k == 0 {
            return Err(bad());
        }
        Ok(Setting::new(truth, i, k))
    }
}

impl TryFrom<String> for Setting {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Setting> for String {
    fn from(s: Setting) -> String {
        s.to_string()
    }
}

/// Lemma groups: every form maps to all forms sharing a lemma with it.
#[derive(Debug, Clone, Default)]
pub struct LemmaTable {
    forms: HashMap<Vec<u8>, BTreeSet<Vec<u8>>>,
}

impl LemmaTable {
    /// Rows `lemma<TAB>form form ...`. The lemma itself counts as a form.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut table = LemmaTable::default();
        for row in tsv::rows(r, 2) {
            let (_, fields) = row?;
            let group: BTreeSet<Vec<u8>> = std::iter::once(fields[0].as_str())
                .chain(fields[1].split_whitespace())
                .map(|f| f.as_bytes().to_ascii_lowercase())
                .collect();
            table.add_group(group);
        }
        Ok(table)
    }

    pub fn add_group(&mut self, group: BTreeSet<Vec<u8>>) {
        for f in &group {
            self.forms.entry(f.clone()).or_default().extend(group.iter().cloned());
        }
    }

    /// `L(q)`: the forms sharing a lemma with `q`, or `{q}`.
    pub fn forms(&self, q: &[u8]) -> BTreeSet<Vec<u8>> {
        self.forms
            .get(q)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([q.to_vec()]))
    }
}

/// One query word per line; blank lines and `#` comments are skipped.
pub fn read_queries<R: BufRead>(r: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line.map_err(|e| Error::io("", e))?;
        let q = line.trim();
        if !q.is_empty() && !q.starts_with('#') {
            out.push(q.to_lowercase());
        }
    }
    Ok(out)
}

/// Word and n-gram counts over the editions of the query language.
#[derive(Debug, Clone)]
pub struct CharCounts {
    pub n: usize,
    words: HashMap<Vec<u8>, u64>,
    ngrams: HashMap<Vec<u8>, u64>,
}

impl CharCounts {
    pub fn new<'a>(editions: impl IntoIterator<Item = &'a Edition>, n: usize) -> Self {
        let mut words = HashMap::new();
        let mut ngrams = HashMap::new();
        for e in editions {
            for text in e.verses().values() {
                for w in tokenize_word(text) {
                    *words.entry(w).or_insert(0) += 1;
                }
                for g in ngramize(text, n) {
                    *ngrams.entry(g).or_insert(0) += 1;
                }
            }
        }
        CharCounts { n, words, ngrams }
    }

    pub fn word(&self, w: &[u8]) -> u64 {
        self.words.get(w).copied().unwrap_or(0)
    }

    pub fn ngram(&self, g: &[u8]) -> u64 {
        self.ngrams.get(g).copied().unwrap_or(0)
    }

    /// `c_qg`: the share of occurrences of `g` that lie inside a form of
    /// the query's lemma group.
    pub fn association(&self, forms: &BTreeSet<Vec<u8>>, g: &[u8]) -> f64 {
        let cg = self.ngram(g);
        if cg == 0 {
            return 0.0;
        }
        let inside: u64 = forms
            .iter()
            .filter(|f| ngramize(f, self.n).iter().any(|x| x == g))
            .map(|f| self.word(f))
            .sum();
        inside as f64 / cg as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub word: String,
    /// Space keys that may stand for the query, best first.
    pub candidates: Vec<String>,
    pub strict: BTreeSet<String>,
    pub relaxed: BTreeSet<String>,
}

impl Query {
    pub fn truth(&self, t: Truth) -> &BTreeSet<String> {
        match t {
            Truth::Strict => &self.strict,
            Truth::Relaxed => &self.relaxed,
        }
    }

    /// The unit that represents the query in `space`, if any.
    pub fn unit_in<'a>(&'a self, space: &EmbeddingSpace) -> Option<&'a str> {
        self.candidates.iter().find(|c| space.contains(c)).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    /// Unit prefix of the query edition.
    pub edition: String,
    pub queries: Vec<Query>,
    /// Queries without any strict ground truth.
    pub dropped: Vec<String>,
}

impl QuerySet {
    /// `G_s = {q}`, `G_r = L(q)`.
    pub fn word(words: &[String], edition: &str, lemmas: &LemmaTable) -> Self {
        let key = |w: &[u8]| Unit::new(edition, w.to_vec()).key();
        let queries = words
            .iter()
            .map(|w| {
                let q = key(w.as_bytes());
                Query {
                    word: w.clone(),
                    candidates: vec![q.clone()],
                    strict: BTreeSet::from([q]),
                    relaxed: lemmas.forms(w.as_bytes()).iter().map(|f| key(f)).collect(),
                }
            })
            .collect();
        QuerySet {
            edition: edition.to_string(),
            queries,
            dropped: Vec::new(),
        }
    }

    /// Ground truth over n-grams: `g` joins `G_i` when `c_qg > σ_i`. The
    /// candidates are all n-grams of the padded lemma forms; the query is
    /// represented by its in-vocabulary strict n-gram with the largest
    /// `c_qg`.
    pub fn char(words: &[String], edition: &str, lemmas: &LemmaTable, counts: &CharCounts) -> Self {
        let mut queries = Vec::new();
        let mut dropped = Vec::new();
        for w in words {
            let forms = lemmas.forms(w.as_bytes());
            let grams: BTreeSet<Vec<u8>> = forms.iter().flat_map(|f| ngramize(f, counts.n)).collect();
            let mut scored: Vec<(f64, String)> = grams
                .iter()
                .map(|g| (counts.association(&forms, g), Unit::new(edition, g.clone()).key()))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let strict: BTreeSet<String> = scored.iter().filter(|s| s.0 > SIGMA_STRICT).map(|s| s.1.clone()).collect();
            if strict.is_empty() {
                dropped.push(w.clone());
                continue;
            }
            queries.push(Query {
                word: w.clone(),
                candidates: scored.iter().filter(|s| s.0 > SIGMA_STRICT).map(|s| s.1.clone()).collect(),
                strict,
                relaxed: scored.iter().filter(|s| s.0 > SIGMA_RELAXED).map(|s| s.1.clone()).collect(),
            });
        }
        QuerySet {
            edition: edition.to_string(),
            queries,
            dropped,
        }
    }
}

/// `T_e(q)`: the `k_target` query-edition neighbours of each of the
/// `k_intermediate` neighbours of `q` in `edition`.
pub fn roundtrip(
    space: &EmbeddingSpace,
    query: &str,
    query_edition: &str,
    edition: &str,
    k_intermediate: usize,
    k_target: usize,
) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for (i, _) in space.nearest_neighbors(query, edition, k_intermediate)? {
        for (t, _) in space.nearest_neighbors(&i, query_edition, k_target)? {
            out.insert(t);
        }
    }
    Ok(out)
}

/// `min(1, |T ∩ G|)`.
pub fn hit(predictions: &BTreeSet<String>, truth: &BTreeSet<String>) -> f64 {
    if predictions.iter().any(|p| truth.contains(p)) {
        1.0
    } else {
        0.0
    }
}

/// `p_i(q) = 1/|E| Σ_e min(1, |T_e(q) ∩ G_i(q)|)`.
pub fn precision(predictions: &[BTreeSet<String>], truth: &BTreeSet<String>) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().map(|t| hit(t, truth)).sum::<f64>() / predictions.len() as f64
}

/// Editions of the space other than the query edition (and its other view).
pub fn target_editions(space: &EmbeddingSpace, query_edition: &str) -> Vec<String> {
    let own = base_edition(query_edition);
    space
        .editions()
        .filter(|e| !e.is_empty() && base_edition(e) != own)
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub word: String,
    pub covered: bool,
    /// `[setting][edition]` hit score in `[0, 1]`.
    pub scores: Vec<Vec<f64>>,
}

impl QueryOutcome {
    pub fn precision(&self, setting: usize) -> f64 {
        let s = &self.scores[setting];
        if s.is_empty() {
            0.0
        } else {
            s.iter().sum::<f64>() / s.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    pub settings: Vec<Setting>,
    pub editions: Vec<String>,
    pub queries: Vec<QueryOutcome>,
}

/// Lower median.
pub fn lower_median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

impl RoundtripReport {
    /// Queries present in the space.
    pub fn coverage(&self) -> usize {
        self.queries.iter().filter(|q| q.covered).count()
    }

    pub fn setting_index(&self, setting: Setting) -> Option<usize> {
        self.settings.iter().position(|&s| s == setting)
    }

    /// Mean and median of `p_i(q)` over all queries; uncovered queries score 0.
    pub fn summary(&self, setting: usize) -> Summary {
        let p: Vec<f64> = self.queries.iter().map(|q| q.precision(setting)).collect();
        Summary {
            mean: if p.is_empty() { 0.0 } else { p.iter().sum::<f64>() / p.len() as f64 },
            median: lower_median(&p),
        }
    }

    /// Per-edition accuracy: the mean hit score over queries.
    pub fn edition_accuracy(&self, setting: usize) -> BTreeMap<String, f64> {
        let n = self.queries.len().max(1) as f64;
        self.editions
            .iter()
            .enumerate()
            .map(|(e, name)| {
                let s: f64 = self
                    .queries
                    .iter()
                    .map(|q| q.scores[setting].get(e).copied().unwrap_or(0.0))
                    .sum();
                (name.clone(), s / n)
            })
            .collect()
    }

    /// Per-query precision table.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "query\tcovered")?;
        for s in &self.settings {
            write!(w, "\t{s}")?;
        }
        writeln!(w)?;
        for q in &self.queries {
            write!(w, "{}\t{}", q.word, u8::from(q.covered))?;
            for i in 0..self.settings.len() {
                write!(w, "\t{}", tsv::format_sig6(q.precision(i)))?;
            }
            writeln!(w)?;
        }
        w.flush()
    }
}

/// Runs every setting for every query against every target edition.
pub fn evaluate_roundtrip(
    space: &EmbeddingSpace,
    queries: &QuerySet,
    editions: &[String],
    settings: &[Setting],
) -> RoundtripReport {
    let ki = settings.iter().map(|s| s.k_intermediate).max().unwrap_or(1);
    let kt = settings.iter().map(|s| s.k_target).max().unwrap_or(1);
    let qed = queries.edition.as_str();
    let outcomes = queries
        .queries
        .par_iter()
        .map(|query| {
            let Some(unit) = query.unit_in(space) else {
                return QueryOutcome {
                    word: query.word.clone(),
                    covered: false,
                    scores: vec![vec![0.0; editions.len()]; settings.len()],
                };
            };
            let mut scores = vec![Vec::with_capacity(editions.len()); settings.len()];
            for e in editions {
                let inter = space.nearest_neighbors(unit, e, ki).expect("query is in the space");
                let back: Vec<Vec<String>> = inter
                    .iter()
                    .map(|(i, _)| {
                        space
                            .nearest_neighbors(i, qed, kt)
                            .expect("neighbour is in the space")
                            .into_iter()
                            .map(|x| x.0)
                            .collect()
                    })
                    .collect();
                for (si, s) in settings.iter().enumerate() {
                    let t: BTreeSet<String> = back
                        .iter()
                        .take(s.k_intermediate)
                        .flat_map(|b| b.iter().take(s.k_target).cloned())
                        .collect();
                    scores[si].push(hit(&t, query.truth(s.truth)));
                }
            }
            QueryOutcome {
                word: query.word.clone(),
                covered: true,
                scores,
            }
        })
        .collect();
    RoundtripReport {
        settings: settings.to_vec(),
        editions: editions.to_vec(),
        queries: outcomes,
    }
}
