//! Skipgram with negative sampling over whitespace-separated text, and the
//! resulting embedding space with per-edition nearest-neighbour queries.

use std::cell::Cell;
use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};
use std::ops::Range;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub alpha: f32,
    pub min_count: u64,
    pub subsample: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 200,
            window: 5,
            negatives: 5,
            epochs: 5,
            alpha: 0.025,
            min_count: 1,
            subsample: 1e-3,
            seed: 1,
            workers: 1,
        }
    }
}

/// Learning rate never decays below this fraction of the initial rate.
const MIN_ALPHA_FRACTION: f32 = 1e-4;

/// A tokenized training stream with its vocabulary. Ids are assigned by
/// descending count, ties in lexicographic order.
#[derive(Debug, Clone)]
pub struct TrainingCorpus {
    pub vocab: Vec<String>,
    pub counts: Vec<u64>,
    pub sentences: Vec<Vec<u32>>,
}

impl TrainingCorpus {
    pub fn from_lines<I, S>(lines: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut words: Vec<String> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        let mut raw: Vec<Vec<u32>> = Vec::new();
        for line in lines {
            let ids: Vec<u32> = line
                .as_ref()
                .split_ascii_whitespace()
                .map(|tok| {
                    let id = *index.entry(tok.to_string()).or_insert_with(|| {
                        words.push(tok.to_string());
                        counts.push(0);
                        (words.len() - 1) as u32
                    });
                    counts[id as usize] += 1;
                    id
                })
                .collect();
            if !ids.is_empty() {
                raw.push(ids);
            }
        }
        let mut order: Vec<u32> = (0..words.len() as u32)
            .filter(|&i| counts[i as usize] >= min_count)
            .collect();
        order.sort_by(|&a, &b| {
            counts[b as usize]
                .cmp(&counts[a as usize])
                .then_with(|| words[a as usize].cmp(&words[b as usize]))
        });
        if order.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut remap = vec![u32::MAX; words.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let sentences = raw
            .into_iter()
            .map(|s| s.into_iter().map(|i| remap[i as usize]).filter(|&i| i != u32::MAX).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        Ok(TrainingCorpus {
            vocab: order.iter().map(|&i| std::mem::take(&mut words[i as usize])).collect(),
            counts: order.iter().map(|&i| counts[i as usize]).collect(),
            sentences,
        })
    }

    pub fn from_reader<R: BufRead>(r: R, min_count: u64) -> Result<Self> {
        let lines: Vec<String> = r.lines().collect::<io::Result<_>>().map_err(|e| Error::io("", e))?;
        Self::from_lines(lines, min_count)
    }

    pub fn total_words(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Parameter storage shared by the training loop.
trait Store {
    fn get(&self, i: usize) -> f32;
    fn set(&self, i: usize, v: f32);
}

/// Single-worker storage: plain memory behind `Cell`.
struct Local<'a>(&'a [Cell<f32>]);

impl Store for Local<'_> {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        self.0[i].get()
    }
    #[inline]
    fn set(&self, i: usize, v: f32) {
        self.0[i].set(v)
    }
}

/// Multi-worker storage: relaxed atomics, updates may interleave.
struct Shared<'a>(&'a [AtomicU32]);

impl Store for Shared<'_> {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.0[i].load(Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, i: usize, v: f32) {
        self.0[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut lanes = [0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            lanes[k] += x[k] * y[k];
        }
    }
    let mut s: f32 = lanes.iter().sum();
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// `-ln σ(x)` without overflow.
#[inline]
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

struct Buffers {
    l1: Vec<f32>,
    neu1e: Vec<f32>,
    row: Vec<f32>,
}

impl Buffers {
    fn new(dim: usize) -> Self {
        Buffers {
            l1: vec![0.0; dim],
            neu1e: vec![0.0; dim],
            row: vec![0.0; dim],
        }
    }
}

/// One stochastic step on `-ln σ(in·out_center) - Σ ln σ(-in·out_neg)`
/// where `in` is the input vector of `context`. Negatives equal to the
/// center are skipped. Returns the loss before the step.
fn apply_example<S: Store>(
    syn0: &S,
    syn1: &S,
    dim: usize,
    context: u32,
    center: u32,
    negatives: &[u32],
    alpha: f32,
    buf: &mut Buffers,
) -> f64 {
    let base0 = context as usize * dim;
    for k in 0..dim {
        buf.l1[k] = syn0.get(base0 + k);
    }
    buf.neu1e.fill(0.0);
    let mut loss = 0.0;
    for (d, &target) in std::iter::once(&center).chain(negatives).enumerate() {
        let label = if d == 0 {
            1.0
        } else if target == center {
            continue;
        } else {
            0.0
        };
        let base1 = target as usize * dim;
        for k in 0..dim {
            buf.row[k] = syn1.get(base1 + k);
        }
        let f = dot(&buf.l1, &buf.row);
        loss += neg_log_sigmoid(if label > 0.0 { f as f64 } else { -f as f64 });
        let g = (label - sigmoid(f)) * alpha;
        for k in 0..dim {
            buf.neu1e[k] += g * buf.row[k];
            syn1.set(base1 + k, buf.row[k] + g * buf.l1[k]);
        }
    }
    for k in 0..dim {
        syn0.set(base0 + k, buf.l1[k] + buf.neu1e[k]);
    }
    loss
}

struct Sampler {
    alias: WeightedAliasIndex<f64>,
    keep: Vec<f32>,
}

impl Sampler {
    fn new(corpus: &TrainingCorpus, subsample: f64) -> Self {
        let weights: Vec<f64> = corpus.counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let total = corpus.total_words() as f64;
        let keep = corpus
            .counts
            .iter()
            .map(|&c| {
                if subsample <= 0.0 {
                    return 1.0;
                }
                let st = subsample * total;
                let c = c as f64;
                (((c / st).sqrt() + 1.0) * st / c).min(1.0) as f32
            })
            .collect();
        Sampler {
            alias: WeightedAliasIndex::new(weights).expect("vocabulary is non-empty with positive counts"),
            keep,
        }
    }
}

struct Progress<'a> {
    done: &'a AtomicU64,
    total: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_worker<S: Store>(
    syn0: &S,
    syn1: &S,
    corpus: &TrainingCorpus,
    sentences: Range<usize>,
    config: &TrainConfig,
    sampler: &Sampler,
    progress: &Progress<'_>,
    rng_seed: u64,
) -> (f64, u64) {
    let mut rng = seed::rng(rng_seed);
    let mut buf = Buffers::new(config.dim);
    let mut negatives = vec![0u32; config.negatives];
    let mut sen: Vec<u32> = Vec::new();
    let (mut loss, mut pairs) = (0.0, 0u64);
    for s in &corpus.sentences[sentences] {
        let done = progress.done.fetch_add(s.len() as u64, Ordering::Relaxed);
        let alpha = config.alpha * (1.0 - done as f32 / (progress.total as f32 + 1.0)).max(MIN_ALPHA_FRACTION);
        sen.clear();
        sen.extend(s.iter().copied().filter(|&w| sampler.keep[w as usize] >= rng.random::<f32>()));
        for i in 0..sen.len() {
            let reduced = rng.random_range(0..config.window.max(1));
            let span = config.window - reduced;
            let lo = i.saturating_sub(span);
            let hi = (i + span).min(sen.len() - 1);
            for j in lo..=hi {
                if j == i {
                    continue;
                }
                for n in negatives.iter_mut() {
                    *n = sampler.alias.sample(&mut rng) as u32;
                }
                loss += apply_example(syn0, syn1, config.dim, sen[j], sen[i], &negatives, alpha, &mut buf);
                pairs += 1;
            }
        }
    }
    (loss, pairs)
}

/// Mean per-pair loss of each epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

pub fn train_sgns(corpus: &TrainingCorpus, config: &TrainConfig) -> Result<(EmbeddingSpace, TrainReport)> {
    if corpus.vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    if config.dim == 0 || config.epochs == 0 || config.alpha <= 0.0 {
        return Err(Error::Config("dim, epochs and alpha must be positive".into()));
    }
    let dim = config.dim;
    let v = corpus.vocab.len();
    let mut init_rng = seed::rng(seed::derive_seed(config.seed, "init"));
    let mut syn0: Vec<f32> = (0..v * dim)
        .map(|_| (init_rng.random::<f32>() - 0.5) / dim as f32)
        .collect();
    let mut syn1: Vec<f32> = vec![0.0; v * dim];
    let sampler = Sampler::new(corpus, config.subsample);
    let done = AtomicU64::new(0);
    let progress = Progress {
        done: &done,
        total: corpus.total_words() * config.epochs as u64,
    };
    let workers = config.workers.max(1).min(corpus.sentences.len().max(1));
    let mut report = TrainReport::default();

    let n = corpus.sentences.len();
    let shard = |w: usize| (w * n / workers)..((w + 1) * n / workers);
    for epoch in 0..config.epochs {
        let worker_seed = |w: usize| seed::derive_seed(config.seed, &format!("train/{epoch}/{w}"));
        let results: Vec<(f64, u64)> = if workers == 1 {
            let s0 = Local(Cell::from_mut(syn0.as_mut_slice()).as_slice_of_cells());
            let s1 = Local(Cell::from_mut(syn1.as_mut_slice()).as_slice_of_cells());
            vec![run_worker(&s0, &s1, corpus, 0..n, config, &sampler, &progress, worker_seed(0))]
        } else {
            let a0: Vec<AtomicU32> = syn0.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
            let a1: Vec<AtomicU32> = syn1.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
            let out = std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers)
                    .map(|w| {
                        let (a0, a1, sampler, progress) = (&a0, &a1, &sampler, &progress);
                        let range = shard(w);
                        let s = worker_seed(w);
                        scope.spawn(move || run_worker(&Shared(a0), &Shared(a1), corpus, range, config, sampler, progress, s))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
            });
            for (dst, src) in syn0.iter_mut().zip(&a0) {
                *dst = f32::from_bits(src.load(Ordering::Relaxed));
            }
            for (dst, src) in syn1.iter_mut().zip(&a1) {
                *dst = f32::from_bits(src.load(Ordering::Relaxed));
            }
            out
        };
        let (loss, pairs) = results.iter().fold((0.0, 0u64), |acc, r| (acc.0 + r.0, acc.1 + r.1));
        let mean = if pairs > 0 { loss / pairs as f64 } else { 0.0 };
        log::debug!("epoch {} mean loss {mean:.5} over {pairs} pairs", epoch + 1);
        report.epoch_losses.push(mean);
    }
    let space = EmbeddingSpace::from_rows(corpus.vocab.clone(), dim, syn0)?;
    Ok((space, report))
}

/// The edition prefix of a token (`""` for tokens without one).
pub fn edition_of(token: &str) -> &str {
    token.split_once(':').map_or("", |(e, _)| e)
}

/// Vectors grouped by edition; within an edition, units are sorted, so
/// lower row index means lexicographically smaller unit.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f32>,
    norms: Vec<f32>,
    index: HashMap<String, u32>,
    editions: BTreeMap<String, Range<usize>>,
}

impl EmbeddingSpace {
    pub fn from_rows(words: Vec<String>, dim: usize, vectors: Vec<f32>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptySpace);
        }
        if vectors.len() != words.len() * dim {
            return Err(Error::MalformedSpace {
                line: 0,
                reason: format!("{} values for {} units of dimension {dim}", vectors.len(), words.len()),
            });
        }
        let mut order: Vec<usize> = (0..words.len()).collect();
        order.sort_by(|&a, &b| (edition_of(&words[a]), &words[a]).cmp(&(edition_of(&words[b]), &words[b])));
        let mut sorted_words = Vec::with_capacity(words.len());
        let mut sorted = Vec::with_capacity(vectors.len());
        let mut index = HashMap::with_capacity(words.len());
        let mut editions: BTreeMap<String, Range<usize>> = BTreeMap::new();
        for (row, &i) in order.iter().enumerate() {
            let w = &words[i];
            if index.insert(w.clone(), row as u32).is_some() {
                return Err(Error::MalformedSpace {
                    line: row + 2,
                    reason: format!("duplicate unit {w}"),
                });
            }
            editions
                .entry(edition_of(w).to_string())
                .and_modify(|r| r.end = row + 1)
                .or_insert(row..row + 1);
            sorted_words.push(w.clone());
            sorted.extend_from_slice(&vectors[i * dim..(i + 1) * dim]);
        }
        let norms = sorted.chunks_exact(dim.max(1)).map(|v| dot(v, v).sqrt()).collect();
        Ok(EmbeddingSpace {
            dim,
            words: sorted_words,
            vectors: sorted,
            norms,
            index,
            editions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, unit: &str) -> bool {
        self.index.contains_key(unit)
    }

    pub fn vector(&self, unit: &str) -> Option<&[f32]> {
        let i = *self.index.get(unit)? as usize;
        Some(&self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    pub fn editions(&self) -> impl Iterator<Item = &str> {
        self.editions.keys().map(String::as_str)
    }

    /// Units of one edition, sorted.
    pub fn edition_units(&self, edition: &str) -> &[String] {
        match self.editions.get(edition) {
            Some(r) => &self.words[r.clone()],
            None => &[],
        }
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f32> {
        let (ia, ib) = (*self.index.get(a)? as usize, *self.index.get(b)? as usize);
        let d = self.dim;
        let denom = self.norms[ia] * self.norms[ib];
        Some(if denom > 0.0 {
            dot(&self.vectors[ia * d..(ia + 1) * d], &self.vectors[ib * d..(ib + 1) * d]) / denom
        } else {
            0.0
        })
    }

    /// Top-`k` units of `edition` by cosine to `v`, descending, ties in
    /// lexicographic order.
    pub fn nearest_to_vector(&self, v: &[f32], edition: &str, k: usize) -> Vec<(String, f32)> {
        let Some(range) = self.editions.get(edition) else { return Vec::new() };
        let qn = dot(v, v).sqrt();
        let d = self.dim;
        let mut scored: Vec<(f32, usize)> = range
            .clone()
            .map(|i| {
                let denom = qn * self.norms[i];
                let c = if denom > 0.0 { dot(v, &self.vectors[i * d..(i + 1) * d]) / denom } else { 0.0 };
                (c, i)
            })
            .collect();
        let by_rank = |a: &(f32, usize), b: &(f32, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        let k = k.min(scored.len());
        if k == 0 {
            return Vec::new();
        }
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_by(by_rank);
        scored.into_iter().map(|(c, i)| (self.words[i].clone(), c)).collect()
    }

    pub fn nearest_neighbors(&self, query: &str, edition: &str, k: usize) -> Result<Vec<(String, f32)>> {
        let v = self.vector(query).ok_or_else(|| Error::OutOfVocabulary(query.to_string()))?;
        Ok(self.nearest_to_vector(v, edition, k))
    }

    /// Header `vocab_size dim`, then `unit v1 .. vd` per line.
    pub fn save<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.words.len(), self.dim)?;
        let mut line = String::new();
        for (i, word) in self.words.iter().enumerate() {
            line.clear();
            line.push_str(word);
            for x in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                line.push(' ');
                line.push_str(&x.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let malformed = |line: usize, reason: String| Error::MalformedSpace { line, reason };
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| malformed(1, "missing header".into()))?
            .map_err(|e| Error::io("", e))?;
        let mut parts = header.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(n)), Some(Ok(dim)), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed(1, format!("bad header {header:?}")));
        };
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        let mut words = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("", e))?;
            if line.is_empty() {
                continue;
            }
            if words.len() == n {
                return Err(malformed(i + 2, "more rows than the header declares".into()));
            }
            let mut toks = line.split(' ');
            let word = toks.next().unwrap_or_default();
            let before = vectors.len();
            for t in toks {
                vectors.push(t.parse::<f32>().map_err(|_| malformed(i + 2, format!("bad value {t:?}")))?);
            }
            if vectors.len() - before != dim {
                return Err(malformed(i + 2, format!("expected {dim} values, found {}", vectors.len() - before)));
            }
            words.push(word.to_string());
        }
        if words.len() != n {
            return Err(malformed(n + 1, format!("truncated: {} of {n} rows", words.len())));
        }
        Self::from_rows(words, dim, vectors)
    }
}

/// One skipgram training example: the input vector of `context` predicts
/// the output vector of `center` against `negatives`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsExample {
    pub center: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

/// The negative-sampling objective over a small parameter vector laid out
/// as the input matrix followed by the output matrix (`vocab x dim` each).
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsObjective {
    pub vocab: usize,
    pub dim: usize,
    pub examples: Vec<SgnsExample>,
}

impl SgnsObjective {
    /// A random instance and parameter vector.
    pub fn random<R: Rng>(rng: &mut R, vocab: usize, dim: usize, examples: usize, negatives: usize) -> (Self, Vec<f64>) {
        let examples = (0..examples)
            .map(|_| {
                let center = rng.random_range(0..vocab);
                let context = rng.random_range(0..vocab);
                let negatives = (0..negatives)
                    .map(|_| loop {
                        let n = rng.random_range(0..vocab);
                        if n != center {
                            break n;
                        }
                    })
                    .collect();
                SgnsExample { center, context, negatives }
            })
            .collect();
        let params = (0..2 * vocab * dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        (SgnsObjective { vocab, dim, examples }, params)
    }

    fn input<'a>(&self, p: &'a [f64], w: usize) -> &'a [f64] {
        &p[w * self.dim..(w + 1) * self.dim]
    }

    fn output<'a>(&self, p: &'a [f64], w: usize) -> &'a [f64] {
        let off = self.vocab * self.dim;
        &p[off + w * self.dim..off + (w + 1) * self.dim]
    }

    pub fn loss(&self, p: &[f64]) -> f64 {
        let dotf = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        self.examples
            .iter()
            .map(|e| {
                let x = self.input(p, e.context);
                neg_log_sigmoid(dotf(x, self.output(p, e.center)))
                    + e.negatives
                        .iter()
                        .map(|&n| neg_log_sigmoid(-dotf(x, self.output(p, n))))
                        .sum::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let dotf = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let d = self.dim;
        let off = self.vocab * d;
        let mut g = vec![0.0; p.len()];
        for e in &self.examples {
            let x = self.input(p, e.context).to_vec();
            let targets = std::iter::once((e.center, 1.0)).chain(e.negatives.iter().map(|&n| (n, 0.0)));
            for (t, label) in targets {
                let out = self.output(p, t).to_vec();
                // d/ds of the loss term, s = x·out
                let coef = sig(dotf(&x, &out)) - label;
                for k in 0..d {
                    g[e.context * d + k] += coef * out[k];
                    g[off + t * d + k] += coef * x[k];
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Compares `gradient` with central finite differences of the objective.
/// Relative error is measured against `max(|analytic|, |numeric|, 1e-3)` so
/// that near-zero components are judged on an absolute scale.
pub fn finite_difference_check(
    objective: &SgnsObjective,
    params: &[f64],
    gradient: &[f64],
    tolerance: f64,
) -> GradientCheck {
    const H: f64 = 1e-5;
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + H;
        let up = objective.loss(&p);
        p[i] = orig - H;
        let down = objective.loss(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * H);
        let scale = gradient[i].abs().max(numeric.abs()).max(1e-3);
        worst = worst.max((gradient[i] - numeric).abs() / scale);
    }
    GradientCheck {
        max_relative_error: worst,
        passed: worst < tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn vocabulary_order_and_min_count() {
        let c = TrainingCorpus::from_lines(["b a b", "c b a", "d"], 2).unwrap();
        assert_eq!(c.vocab, ["b", "a"]);
        assert_eq!(c.counts, [3, 2]);
        assert_eq!(c.sentences, vec![vec![0, 1, 0], vec![0, 1]]);
        assert!(matches!(TrainingCorpus::from_lines(["a b"], 2), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn trainer_step_follows_the_gradient() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (mut obj, params) = SgnsObjective::random(&mut rng, 5, 8, 1, 3);
        obj.examples[0] = SgnsExample {
            center: 0,
            context: 4,
            negatives: vec![1, 3, 2],
        };
        let e = &obj.examples[0];
        let alpha = 0.1f32;
        let mut syn: Vec<f32> = params.iter().map(|&x| x as f32).collect();
        let (s0, s1) = syn.split_at_mut(5 * 8);
        let grad = obj.gradient(&params);
        let p0 = Local(Cell::from_mut(s0).as_slice_of_cells());
        let p1 = Local(Cell::from_mut(s1).as_slice_of_cells());
        let negs: Vec<u32> = e.negatives.iter().map(|&n| n as u32).collect();
        let loss = apply_example(&p0, &p1, 8, e.context as u32, e.center as u32, &negs, alpha, &mut Buffers::new(8));
        assert!((loss - obj.loss(&params)).abs() < 1e-4);
        for (i, (&after, &before)) in syn.iter().zip(&params).enumerate() {
            let expected = before - alpha as f64 * grad[i];
            assert!((after as f64 - expected).abs() < 1e-5, "param {i}");
        }
    }

    #[test]
    fn gradient_check_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let (obj, params) = SgnsObjective::random(&mut rng, 5, 8, 6, 3);
        let g = obj.gradient(&params);
        assert!(finite_difference_check(&obj, &params, &g, 1e-4).passed);
        let flipped: Vec<f64> = g.iter().map(|x| -x).collect();
        assert!(!finite_difference_check(&obj, &params, &flipped, 1e-4).passed);
        let zeros = vec![0.0; params.len()];
        let gz = obj.gradient(&zeros);
        assert!(gz.iter().all(|&x| x == 0.0));
        assert!(finite_difference_check(&obj, &zeros, &gz, 1e-4).passed);
    }

    #[test]
    fn cowindowed_units_end_up_closer() {
        let lines: Vec<String> = (0..400)
            .map(|i| if i % 2 == 0 { "a b a b".to_string() } else { "c d c d".to_string() })
            .collect();
        let corpus = TrainingCorpus::from_lines(&lines, 1).unwrap();
        for seed in 0..10 {
            let config = TrainConfig {
                dim: 16,
                epochs: 5,
                subsample: 0.0,
                seed,
                ..Default::default()
            };
            let (space, _) = train_sgns(&corpus, &config).unwrap();
            let ab = space.cosine("a", "b").unwrap();
            let ac = space.cosine("a", "c").unwrap();
            assert!(ab > ac, "seed {seed}: {ab} vs {ac}");
        }
    }

    #[test]
    fn single_unit_corpus_trains() {
        let corpus = TrainingCorpus::from_lines(["x x x", "x"], 1).unwrap();
        let (space, _) = train_sgns(&corpus, &TrainConfig { dim: 4, ..Default::default() }).unwrap();
        assert_eq!(space.len(), 1);
    }

    #[test]
    fn single_worker_is_reproducible_and_loss_drops() {
        let lines: Vec<String> = (0..300).map(|i| format!("e:w{} f:v{} e:w{}", i % 7, i % 7, (i + 1) % 7)).collect();
        let corpus = TrainingCorpus::from_lines(&lines, 1).unwrap();
        let config = TrainConfig {
            dim: 10,
            epochs: 6,
            seed: 3,
            ..Default::default()
        };
        let (a, ra) = train_sgns(&corpus, &config).unwrap();
        let (b, _) = train_sgns(&corpus, &config).unwrap();
        assert_eq!(a.vectors, b.vectors);
        assert!(ra.epoch_losses.last() < ra.epoch_losses.first(), "{:?}", ra.epoch_losses);
        let (c, _) = train_sgns(&corpus, &TrainConfig { workers: 3, ..config }).unwrap();
        assert_eq!(c.len(), a.len());
    }

    fn toy_space() -> EmbeddingSpace {
        EmbeddingSpace::from_rows(
            vec!["e:b".into(), "e:a".into(), "f:x".into(), "f:y".into(), "f:z".into()],
            2,
            vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.1, 0.0, 1.0, -1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn nearest_neighbours_filter_and_tie_break() {
        let s = toy_space();
        let nn = s.nearest_neighbors("e:b", "e", 5).unwrap();
        assert_eq!(nn.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(), ["e:a", "e:b"]);
        assert!((nn[0].1 - 1.0).abs() < 1e-6);
        let nn = s.nearest_neighbors("e:a", "f", 2).unwrap();
        assert_eq!(nn.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(), ["f:x", "f:y"]);
        assert!(s.nearest_neighbors("e:a", "g", 2).unwrap().is_empty());
        assert!(matches!(s.nearest_neighbors("e:q", "f", 1), Err(Error::OutOfVocabulary(_))));
        assert!((s.cosine("f:x", "f:x").unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(s.edition_units("f"), ["f:x", "f:y", "f:z"]);
    }

    #[test]
    fn save_load_round_trip_and_errors() {
        let s = toy_space();
        let mut out = Vec::new();
        s.save(&mut out).unwrap();
        let back = EmbeddingSpace::load(&out[..]).unwrap();
        assert_eq!(back.words, s.words);
        assert_eq!(back.vectors, s.vectors);
        let text = String::from_utf8(out).unwrap();
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(EmbeddingSpace::load(truncated.as_bytes()), Err(Error::MalformedSpace { .. })));
        assert!(matches!(EmbeddingSpace::load(&b"0 3\n"[..]), Err(Error::EmptySpace)));
        assert!(EmbeddingSpace::load(&b"1 3\ne:a 1 2\n"[..]).is_err());
    }
}
