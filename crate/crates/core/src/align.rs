//! Alignment-based dictionaries for WORD-mode edition pairs.
//!
//! Lexical translation tables are trained with IBM Model 1 EM in both
//! directions, verse pairs are aligned by per-token argmax, the two
//! directional alignments are merged with grow-diag-final-and, and links that
//! occur at least `min_count` times become dictionary edges.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use rayon::prelude::*;

use crate::corpus::{SegmentedEdition, VerseId};
use crate::error::{Error, Result};
use crate::tsv;
use crate::unit::Unit;

pub const DEFAULT_EM_ITERATIONS: usize = 5;
pub const DEFAULT_MIN_COUNT: u64 = 2;

/// Two segmented editions restricted to the verses both contain.
#[derive(Debug, Clone, Copy)]
pub struct EditionPair<'a> {
    pub source: &'a SegmentedEdition,
    pub target: &'a SegmentedEdition,
}

impl<'a> EditionPair<'a> {
    pub fn new(source: &'a SegmentedEdition, target: &'a SegmentedEdition) -> Self {
        EditionPair { source, target }
    }

    /// `(verse, source ids, target ids)` for every shared verse, in verse order.
    pub fn shared_verses(&self) -> Vec<(&'a VerseId, &'a [u32], &'a [u32])> {
        self.source
            .verses
            .iter()
            .filter_map(|(v, s)| self.target.verses.get(v).map(|t| (v, s.as_slice(), t.as_slice())))
            .collect()
    }

    fn reversed(self) -> Self {
        EditionPair {
            source: self.target,
            target: self.source,
        }
    }
}

/// Sparse lexical translation probabilities `p(target | source)`.
#[derive(Debug, Clone)]
pub struct TranslationTable {
    probs: HashMap<(u32, u32), f64>,
    null: HashMap<u32, f64>,
    /// Corpus log-likelihood before each EM iteration and after the last one.
    pub log_likelihoods: Vec<f64>,
}

impl TranslationTable {
    /// `p(target | source)` by interned ids; 0 for pairs that never cooccur.
    pub fn prob(&self, source: u32, target: u32) -> f64 {
        self.probs.get(&(source, target)).copied().unwrap_or(0.0)
    }

    /// `p(target | NULL)`.
    pub fn null_prob(&self, target: u32) -> f64 {
        self.null.get(&target).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable target for `source`; ties go to the smaller id.
    pub fn argmax(&self, source: u32) -> Option<(u32, f64)> {
        self.probs
            .iter()
            .filter(|((s, _), _)| *s == source)
            .map(|(&(_, t), &p)| (t, p))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
    }

    /// Sum of stored probabilities per source id.
    pub fn row_sums(&self) -> HashMap<u32, f64> {
        let mut sums = HashMap::new();
        for (&(s, _), &p) in &self.probs {
            *sums.entry(s).or_insert(0.0) += p;
        }
        sums
    }
}

/// Translation tables for both directions of a pair.
#[derive(Debug, Clone)]
pub struct TranslationModel {
    /// `p(target token | source token)`
    pub forward: TranslationTable,
    /// `p(source token | target token)`
    pub reverse: TranslationTable,
}

pub fn train_translation_model(pair: EditionPair<'_>, iterations: usize) -> Result<TranslationModel> {
    let forward = train_direction(pair, iterations)?;
    let reverse = train_direction(pair.reversed(), iterations)?;
    Ok(TranslationModel { forward, reverse })
}

const NULL: u32 = u32::MAX;

/// IBM Model 1 EM in one direction.
fn train_direction(pair: EditionPair<'_>, iterations: usize) -> Result<TranslationTable> {
    let verses = pair.shared_verses();
    if verses.is_empty() {
        return Err(Error::NoSharedVerses(
            pair.source.prefix.clone(),
            pair.target.prefix.clone(),
        ));
    }
    assert!(iterations >= 1, "EM needs at least one iteration");

    // One parameter slot per cooccurring (source or NULL, target) pair.
    let mut slot_of: HashMap<(u32, u32), u32> = HashMap::new();
    let mut slot_src: Vec<u32> = Vec::new();
    let mut slot_tgt: Vec<u32> = Vec::new();
    // Per verse, a row of I+1 slots (NULL first) for every target position.
    let mut grid: Vec<u32> = Vec::new();
    let mut offsets: Vec<(usize, usize, usize)> = Vec::with_capacity(verses.len());
    for (_, src, tgt) in &verses {
        offsets.push((grid.len(), src.len() + 1, tgt.len()));
        for &t in *tgt {
            for s in std::iter::once(NULL).chain(src.iter().copied()) {
                let next = slot_src.len() as u32;
                let slot = *slot_of.entry((s, t)).or_insert_with(|| {
                    slot_src.push(s);
                    slot_tgt.push(t);
                    next
                });
                grid.push(slot);
            }
        }
    }

    // Uniform start over the targets each source cooccurs with.
    let mut fanout: HashMap<u32, u32> = HashMap::new();
    for &s in &slot_src {
        *fanout.entry(s).or_insert(0) += 1;
    }
    let mut params: Vec<f64> = slot_src.iter().map(|s| 1.0 / fanout[s] as f64).collect();

    let mut log_likelihoods = Vec::with_capacity(iterations + 1);
    let mut posterior = vec![0.0f64; grid.len()];
    for _ in 0..iterations {
        let ll = e_step(&grid, &offsets, &params, &mut posterior);
        log_likelihoods.push(ll);
        // Sequential scatter in grid order keeps the sums independent of
        // how the E-step was split across threads.
        let mut counts = vec![0.0f64; params.len()];
        for (&slot, &p) in grid.iter().zip(&posterior) {
            counts[slot as usize] += p;
        }
        let mut totals: HashMap<u32, f64> = HashMap::new();
        for (slot, &c) in counts.iter().enumerate() {
            *totals.entry(slot_src[slot]).or_insert(0.0) += c;
        }
        for (slot, p) in params.iter_mut().enumerate() {
            let total = totals[&slot_src[slot]];
            *p = if total > 0.0 { counts[slot] / total } else { 0.0 };
        }
    }
    log_likelihoods.push(e_step(&grid, &offsets, &params, &mut posterior));

    let mut probs = HashMap::with_capacity(params.len());
    let mut null = HashMap::new();
    for (slot, &p) in params.iter().enumerate() {
        if slot_src[slot] == NULL {
            null.insert(slot_tgt[slot], p);
        } else {
            probs.insert((slot_src[slot], slot_tgt[slot]), p);
        }
    }
    Ok(TranslationTable {
        probs,
        null,
        log_likelihoods,
    })
}

/// Fills `posterior` with alignment posteriors and returns the corpus
/// log-likelihood `sum_j ln(1/(I+1) sum_i t(f_j|e_i))` under `params`.
fn e_step(
    grid: &[u32],
    offsets: &[(usize, usize, usize)],
    params: &[f64],
    posterior: &mut [f64],
) -> f64 {
    let mut chunks: Vec<(&(usize, usize, usize), &mut [f64])> = Vec::with_capacity(offsets.len());
    let mut rest = posterior;
    for off in offsets {
        let (head, tail) = rest.split_at_mut(off.1 * off.2);
        chunks.push((off, head));
        rest = tail;
    }
    let lls: Vec<f64> = chunks
        .into_par_iter()
        .map(|(&(start, width, rows), out)| {
            let mut ll = 0.0;
            for j in 0..rows {
                let row = &grid[start + j * width..start + (j + 1) * width];
                let dst = &mut out[j * width..(j + 1) * width];
                let mut z = 0.0;
                for (d, &slot) in dst.iter_mut().zip(row) {
                    *d = params[slot as usize];
                    z += *d;
                }
                if z > 0.0 {
                    for d in dst.iter_mut() {
                        *d /= z;
                    }
                }
                ll += (z / width as f64).ln();
            }
            ll
        })
        .collect();
    lls.iter().sum()
}

/// Link `(source position, target position)`.
pub type Link = (usize, usize);

/// Relative tolerance under which two translation scores count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

fn diagonal_distance(i: usize, len_i: usize, j: usize, len_j: usize) -> f64 {
    ((i as f64 + 0.5) / len_i as f64 - (j as f64 + 0.5) / len_j as f64).abs()
}

/// For each position of `to`, the best position of `from` under `score`, or
/// none when NULL wins. Near-ties prefer the position closest to the diagonal.
fn directional_argmax(
    from_len: usize,
    to_len: usize,
    score: impl Fn(usize, usize) -> f64,
    null_score: impl Fn(usize) -> f64,
) -> Vec<Option<usize>> {
    (0..to_len)
        .map(|j| {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..from_len {
                let s = score(i, j);
                best = match best {
                    None => Some((i, s)),
                    Some((bi, bs)) => {
                        let tol = TIE_TOLERANCE * bs.abs().max(s.abs());
                        if s > bs + tol {
                            Some((i, s))
                        } else if (s - bs).abs() <= tol
                            && diagonal_distance(i, from_len, j, to_len)
                                < diagonal_distance(bi, from_len, j, to_len)
                        {
                            Some((i, s))
                        } else {
                            Some((bi, bs))
                        }
                    }
                };
            }
            match best {
                Some((i, s)) if s > 0.0 && s >= null_score(j) => Some(i),
                _ => None,
            }
        })
        .collect()
}

/// Forward (target positions to source) and reverse (source positions to
/// target) argmax links for one verse.
pub fn directional_links(model: &TranslationModel, src: &[u32], tgt: &[u32]) -> (Vec<Link>, Vec<Link>) {
    let fwd = directional_argmax(
        src.len(),
        tgt.len(),
        |i, j| model.forward.prob(src[i], tgt[j]),
        |j| model.forward.null_prob(tgt[j]),
    );
    let rev = directional_argmax(
        tgt.len(),
        src.len(),
        |j, i| model.reverse.prob(tgt[j], src[i]),
        |i| model.reverse.null_prob(src[i]),
    );
    let forward = fwd
        .into_iter()
        .enumerate()
        .filter_map(|(j, i)| i.map(|i| (i, j)))
        .collect();
    let reverse = rev
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    (forward, reverse)
}

/// grow-diag-final-and symmetrization of two directional link sets over a
/// `source_len x target_len` verse pair.
pub fn grow_diag_final_and(
    source_len: usize,
    target_len: usize,
    forward: &[Link],
    reverse: &[Link],
) -> Vec<Link> {
    let fwd: BTreeSet<Link> = forward.iter().copied().collect();
    let rev: BTreeSet<Link> = reverse.iter().copied().collect();
    let union: BTreeSet<Link> = fwd.union(&rev).copied().collect();
    let mut alignment: BTreeSet<Link> = fwd.intersection(&rev).copied().collect();
    let mut src_aligned = vec![false; source_len];
    let mut tgt_aligned = vec![false; target_len];
    for &(i, j) in &alignment {
        src_aligned[i] = true;
        tgt_aligned[j] = true;
    }

    const NEIGHBORS: [(isize, isize); 8] =
        [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];
    loop {
        let mut added = false;
        for i in 0..source_len {
            for j in 0..target_len {
                if !alignment.contains(&(i, j)) {
                    continue;
                }
                for (di, dj) in NEIGHBORS {
                    let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj)) else {
                        continue;
                    };
                    if ni >= source_len || nj >= target_len {
                        continue;
                    }
                    if (!src_aligned[ni] || !tgt_aligned[nj])
                        && union.contains(&(ni, nj))
                        && alignment.insert((ni, nj))
                    {
                        src_aligned[ni] = true;
                        tgt_aligned[nj] = true;
                        added = true;
                    }
                }
            }
        }
        if !added {
            break;
        }
    }

    for directional in [&fwd, &rev] {
        for &(i, j) in directional {
            if !src_aligned[i] && !tgt_aligned[j] {
                alignment.insert((i, j));
                src_aligned[i] = true;
                tgt_aligned[j] = true;
            }
        }
    }
    alignment.into_iter().collect()
}

/// Symmetrized links for every shared verse of the pair.
pub fn align_and_symmetrize<'a>(
    pair: EditionPair<'a>,
    model: &TranslationModel,
) -> Vec<(&'a VerseId, Vec<Link>)> {
    pair.shared_verses()
        .into_par_iter()
        .map(|(v, src, tgt)| {
            let (f, r) = directional_links(model, src, tgt);
            (v, grow_diag_final_and(src.len(), tgt.len(), &f, &r))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEdge {
    pub source: Unit,
    pub target: Unit,
    /// Number of verse-level alignment links.
    pub count: u64,
    /// Verses where both units occur.
    pub cooccurrences: u64,
    /// Verses containing the source / target unit.
    pub source_df: u64,
    pub target_df: u64,
}

/// Dictionary edges for one edition pair, sorted by serialized units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentEdgeSet {
    pub source_edition: String,
    pub target_edition: String,
    pub edges: Vec<DictionaryEdge>,
}

pub fn build_alignment_dictionary(
    pair: EditionPair<'_>,
    links: &[(&VerseId, Vec<Link>)],
    min_count: u64,
) -> AlignmentEdgeSet {
    let verses: HashMap<&VerseId, (&[u32], &[u32])> = pair
        .shared_verses()
        .into_iter()
        .map(|(v, s, t)| (v, (s, t)))
        .collect();
    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    for (v, verse_links) in links {
        let Some(&(src, tgt)) = verses.get(v) else { continue };
        for &(i, j) in verse_links {
            *counts.entry((src[i], tgt[j])).or_insert(0) += 1;
        }
    }
    counts.retain(|_, c| *c >= min_count);

    let mut cooc: HashMap<(u32, u32), u64> = HashMap::new();
    let mut src_df: HashMap<u32, u64> = HashMap::new();
    let mut tgt_df: HashMap<u32, u64> = HashMap::new();
    for (src, tgt) in verses.values() {
        let s: BTreeSet<u32> = src.iter().copied().collect();
        let t: BTreeSet<u32> = tgt.iter().copied().collect();
        for &a in &s {
            *src_df.entry(a).or_insert(0) += 1;
        }
        for &b in &t {
            *tgt_df.entry(b).or_insert(0) += 1;
        }
        for &a in &s {
            for &b in &t {
                if counts.contains_key(&(a, b)) {
                    *cooc.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
    }

    let mut edges: Vec<DictionaryEdge> = counts
        .into_iter()
        .map(|((a, b), count)| DictionaryEdge {
            source: pair.source.unit(a),
            target: pair.target.unit(b),
            count,
            cooccurrences: cooc.get(&(a, b)).copied().unwrap_or(0),
            source_df: src_df.get(&a).copied().unwrap_or(0),
            target_df: tgt_df.get(&b).copied().unwrap_or(0),
        })
        .collect();
    sort_edges(&mut edges);
    AlignmentEdgeSet {
        source_edition: pair.source.prefix.clone(),
        target_edition: pair.target.prefix.clone(),
        edges,
    }
}

fn sort_edges(edges: &mut [DictionaryEdge]) {
    edges.sort_by_cached_key(|e| (e.source.key(), e.target.key()));
}

/// Full pipeline for one pair: EM, alignment, symmetrization, dictionary.
pub fn induce_alignment_dictionary(
    pair: EditionPair<'_>,
    iterations: usize,
    min_count: u64,
) -> Result<AlignmentEdgeSet> {
    let model = train_translation_model(pair, iterations)?;
    let links = align_and_symmetrize(pair, &model);
    Ok(build_alignment_dictionary(pair, &links, min_count))
}

impl AlignmentEdgeSet {
    /// `source<TAB>target<TAB>count`, one edge per line, sorted.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{}", e.source, e.target, e.count)?;
        }
        Ok(())
    }

    /// `source<TAB>target<TAB>cooccurrences<TAB>source_df<TAB>target_df`.
    pub fn write_cooccurrence_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                e.source, e.target, e.cooccurrences, e.source_df, e.target_df
            )?;
        }
        Ok(())
    }

    /// Reads a dictionary and its cooccurrence file back.
    pub fn read_tsv<R: BufRead, C: BufRead>(
        source_edition: &str,
        target_edition: &str,
        dict: R,
        cooc: Option<C>,
    ) -> Result<Self> {
        let mut stats: HashMap<(Unit, Unit), (u64, u64, u64)> = HashMap::new();
        if let Some(cooc) = cooc {
            for row in tsv::rows(cooc, 5) {
                let (line, f) = row?;
                let parse = |s: &str| tsv::parse_u64(s, line);
                stats.insert(
                    (tsv::parse_unit(&f[0], line)?, tsv::parse_unit(&f[1], line)?),
                    (parse(&f[2])?, parse(&f[3])?, parse(&f[4])?),
                );
            }
        }
        let mut edges = Vec::new();
        for row in tsv::rows(dict, 3) {
            let (line, f) = row?;
            let source = tsv::parse_unit(&f[0], line)?;
            let target = tsv::parse_unit(&f[1], line)?;
            let count = tsv::parse_u64(&f[2], line)?;
            let (cooccurrences, source_df, target_df) =
                stats.get(&(source.clone(), target.clone())).copied().unwrap_or((0, 0, 0));
            edges.push(DictionaryEdge {
                source,
                target,
                count,
                cooccurrences,
                source_df,
                target_df,
            });
        }
        sort_edges(&mut edges);
        Ok(AlignmentEdgeSet {
            source_edition: source_edition.to_string(),
            target_edition: target_edition.to_string(),
            edges,
        })
    }
}
