//! χ²-based dictionary induction between a WORD pivot edition and a CHAR
//! target edition.
//!
//! The greedy loop makes `d_max` passes. In pass `d` it sweeps `f_max` from 2
//! to the number of verses; at each step it takes the active edge with the
//! highest χ² among units whose verse frequency lies in the band
//! `[f_min, f_max]` and whose degree is below `d`, extends the target ngram to
//! the left and right, and removes the selected edges from the active set.
//!
//! Edges only become eligible as `f_max` grows, and they stop being eligible
//! for good once `f_min` passes them, an endpoint fills its degree budget or
//! they are removed. A single max-heap per pass with lazy deletion therefore
//! returns the same maximum as a full scan.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::{self, BufRead, Write};

use crate::align::EditionPair;
use crate::corpus::UnitMode;
use crate::error::{Error, Result};
use crate::tsv;
use crate::unit::Unit;

pub const DEFAULT_CHI_MIN: f64 = 100.0;
pub const DEFAULT_D_MAX: u32 = 5;

/// χ² of the 2x2 verse-presence contingency table.
pub fn chi_square(c_st: u64, f_s: u64, f_t: u64, n: u64) -> Result<f64> {
    if c_st > f_s.min(f_t) || f_s.max(f_t) > n || f_s + f_t > n + c_st {
        return Err(Error::InvalidContingency { c: c_st, f_s, f_t, n });
    }
    if f_s == 0 || f_t == 0 || f_s == n || f_t == n {
        return Ok(0.0);
    }
    let (c, fs, ft, n) = (c_st as f64, f_s as f64, f_t as f64, n as f64);
    let a = c;
    let b = fs - c;
    let cc = ft - c;
    let d = n - fs - ft + c;
    let diff = a * d - b * cc;
    Ok(n * diff * diff / (fs * (n - fs) * ft * (n - ft)))
}

/// Lower frequency bound for a given `f_max`:
/// `max(min(5, f_max), f_max / 10)`.
pub fn f_min(f_max: u64) -> f64 {
    (f_max.min(5) as f64).max(f_max as f64 / 10.0)
}

/// `f_min(f_max) <= f <= f_max`, evaluated in integers.
pub fn in_band(f: u64, f_max: u64) -> bool {
    f <= f_max && f >= f_max.min(5) && 10 * f >= f_max
}

/// The `(f_max, f_min)` schedule of one pass over a corpus of `verses` verses.
pub fn schedule(verses: u64) -> impl Iterator<Item = (u64, f64)> {
    (2..=verses).map(|f| (f, f_min(f)))
}

/// Verse-level statistics of a pivot/target pair over their shared verses.
#[derive(Debug, Clone)]
pub struct CooccurrenceIndex {
    pub verses: u64,
    pub source_df: Vec<u64>,
    pub target_df: Vec<u64>,
    pub cooccurrences: HashMap<(u32, u32), u64>,
}

impl CooccurrenceIndex {
    pub fn build(pair: EditionPair<'_>) -> Self {
        let mut source_df = vec![0u64; pair.source.vocab_len()];
        let mut target_df = vec![0u64; pair.target.vocab_len()];
        let mut cooccurrences: HashMap<(u32, u32), u64> = HashMap::new();
        let shared = pair.shared_verses();
        for (_, src, tgt) in &shared {
            let mut s: Vec<u32> = src.to_vec();
            s.sort_unstable();
            s.dedup();
            let mut t: Vec<u32> = tgt.to_vec();
            t.sort_unstable();
            t.dedup();
            for &a in &s {
                source_df[a as usize] += 1;
            }
            for &b in &t {
                target_df[b as usize] += 1;
            }
            for &a in &s {
                for &b in &t {
                    *cooccurrences.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
        CooccurrenceIndex {
            verses: shared.len() as u64,
            source_df,
            target_df,
            cooccurrences,
        }
    }

    pub fn cooccurrence(&self, s: u32, t: u32) -> u64 {
        self.cooccurrences.get(&(s, t)).copied().unwrap_or(0)
    }

    pub fn chi_square(&self, s: u32, t: u32) -> f64 {
        chi_square(
            self.cooccurrence(s, t),
            self.source_df[s as usize],
            self.target_df[t as usize],
            self.verses,
        )
        .expect("counts come from one corpus")
    }

    /// Initial active edges: pairs that cooccur in at least one verse and
    /// cooccur more often than independence predicts.
    pub fn is_candidate(&self, s: u32, t: u32) -> bool {
        let c = self.cooccurrence(s, t);
        c > 0 && c * self.verses > self.source_df[s as usize] * self.target_df[t as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Params {
    pub chi_min: f64,
    pub d_max: u32,
}

impl Default for Chi2Params {
    fn default() -> Self {
        Chi2Params {
            chi_min: DEFAULT_CHI_MIN,
            d_max: DEFAULT_D_MAX,
        }
    }
}

/// One greedy step: the selected edge and the target set appended for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Selection {
    pub pass: u32,
    pub f_max: u64,
    pub source: u32,
    pub target: u32,
    pub chi2: f64,
    /// `target` followed by the extension ngrams in the order they were added.
    pub targets: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Edge {
    pub source: Unit,
    pub target: Unit,
    pub chi2: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chi2Dictionary {
    pub source_edition: String,
    pub target_edition: String,
    /// Edges sorted by serialized units.
    pub edges: Vec<Chi2Edge>,
    /// Selection steps in the order they happened.
    pub selections: Vec<Chi2Selection>,
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    chi2: f64,
    f_s: u64,
    f_t: u64,
    s_rank: u32,
    t_rank: u32,
    s: u32,
    t: u32,
}

impl HeapEntry {
    /// `Greater` means selected first: higher χ², then lower f_s, lower
    /// f_t, then unit order.
    fn priority(&self, other: &Self) -> Ordering {
        self.chi2
            .total_cmp(&other.chi2)
            .then(other.f_s.cmp(&self.f_s))
            .then(other.f_t.cmp(&self.f_t))
            .then(other.s_rank.cmp(&self.s_rank))
            .then(other.t_rank.cmp(&self.t_rank))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.priority(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority(other)
    }
}

/// Rank of each id when units are sorted by surface bytes.
fn surface_ranks(len: usize, surface: impl Fn(u32) -> Vec<u8>) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..len as u32).collect();
    ids.sort_by_cached_key(|&i| surface(i));
    let mut rank = vec![0u32; len];
    for (r, &i) in ids.iter().enumerate() {
        rank[i as usize] = r as u32;
    }
    rank
}

struct Greedy<'a> {
    index: &'a CooccurrenceIndex,
    params: Chi2Params,
    s_rank: Vec<u32>,
    t_rank: Vec<u32>,
    s_degree: Vec<u32>,
    t_degree: Vec<u32>,
    removed: HashSet<(u32, u32)>,
    /// Target ngrams sharing their first / last n-1 bytes.
    by_prefix: HashMap<Vec<u8>, Vec<u32>>,
    by_suffix: HashMap<Vec<u8>, Vec<u32>>,
    target_surfaces: Vec<Vec<u8>>,
}

impl Greedy<'_> {
    fn entry(&self, s: u32, t: u32) -> HeapEntry {
        HeapEntry {
            chi2: self.index.chi_square(s, t),
            f_s: self.index.source_df[s as usize],
            f_t: self.index.target_df[t as usize],
            s_rank: self.s_rank[s as usize],
            t_rank: self.t_rank[t as usize],
            s,
            t,
        }
    }

    fn eligible(&self, s: u32, t: u32, f_max: u64, pass: u32) -> bool {
        !self.removed.contains(&(s, t))
            && self.index.is_candidate(s, t)
            && in_band(self.index.source_df[s as usize], f_max)
            && in_band(self.index.target_df[t as usize], f_max)
            && self.s_degree[s as usize] < pass
            && self.t_degree[t as usize] < pass
    }

    /// Best eligible extension of `t` in one direction, if it clears χ_min.
    fn best_extension(&self, s: u32, t: u32, right: bool, taken: &[u32], f_max: u64, pass: u32) -> Option<u32> {
        let surface = &self.target_surfaces[t as usize];
        if surface.len() < 2 {
            return None;
        }
        let candidates = if right {
            self.by_prefix.get(&surface[1..])
        } else {
            self.by_suffix.get(&surface[..surface.len() - 1])
        }?;
        candidates
            .iter()
            .filter(|&&c| !taken.contains(&c) && self.eligible(s, c, f_max, pass))
            .map(|&c| self.entry(s, c))
            .filter(|e| e.chi2 >= self.params.chi_min)
            .max()
            .map(|e| e.t)
    }

    fn extend(&self, s: u32, t: u32, f_max: u64, pass: u32) -> Vec<u32> {
        let mut targets = vec![t];
        for right in [true, false] {
            let mut edge = t;
            while let Some(next) = self.best_extension(s, edge, right, &targets, f_max, pass) {
                targets.push(next);
                edge = next;
            }
        }
        targets
    }
}

/// Runs the greedy χ² induction on a WORD pivot / CHAR target pair.
pub fn induce_chi2_dictionary(pair: EditionPair<'_>, params: Chi2Params) -> Chi2Dictionary {
    let index = CooccurrenceIndex::build(pair);
    let selections = greedy_selections(pair, &index, params);
    let index = &index;
    let mut edges: Vec<Chi2Edge> = selections
        .iter()
        .flat_map(|sel| {
            sel.targets.iter().map(move |&t| Chi2Edge {
                source: pair.source.unit(sel.source),
                target: pair.target.unit(t),
                chi2: index.chi_square(sel.source, t),
            })
        })
        .collect();
    sort_edges(&mut edges);
    Chi2Dictionary {
        source_edition: pair.source.prefix.clone(),
        target_edition: pair.target.prefix.clone(),
        edges,
        selections,
    }
}

/// The greedy selection sequence over a prebuilt index.
pub fn greedy_selections(
    pair: EditionPair<'_>,
    index: &CooccurrenceIndex,
    params: Chi2Params,
) -> Vec<Chi2Selection> {
    let target_surfaces: Vec<Vec<u8>> = (0..pair.target.vocab_len() as u32)
        .map(|t| pair.target.surface(t).to_vec())
        .collect();
    let mut by_prefix: HashMap<Vec<u8>, Vec<u32>> = HashMap::new();
    let mut by_suffix: HashMap<Vec<u8>, Vec<u32>> = HashMap::new();
    if matches!(pair.target.mode, UnitMode::Char { .. }) {
        for (t, s) in target_surfaces.iter().enumerate() {
            if s.len() >= 2 {
                by_prefix.entry(s[..s.len() - 1].to_vec()).or_default().push(t as u32);
                by_suffix.entry(s[1..].to_vec()).or_default().push(t as u32);
            }
        }
    }
    let mut g = Greedy {
        index,
        params,
        s_rank: surface_ranks(pair.source.vocab_len(), |i| pair.source.surface(i).to_vec()),
        t_rank: surface_ranks(pair.target.vocab_len(), |i| pair.target.surface(i).to_vec()),
        s_degree: vec![0; pair.source.vocab_len()],
        t_degree: vec![0; pair.target.vocab_len()],
        removed: HashSet::new(),
        by_prefix,
        by_suffix,
        target_surfaces,
    };

    // Edges that can ever be selected, ordered by the f_max at which they
    // enter the band.
    let mut pool: Vec<(u64, HeapEntry)> = index
        .cooccurrences
        .keys()
        .filter(|&&(s, t)| index.is_candidate(s, t))
        .map(|&(s, t)| g.entry(s, t))
        .filter(|e| e.chi2 >= params.chi_min)
        .filter(|e| in_band(e.f_s.min(e.f_t), e.f_s.max(e.f_t)))
        .map(|e| (e.f_s.max(e.f_t), e))
        .collect();
    pool.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));

    let n = index.verses;
    let mut selections = Vec::new();
    for pass in 1..=params.d_max {
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
        let mut next = 0;
        let mut f_max = 2;
        while f_max <= n {
            while next < pool.len() && pool[next].0 <= f_max {
                if !g.removed.contains(&(pool[next].1.s, pool[next].1.t)) {
                    heap.push(pool[next].1);
                }
                next += 1;
            }
            while let Some(top) = heap.peek() {
                if g.eligible(top.s, top.t, f_max, pass) {
                    break;
                }
                heap.pop();
            }
            let Some(top) = heap.pop() else {
                // Nothing can be selected until the next edge enters the band.
                f_max = match pool.get(next) {
                    Some(&(h, _)) => h.max(f_max + 1),
                    None => break,
                };
                continue;
            };
            let targets = g.extend(top.s, top.t, f_max, pass);
            for &t in &targets {
                g.removed.insert((top.s, t));
            }
            g.s_degree[top.s as usize] += 1;
            g.t_degree[top.t as usize] += 1;
            selections.push(Chi2Selection {
                pass,
                f_max,
                source: top.s,
                target: top.t,
                chi2: top.chi2,
                targets,
            });
        }
    }
    selections
}

fn sort_edges(edges: &mut [Chi2Edge]) {
    edges.sort_by_cached_key(|e| (e.source.key(), e.target.key()));
}

impl Chi2Dictionary {
    /// `source<TAB>target<TAB>χ²` with six significant digits.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{}", e.source, e.target, tsv::format_sig6(e.chi2))?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(source_edition: &str, target_edition: &str, r: R) -> Result<Self> {
        let mut edges = Vec::new();
        for row in tsv::rows(r, 3) {
            let (line, f) = row?;
            edges.push(Chi2Edge {
                source: tsv::parse_unit(&f[0], line)?,
                target: tsv::parse_unit(&f[1], line)?,
                chi2: tsv::parse_f64(&f[2], line)?,
            });
        }
        sort_edges(&mut edges);
        Ok(Chi2Dictionary {
            source_edition: source_edition.to_string(),
            target_edition: target_edition.to_string(),
            edges,
            selections: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Edition, SegmentedEdition, VerseId};
    use std::collections::BTreeSet;

    fn editions(pivot: &[&str], target: &[&str], n: usize) -> (SegmentedEdition, SegmentedEdition) {
        let p = Edition::from_verses("p", pivot.iter().enumerate().map(|(i, t)| (format!("{}", i + 1), t.as_bytes().to_vec())))
            .unwrap();
        let t = Edition::from_verses("t", target.iter().enumerate().map(|(i, t)| (format!("{}", i + 1), t.as_bytes().to_vec())))
            .unwrap();
        let all: BTreeSet<VerseId> = p.verses().keys().cloned().collect();
        (
            SegmentedEdition::new("p", &p, UnitMode::Word, &all),
            SegmentedEdition::new("t", &t, UnitMode::Char { n }, &all),
        )
    }

    #[test]
    fn contingency_examples() {
        assert_eq!(chi_square(10, 10, 10, 100).unwrap(), 100.0);
        assert_eq!(chi_square(1, 10, 10, 100).unwrap(), 0.0);
        assert_eq!(chi_square(0, 0, 10, 100).unwrap(), 0.0);
        assert_eq!(chi_square(10, 100, 10, 100).unwrap(), 0.0);
        assert!(chi_square(11, 10, 20, 100).is_err());
        assert!(chi_square(0, 10, 200, 100).is_err());
        assert!(chi_square(0, 60, 60, 100).is_err());
    }

    #[test]
    fn exclusive_pair_scores_n() {
        // present together in 30 of 100 verses, absent elsewhere
        assert!((chi_square(30, 30, 30, 100).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn band_formula() {
        assert_eq!(f_min(50), 5.0);
        assert_eq!(f_min(2), 2.0);
        assert_eq!(f_min(120), 12.0);
        assert_eq!(schedule(5).map(|(f, _)| f).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        assert!(in_band(5, 50) && !in_band(4, 50) && in_band(12, 120) && !in_band(11, 120));
        assert!(in_band(3, 3) && !in_band(2, 3));
    }

    #[test]
    fn exclusive_word_and_ngram_are_paired() {
        // "water" appears with "wara" in 30 of 100 verses; no other signal.
        let mut pivot = Vec::new();
        let mut target = Vec::new();
        for i in 0..100 {
            if i % 10 < 3 {
                pivot.push("water");
                target.push("wara");
            } else {
                pivot.push("x");
                target.push("yyyy");
            }
        }
        let (p, t) = editions(&pivot, &target, 4);
        let dict = induce_chi2_dictionary(EditionPair::new(&p, &t), Chi2Params::default());
        let first = dict
            .selections
            .iter()
            .find(|s| p.surface(s.source) == b"water")
            .unwrap();
        let got: BTreeSet<&[u8]> = first.targets.iter().map(|&x| t.surface(x)).collect();
        assert!(got.contains(&b"wara"[..]), "{got:?}");
        assert!((first.chi2 - 100.0).abs() < 1e-9);
        assert!(dict.edges.iter().any(|e| e.target.surface == b"wara" && (e.chi2 - 100.0).abs() < 1e-9));
    }

    #[test]
    fn extension_adds_shifted_ngrams() {
        // "jisas" always cooccurs with "Jesus"; other verses are filler.
        let mut pivot = Vec::new();
        let mut target = Vec::new();
        for i in 0..150 {
            if i % 3 == 0 {
                pivot.push("jisas".to_string());
                target.push("Jesus".to_string());
            } else {
                pivot.push(format!("w{}", i % 7));
                target.push(format!("q{}", i % 7));
            }
        }
        let pivot: Vec<&str> = pivot.iter().map(String::as_str).collect();
        let target: Vec<&str> = target.iter().map(String::as_str).collect();
        let (p, t) = editions(&pivot, &target, 4);
        let dict = induce_chi2_dictionary(EditionPair::new(&p, &t), Chi2Params::default());
        let sel = dict
            .selections
            .iter()
            .find(|s| p.surface(s.source) == b"jisas")
            .unwrap();
        let got: Vec<&[u8]> = sel.targets.iter().map(|&x| t.surface(x)).collect();
        // the whole padded word's 4-grams are perfectly correlated
        let all: BTreeSet<&[u8]> = got.iter().copied().collect();
        let expected: BTreeSet<&[u8]> = [&b" Jes"[..], b"Jesu", b"esus", b"sus "].into_iter().collect();
        assert_eq!(all, expected);
        // one selection per source in the first pass covers the word
        assert_eq!(
            dict.selections.iter().filter(|s| s.pass == 1 && p.surface(s.source) == b"jisas").count(),
            1
        );
    }

    #[test]
    fn independent_units_give_nothing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut pivot = Vec::new();
        let mut target = Vec::new();
        for _ in 0..200 {
            let words: Vec<String> = (0..6).filter(|_| rng.random_bool(0.3)).map(|i| format!("w{i}")).collect();
            pivot.push(if words.is_empty() { "none".to_string() } else { words.join(" ") });
            let grams: String = (0..4).map(|_| (b'a' + rng.random_range(0..3u8)) as char).collect();
            target.push(grams);
        }
        let pivot: Vec<&str> = pivot.iter().map(String::as_str).collect();
        let target: Vec<&str> = target.iter().map(String::as_str).collect();
        let (p, t) = editions(&pivot, &target, 4);
        let dict = induce_chi2_dictionary(EditionPair::new(&p, &t), Chi2Params::default());
        assert!(dict.edges.is_empty(), "{:?}", dict.edges);
    }

    #[test]
    fn degrees_respect_pass_budget() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut pivot = Vec::new();
        let mut target = Vec::new();
        for _ in 0..300 {
            let k = rng.random_range(0..12);
            pivot.push(format!("a{} b{}", k, k / 3));
            target.push(format!("x{}y z{}", k, k / 3));
        }
        let pivot: Vec<&str> = pivot.iter().map(String::as_str).collect();
        let target: Vec<&str> = target.iter().map(String::as_str).collect();
        let (p, t) = editions(&pivot, &target, 4);
        let dict = induce_chi2_dictionary(
            EditionPair::new(&p, &t),
            Chi2Params { chi_min: 30.0, d_max: 3 },
        );
        assert!(!dict.selections.is_empty());
        let mut sd: HashMap<u32, u32> = HashMap::new();
        let mut td: HashMap<u32, u32> = HashMap::new();
        let mut seen = HashSet::new();
        for s in &dict.selections {
            let ds = sd.entry(s.source).or_insert(0);
            let dt = td.entry(s.target).or_insert(0);
            assert!(*ds < s.pass && *dt < s.pass);
            *ds += 1;
            *dt += 1;
            for &x in &s.targets {
                assert!(seen.insert((s.source, x)), "edge reselected");
            }
        }
    }

    #[test]
    fn tsv_uses_six_digits() {
        let dict = Chi2Dictionary {
            source_edition: "p".into(),
            target_edition: "t".into(),
            edges: vec![Chi2Edge {
                source: Unit::new("p", "a"),
                target: Unit::new("t", &b"ab c"[..]),
                chi2: 123.4567891,
            }],
            selections: vec![],
        };
        let mut out = Vec::new();
        dict.write_tsv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "p:a\tt:ab%20c\t123.457\n");
        let back = Chi2Dictionary::read_tsv("p", "t", &out[..]).unwrap();
        assert_eq!(back.edges[0].target, dict.edges[0].target);
    }
}
