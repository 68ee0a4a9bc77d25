//! Training text for the embedding learner.
//!
//! Concept corpora write each concept as one or more lines of its units and
//! repeat every concept with a fresh random order until the corpus reaches
//! its target size. The S-ID corpus pairs each verse identifier with every
//! unit of that verse; the BOW corpus writes the bag of units of one verse in
//! two pivot editions and one target edition.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::concepts::{Concept, ConceptMethod};
use crate::corpus::{SegmentedEdition, VerseId};
use crate::seed;
use crate::unit::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CorpusSpec {
    /// Approximate size of a concept corpus in bytes.
    pub target_size: u64,
    pub max_line_units: usize,
    pub seed: u64,
    pub hapax_filter: bool,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            target_size: 50_000_000,
            max_line_units: 1000,
            seed: 0,
            hapax_filter: true,
        }
    }
}

/// Methods whose streams keep hapax legomena.
pub fn keeps_hapaxes(method: ConceptMethod) -> bool {
    matches!(method, ConceptMethod::Sample | ConceptMethod::Clique)
}

/// Token frequency of every unit over the given (training) verses.
pub fn unit_frequencies(editions: &[SegmentedEdition]) -> HashMap<Unit, u64> {
    let mut freq = HashMap::new();
    for ed in editions {
        for (id, &f) in ed.token_frequencies().iter().enumerate() {
            if f > 0 {
                freq.insert(ed.unit(id as u32), f);
            }
        }
    }
    freq
}

/// Drops units whose training frequency is exactly one.
pub fn apply_hapax_filter<'a, I>(units: I, freq: &'a HashMap<Unit, u64>) -> impl Iterator<Item = &'a Unit> + 'a
where
    I: IntoIterator<Item = &'a Unit>,
    I::IntoIter: 'a,
{
    units.into_iter().filter(move |u| freq.get(*u).copied() != Some(1))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmitStats {
    pub lines: u64,
    pub bytes: u64,
}

struct CountingWriter<W> {
    inner: W,
    stats: EmitStats,
}

impl<W: Write> CountingWriter<W> {
    fn line(&mut self, tokens: &[String]) -> io::Result<()> {
        let mut bytes = 0;
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                self.inner.write_all(b" ")?;
                bytes += 1;
            }
            self.inner.write_all(t.as_bytes())?;
            bytes += t.len();
        }
        self.inner.write_all(b"\n")?;
        self.stats.lines += 1;
        self.stats.bytes += bytes as u64 + 1;
        Ok(())
    }
}

/// Contiguous chunks of near-equal size, none longer than `max`.
fn balanced_chunks<T>(items: &[T], max: usize) -> impl Iterator<Item = &[T]> {
    let n = items.len();
    let parts = n.div_ceil(max.max(1)).max(1);
    let (base, extra) = (n / parts, n % parts);
    let mut start = 0;
    (0..parts).map(move |i| {
        let len = base + usize::from(i < extra);
        let chunk = &items[start..start + len];
        start += len;
        chunk
    })
}

/// Serialized bytes of one copy of a concept: every unit is followed by a
/// space or a newline.
fn copy_bytes(units: &[String]) -> u64 {
    units.iter().map(|u| u.len() as u64 + 1).sum()
}

/// Writes a concept corpus. Every concept with at least two units (after the
/// optional hapax filter) is written at least once; a global multiplication
/// factor brings the total close to `spec.target_size`.
pub fn emit_concept_corpus<W: Write>(
    concepts: &[Concept],
    spec: &CorpusSpec,
    hapax: Option<&HashMap<Unit, u64>>,
    w: W,
) -> io::Result<EmitStats> {
    let sets: Vec<Vec<String>> = concepts
        .iter()
        .map(|c| {
            let units: Vec<String> = match hapax {
                Some(freq) => apply_hapax_filter(c.units(), freq).map(Unit::key).collect(),
                None => c.units().map(Unit::key).collect(),
            };
            let unique: BTreeSet<String> = units.into_iter().collect();
            unique.into_iter().collect()
        })
        .filter(|u: &Vec<String>| u.len() >= 2)
        .collect();
    let mut out = CountingWriter {
        inner: w,
        stats: EmitStats::default(),
    };
    if sets.is_empty() {
        return Ok(out.stats);
    }

    let mut rng = seed::rng(seed::derive_seed(spec.seed, "concept-corpus"));
    let base: u64 = sets.iter().map(|s| copy_bytes(s)).sum();
    let factor = spec.target_size as f64 / base as f64;
    let whole = factor.floor().max(1.0) as usize;
    let extra = if factor >= 1.0 {
        ((factor - factor.floor()) * sets.len() as f64).round() as usize
    } else {
        0
    };
    let mut copies = vec![whole; sets.len()];
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(extra) {
        copies[i] += 1;
    }

    let rounds = *copies.iter().max().unwrap();
    let mut buf: Vec<String> = Vec::new();
    for round in 0..rounds {
        order.shuffle(&mut rng);
        for &i in &order {
            if copies[i] <= round {
                continue;
            }
            buf.clear();
            buf.extend(sets[i].iter().cloned());
            buf.shuffle(&mut rng);
            for chunk in balanced_chunks(&buf, spec.max_line_units) {
                out.line(chunk)?;
            }
        }
    }
    out.inner.flush()?;
    Ok(out.stats)
}

pub const SID_PREFIX: &str = "vSID_";

/// One `vSID_<verse> <unit>` line per distinct (verse, unit) pair of the
/// given verses, in a seeded random order.
pub fn emit_sid_corpus<W: Write>(
    editions: &[SegmentedEdition],
    verses: &BTreeSet<VerseId>,
    hapax: Option<&HashMap<Unit, u64>>,
    seed: u64,
    w: W,
) -> io::Result<EmitStats> {
    let mut lines: Vec<[String; 2]> = Vec::new();
    for v in verses {
        let tag = format!("{SID_PREFIX}{v}");
        for ed in editions {
            let Some(ids) = ed.verses.get(v) else { continue };
            let unique: BTreeSet<u32> = ids.iter().copied().collect();
            for id in unique {
                let unit = ed.unit(id);
                if hapax.is_some_and(|f| f.get(&unit).copied() == Some(1)) {
                    continue;
                }
                lines.push([tag.clone(), unit.key()]);
            }
        }
    }
    lines.shuffle(&mut seed::rng(seed::derive_seed(seed, "sid-corpus")));
    let mut out = CountingWriter {
        inner: w,
        stats: EmitStats::default(),
    };
    for l in &lines {
        out.line(l)?;
    }
    out.inner.flush()?;
    Ok(out.stats)
}

/// For each verse, each non-pivot edition containing it and each unordered
/// pair of distinct pivot editions: one shuffled line with the verse's units
/// from the three editions. When `max_bytes` is set and the full corpus
/// would be larger, a seeded random subset of lines is written instead.
pub fn emit_bow_corpus<W: Write>(
    editions: &[SegmentedEdition],
    pivots: &BTreeSet<String>,
    verses: &BTreeSet<VerseId>,
    hapax: Option<&HashMap<Unit, u64>>,
    seed: u64,
    max_bytes: Option<u64>,
    w: W,
) -> io::Result<EmitStats> {
    let piv: Vec<&SegmentedEdition> = editions.iter().filter(|e| pivots.contains(&e.prefix)).collect();
    let targets: Vec<&SegmentedEdition> = editions.iter().filter(|e| !pivots.contains(&e.prefix)).collect();
    let keep = |u: &Unit| !hapax.is_some_and(|f| f.get(u).copied() == Some(1));
    let verse_units = |ed: &SegmentedEdition, v: &VerseId| -> Vec<String> {
        ed.verses
            .get(v)
            .map(|ids| ids.iter().map(|&i| ed.unit(i)).filter(keep).map(|u| u.key()).collect())
            .unwrap_or_default()
    };

    // Plan the lines first so that subsampling does not depend on unit text.
    let mut plan: Vec<(usize, usize, usize, usize)> = Vec::new();
    let verse_list: Vec<&VerseId> = verses.iter().collect();
    for (vi, v) in verse_list.iter().enumerate() {
        for (ti, t) in targets.iter().enumerate() {
            if !t.verses.contains_key(*v) {
                continue;
            }
            for a in 0..piv.len() {
                for b in a + 1..piv.len() {
                    plan.push((vi, ti, a, b));
                }
            }
        }
    }
    let mut rng = seed::rng(seed::derive_seed(seed, "bow-corpus"));
    let line_tokens = |&(vi, ti, a, b): &(usize, usize, usize, usize)| -> Vec<String> {
        let v = verse_list[vi];
        let mut toks = verse_units(piv[a], v);
        toks.extend(verse_units(piv[b], v));
        toks.extend(verse_units(targets[ti], v));
        toks
    };
    if let Some(limit) = max_bytes {
        let estimate: u64 = plan
            .iter()
            .map(|p| line_tokens(p).iter().map(|t| t.len() as u64 + 1).sum::<u64>())
            .sum();
        if estimate > limit && estimate > 0 {
            let keep_fraction = limit as f64 / estimate as f64;
            plan.retain(|_| rng.random_bool(keep_fraction));
        }
    }

    let mut out = CountingWriter {
        inner: w,
        stats: EmitStats::default(),
    };
    for p in &plan {
        let mut toks = line_tokens(p);
        if toks.is_empty() {
            continue;
        }
        toks.shuffle(&mut rng);
        out.line(&toks)?;
    }
    out.inner.flush()?;
    Ok(out.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Edition, UnitMode};

    fn concept(units: &[&str]) -> Concept {
        Concept {
            id: 0,
            method: ConceptMethod::Nt,
            pivot_words: vec![units[0].parse().unwrap()],
            target_units: units[1..].iter().map(|s| s.parse().unwrap()).collect(),
        }
    }

    fn emit(concepts: &[Concept], spec: &CorpusSpec) -> (String, EmitStats) {
        let mut out = Vec::new();
        let stats = emit_concept_corpus(concepts, spec, None, &mut out).unwrap();
        (String::from_utf8(out).unwrap(), stats)
    }

    #[test]
    fn small_concept_is_replicated_and_shuffled() {
        let c = concept(&["p:a", "t:b", "t:c", "t:d", "t:e"]);
        let spec = CorpusSpec {
            target_size: 2000,
            seed: 3,
            ..Default::default()
        };
        let (text, stats) = emit(&[c], &spec);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines.len() > 50);
        assert!(lines.iter().all(|l| l.split(' ').count() == 5));
        let distinct: BTreeSet<&str> = lines.iter().copied().collect();
        assert!(distinct.len() > 20);
        assert_eq!(stats.bytes as usize, text.len());
        assert!((stats.bytes as f64 - 2000.0).abs() <= 200.0, "{}", stats.bytes);
    }

    #[test]
    fn large_concepts_are_split() {
        let units: Vec<String> = (0..10_000).map(|i| format!("t:u{i}")).collect();
        let mut refs: Vec<&str> = vec!["p:a"];
        refs.extend(units.iter().map(String::as_str));
        let spec = CorpusSpec {
            target_size: 1,
            max_line_units: 1000,
            ..Default::default()
        };
        let (text, _) = emit(&[concept(&refs)], &spec);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert!(lines.iter().all(|l| l.split(' ').count() <= 1000));
        let total: usize = lines.iter().map(|l| l.split(' ').count()).sum();
        assert_eq!(total, 10_001);
    }

    #[test]
    fn size_tracks_target_and_is_deterministic() {
        let concepts: Vec<Concept> = (0..50)
            .map(|i| concept(&[&format!("p:w{i}"), &format!("t:x{i}"), &format!("u:y{i}")]))
            .collect();
        let spec = CorpusSpec {
            target_size: 100_000,
            seed: 11,
            ..Default::default()
        };
        let (a, sa) = emit(&concepts, &spec);
        let (b, _) = emit(&concepts, &spec);
        assert_eq!(a, b);
        assert!((sa.bytes as f64 / 100_000.0 - 1.0).abs() < 0.1);
        let (c, _) = emit(&concepts, &CorpusSpec { seed: 12, ..spec });
        assert_ne!(a, c);
    }

    #[test]
    fn hapax_filter_and_singletons() {
        let c = concept(&["p:a", "t:rare", "t:b"]);
        let mut freq = HashMap::new();
        freq.insert("t:rare".parse().unwrap(), 1);
        freq.insert("t:b".parse().unwrap(), 2);
        let mut out = Vec::new();
        let spec = CorpusSpec {
            target_size: 10,
            ..Default::default()
        };
        emit_concept_corpus(&[c], &spec, Some(&freq), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(!text.contains("rare"));
        assert!(text.contains("t:b"));
        assert!(keeps_hapaxes(ConceptMethod::Sample) && keeps_hapaxes(ConceptMethod::Clique));
        assert!(!keeps_hapaxes(ConceptMethod::Nt));
        let (empty, _) = emit(&[concept(&["p:a"])], &spec);
        assert!(empty.is_empty());
    }

    fn seg(id: &str, verses: &[(&str, &str)]) -> SegmentedEdition {
        let e = Edition::from_verses(id, verses.iter().map(|&(v, t)| (v, t))).unwrap();
        let all = e.verses().keys().cloned().collect();
        SegmentedEdition::new(id, &e, UnitMode::Word, &all)
    }

    #[test]
    fn sid_pairs_are_unique() {
        let e = seg("e", &[("100", "a b a"), ("101", "c")]);
        let verses: BTreeSet<VerseId> = ["100", "101"].iter().map(|v| VerseId::new(*v).unwrap()).collect();
        let mut out = Vec::new();
        emit_sid_corpus(&[e], &verses, None, 1, &mut out).unwrap();
        let mut lines: Vec<String> = String::from_utf8(out).unwrap().lines().map(str::to_string).collect();
        lines.sort();
        assert_eq!(lines, ["vSID_100 e:a", "vSID_100 e:b", "vSID_101 e:c"]);
    }

    #[test]
    fn bow_uses_pivot_pairs() {
        let mut eds: Vec<SegmentedEdition> = (0..10).map(|i| seg(&format!("p{i}"), &[("1", "x")])).collect();
        eds.push(seg("t", &[("1", "y")]));
        eds.push(seg("u", &[("2", "z")]));
        let pivots: BTreeSet<String> = (0..10).map(|i| format!("p{i}")).collect();
        let verses: BTreeSet<VerseId> = [VerseId::new("1").unwrap()].into();
        let mut out = Vec::new();
        emit_bow_corpus(&eds, &pivots, &verses, None, 1, None, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 45);
        for l in text.lines() {
            let toks: Vec<&str> = l.split(' ').collect();
            assert_eq!(toks.len(), 3);
            assert!(toks.contains(&"t:y"));
            let p: BTreeSet<&str> = toks.iter().filter(|t| t.starts_with('p')).copied().collect();
            assert_eq!(p.len(), 2);
        }
        let mut capped = Vec::new();
        let stats = emit_bow_corpus(&eds, &pivots, &verses, None, 1, Some(200), &mut capped).unwrap();
        assert!(stats.lines < 45);
    }
}
