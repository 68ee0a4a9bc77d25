//! Concept induction from the dictionary graph.
//!
//! A concept is a set of pivot words plus the target units linked to them.
//! CLIQUE merges overlapping pivot cliques and projects them onto targets;
//! NT groups target units by their exact pivot neighbourhood, optionally
//! filtered (CC, CLIQUE, EDGE); SAMPLE groups units that occur in exactly the
//! same verses of a random subcorpus.

pub mod cliques;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{SegmentedEdition, VerseId};
use crate::error::{Error, Result};
use crate::graph::{DictionaryGraph, NormalizedAdjacency};
use crate::seed;
use crate::tsv;
use crate::unit::Unit;

pub use cliques::{maximal_cliques, CliqueLimits};

pub const DEFAULT_THETA: f64 = 0.4;
pub const DEFAULT_NU: f64 = 0.6;

/// Slack for comparisons against `ν·k`, which is rarely exact in binary.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConceptMethod {
    #[serde(rename = "CLIQUE")]
    Clique,
    #[serde(rename = "NT")]
    Nt,
    #[serde(rename = "NT_CC")]
    NtCc,
    #[serde(rename = "NT_CLIQUE")]
    NtClique,
    #[serde(rename = "NT_EDGE")]
    NtEdge,
    #[serde(rename = "SAMPLE")]
    Sample,
}

impl ConceptMethod {
    pub const ALL: [ConceptMethod; 6] = [
        ConceptMethod::Clique,
        ConceptMethod::Nt,
        ConceptMethod::NtCc,
        ConceptMethod::NtClique,
        ConceptMethod::NtEdge,
        ConceptMethod::Sample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConceptMethod::Clique => "CLIQUE",
            ConceptMethod::Nt => "NT",
            ConceptMethod::NtCc => "NT_CC",
            ConceptMethod::NtClique => "NT_CLIQUE",
            ConceptMethod::NtEdge => "NT_EDGE",
            ConceptMethod::Sample => "SAMPLE",
        }
    }
}

impl fmt::Display for ConceptMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConceptMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace(['(', ')'], "").replace('-', "_");
        ConceptMethod::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown concept method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: usize,
    pub method: ConceptMethod,
    pub pivot_words: Vec<Unit>,
    pub target_units: Vec<Unit>,
}

impl Concept {
    pub fn units(&self) -> impl Iterator<Item = &Unit> {
        self.pivot_words.iter().chain(&self.target_units)
    }

    pub fn len(&self) -> usize {
        self.pivot_words.len() + self.target_units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sorts, deduplicates and numbers concepts.
fn finalize(method: ConceptMethod, sets: impl IntoIterator<Item = (Vec<Unit>, Vec<Unit>)>) -> Vec<Concept> {
    let unique: BTreeSet<(Vec<Unit>, Vec<Unit>)> = sets
        .into_iter()
        .map(|(mut p, mut t)| {
            p.sort();
            p.dedup();
            t.sort();
            t.dedup();
            (p, t)
        })
        .filter(|(p, _)| !p.is_empty())
        .collect();
    unique
        .into_iter()
        .enumerate()
        .map(|(id, (pivot_words, target_units))| Concept {
            id,
            method,
            pivot_words,
            target_units,
        })
        .collect()
}

fn units_of(graph: &DictionaryGraph, nodes: &[u32]) -> Vec<Unit> {
    nodes.iter().map(|&n| graph.unit(n).clone()).collect()
}

/// Edges of the clique graph: two cliques overlap when
/// `|c1 ∩ c2| >= ν·min(|c1|, |c2|)`. Returned as sorted adjacency lists.
pub fn clique_graph(cliques: &[Vec<u32>], nu: f64) -> Vec<Vec<u32>> {
    let mut containing: HashMap<u32, Vec<u32>> = HashMap::new();
    for (i, c) in cliques.iter().enumerate() {
        for &v in c {
            containing.entry(v).or_default().push(i as u32);
        }
    }
    let edges: Vec<(u32, u32)> = (0..cliques.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut shared: HashMap<u32, usize> = HashMap::new();
            for v in &cliques[i] {
                for &j in &containing[v] {
                    if j as usize > i {
                        *shared.entry(j).or_insert(0) += 1;
                    }
                }
            }
            let mut out: Vec<(u32, u32)> = shared
                .into_iter()
                .filter(|&(j, k)| {
                    let m = cliques[i].len().min(cliques[j as usize].len());
                    k as f64 >= nu * m as f64 - EPS
                })
                .map(|(j, _)| (i as u32, j))
                .collect();
            out.sort_unstable();
            out
        })
        .collect();
    cliques::adjacency_from_edges(cliques.len(), edges)
}

/// CLIQUE on the pivot part: threshold `I > θ`, maximal cliques of size ≥ 3,
/// merge overlapping cliques through maximal cliques of the clique graph and
/// flatten. Returns sorted, deduplicated pivot node sets.
pub fn induce_clique_concepts(
    adjacency: &NormalizedAdjacency,
    theta: f64,
    nu: f64,
    limits: CliqueLimits,
) -> Result<Vec<Vec<u32>>> {
    let g = adjacency.threshold(theta);
    let base = maximal_cliques(&g, 3, limits)?;
    let gc = clique_graph(&base, nu);
    let metacliques = maximal_cliques(&gc, 1, limits)?;
    let flattened: BTreeSet<Vec<u32>> = metacliques
        .into_iter()
        .map(|m| {
            let words: BTreeSet<u32> = m.iter().flat_map(|&c| base[c as usize].iter().copied()).collect();
            words.into_iter().collect()
        })
        .collect();
    Ok(flattened.into_iter().collect())
}

/// Nodes outside the concept linked to at least `ν·|pivot_words|` members.
pub fn project_clique(graph: &DictionaryGraph, pivot_words: &[u32], nu: f64) -> Vec<u32> {
    let members: BTreeSet<u32> = pivot_words.iter().copied().collect();
    let mut hits: HashMap<u32, usize> = HashMap::new();
    for &p in &members {
        for (n, _) in graph.neighbors(p) {
            if !members.contains(&n) {
                *hits.entry(n).or_insert(0) += 1;
            }
        }
    }
    let need = nu * members.len() as f64 - EPS;
    let mut out: Vec<u32> = hits.into_iter().filter(|&(_, k)| k as f64 >= need).map(|(n, _)| n).collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliqueParams {
    pub theta: f64,
    pub nu: f64,
    pub limits: CliqueLimits,
}

impl Default for CliqueParams {
    fn default() -> Self {
        CliqueParams {
            theta: DEFAULT_THETA,
            nu: DEFAULT_NU,
            limits: CliqueLimits::default(),
        }
    }
}

/// CLIQUE concepts with their target projections.
pub fn clique_concepts(
    graph: &DictionaryGraph,
    adjacency: &NormalizedAdjacency,
    params: CliqueParams,
) -> Result<Vec<Concept>> {
    let pivots = induce_clique_concepts(adjacency, params.theta, params.nu, params.limits)?;
    let sets: Vec<(Vec<Unit>, Vec<Unit>)> = pivots
        .par_iter()
        .map(|p| (units_of(graph, p), units_of(graph, &project_clique(graph, p, params.nu))))
        .collect();
    Ok(finalize(ConceptMethod::Clique, sets))
}

/// Groups every node with a non-empty pivot neighbourhood by that exact
/// neighbourhood. Returns `(neighbourhood, members)` pairs sorted by
/// neighbourhood.
pub fn target_neighborhoods(graph: &DictionaryGraph) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut groups: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
    for n in 0..graph.node_count() as u32 {
        let hood = graph.pivot_neighborhood(n);
        if !hood.is_empty() {
            groups.entry(hood).or_default().push(n);
        }
    }
    let mut out: Vec<(Vec<u32>, Vec<u32>)> = groups.into_iter().collect();
    out.sort_unstable();
    out
}

/// One NT concept per distinct pivot neighbourhood.
pub fn induce_target_neighborhoods(graph: &DictionaryGraph) -> Vec<Concept> {
    let sets = target_neighborhoods(graph)
        .into_iter()
        .map(|(hood, members)| (units_of(graph, &hood), units_of(graph, &members)));
    finalize(ConceptMethod::Nt, sets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NtFilter {
    Cc,
    Clique,
    Edge,
}

impl NtFilter {
    pub fn method(self) -> ConceptMethod {
        match self {
            NtFilter::Cc => ConceptMethod::NtCc,
            NtFilter::Clique => ConceptMethod::NtClique,
            NtFilter::Edge => ConceptMethod::NtEdge,
        }
    }
}

fn is_connected(graph: &DictionaryGraph, nodes: &[u32]) -> bool {
    let Some(&start) = nodes.first() else { return false };
    let set: BTreeSet<u32> = nodes.iter().copied().collect();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for (n, _) in graph.neighbors(v) {
            if set.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == set.len()
}

fn is_complete(graph: &DictionaryGraph, nodes: &[u32]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(i, &a)| nodes[i + 1..].iter().all(|&b| graph.has_edge(a, b)))
}

/// Restricts NT concepts to connected (CC) or complete (CLIQUE) pivot sets,
/// or (EDGE) emits one two-word concept per dictionary edge inside each
/// pivot set.
pub fn filter_nt(concepts: &[Concept], graph: &DictionaryGraph, filter: NtFilter) -> Vec<Concept> {
    let mut sets = Vec::new();
    for c in concepts {
        let nodes: Vec<u32> = c.pivot_words.iter().filter_map(|u| graph.node(u)).collect();
        if nodes.len() != c.pivot_words.len() {
            continue;
        }
        match filter {
            NtFilter::Cc if is_connected(graph, &nodes) => {
                sets.push((c.pivot_words.clone(), c.target_units.clone()))
            }
            NtFilter::Clique if is_complete(graph, &nodes) => {
                sets.push((c.pivot_words.clone(), c.target_units.clone()))
            }
            NtFilter::Edge => {
                for (i, &a) in nodes.iter().enumerate() {
                    for &b in &nodes[i + 1..] {
                        if graph.has_edge(a, b) {
                            sets.push((units_of(graph, &[a, b]), c.target_units.clone()));
                        }
                    }
                }
            }
            _ => {}
        }
    }
    finalize(filter.method(), sets)
}

/// Subcorpus size drawn log-uniformly from `[2, train]`.
fn sample_size<R: Rng>(rng: &mut R, train: usize) -> usize {
    if train <= 2 {
        return train;
    }
    let x: f64 = rng.random_range((2f64).ln()..=(train as f64).ln());
    (x.exp().round() as usize).clamp(2, train)
}

/// SAMPLE concepts: for each random subcorpus, units with identical
/// occurrence sets form a group; groups spanning at least two editions and
/// containing a pivot word become concepts. Pivot-edition units form the
/// pivot side.
pub fn induce_sample_concepts(
    editions: &[SegmentedEdition],
    pivots: &BTreeSet<String>,
    train: &[VerseId],
    num_samples: usize,
    seed: u64,
) -> Vec<Concept> {
    let per_sample: Vec<Vec<(Vec<Unit>, Vec<Unit>)>> = (0..num_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed::rng(seed::derive_seed(seed, &format!("sample/{s}")));
            let k = sample_size(&mut rng, train.len());
            let mut chosen: Vec<usize> = sample(&mut rng, train.len(), k).into_vec();
            chosen.sort_unstable();
            let mut occurrences: HashMap<(usize, u32), Vec<u32>> = HashMap::new();
            for (vi, &t) in chosen.iter().enumerate() {
                for (ei, ed) in editions.iter().enumerate() {
                    let Some(ids) = ed.verses.get(&train[t]) else { continue };
                    for &id in ids {
                        let occ = occurrences.entry((ei, id)).or_default();
                        if occ.last() != Some(&(vi as u32)) {
                            occ.push(vi as u32);
                        }
                    }
                }
            }
            let mut groups: HashMap<Vec<u32>, Vec<(usize, u32)>> = HashMap::new();
            for (unit, occ) in occurrences {
                groups.entry(occ).or_default().push(unit);
            }
            let mut out = Vec::new();
            for members in groups.into_values() {
                let eds: BTreeSet<usize> = members.iter().map(|&(e, _)| e).collect();
                if eds.len() < 2 {
                    continue;
                }
                let (p, t): (Vec<(usize, u32)>, Vec<(usize, u32)>) = members
                    .into_iter()
                    .partition(|&(e, _)| pivots.contains(&editions[e].prefix));
                if p.is_empty() {
                    continue;
                }
                let to_units = |v: Vec<(usize, u32)>| v.into_iter().map(|(e, id)| editions[e].unit(id)).collect();
                out.push((to_units(p), to_units(t)));
            }
            out
        })
        .collect();
    finalize(ConceptMethod::Sample, per_sample.into_iter().flatten())
}

/// `method<TAB>id<TAB>pivot units<TAB>target units`, units space-separated.
pub fn write_concepts<W: Write>(concepts: &[Concept], mut w: W) -> io::Result<()> {
    for c in concepts {
        let join = |us: &[Unit]| us.iter().map(Unit::key).collect::<Vec<_>>().join(" ");
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            c.method,
            c.id,
            join(&c.pivot_words),
            join(&c.target_units)
        )?;
    }
    Ok(())
}

pub fn read_concepts<R: BufRead>(r: R) -> Result<Vec<Concept>> {
    let mut out = Vec::new();
    for row in tsv::rows(r, 4) {
        let (line, f) = row?;
        let parse_units = |s: &str| -> Result<Vec<Unit>> {
            s.split_whitespace().map(|u| tsv::parse_unit(u, line)).collect()
        };
        out.push(Concept {
            method: f[0].parse().map_err(|_| Error::Parse {
                path: Default::default(),
                line,
                reason: format!("unknown concept method {:?}", f[0]),
            })?,
            id: tsv::parse_u64(&f[1], line)? as usize,
            pivot_words: parse_units(&f[2])?,
            target_units: parse_units(&f[3])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Edition, UnitMode};
    use crate::graph::AlignmentWeight;

    fn u(s: &str) -> Unit {
        s.parse().unwrap()
    }

    fn w() -> AlignmentWeight {
        AlignmentWeight {
            links: 1,
            cooccurrences: 1,
            min_df: 1,
        }
    }

    fn pivot_graph(words: &[&str], edges: &[(usize, usize)]) -> DictionaryGraph {
        let eds: BTreeSet<String> = words.iter().map(|s| u(s).edition).collect();
        let mut g = DictionaryGraph::new(eds.clone(), ["t1", "t2"]).unwrap();
        for &(a, b) in edges {
            g.add_alignment_edge(&u(words[a]), &u(words[b]), w()).unwrap();
        }
        g
    }

    fn keys(us: &[Unit]) -> Vec<String> {
        us.iter().map(Unit::key).collect()
    }

    #[test]
    fn method_names_round_trip() {
        for m in ConceptMethod::ALL {
            assert_eq!(m.name().parse::<ConceptMethod>().unwrap(), m);
        }
        assert_eq!("N(t)-CC".parse::<ConceptMethod>().unwrap(), ConceptMethod::NtCc);
        assert_eq!("nt".parse::<ConceptMethod>().unwrap(), ConceptMethod::Nt);
        assert!("bogus".parse::<ConceptMethod>().is_err());
    }

    #[test]
    fn complete_four_is_one_concept() {
        let adj = NormalizedAdjacency::from_entries(
            4,
            [(0, 1, 0.5), (0, 2, 0.5), (0, 3, 0.5), (1, 2, 0.5), (1, 3, 0.5), (2, 3, 0.5)],
        );
        let c = induce_clique_concepts(&adj, 0.4, 0.6, CliqueLimits::default()).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn threshold_is_strict() {
        let adj = NormalizedAdjacency::from_entries(3, [(0, 1, 0.4), (0, 2, 0.5), (1, 2, 0.5)]);
        assert!(induce_clique_concepts(&adj, 0.4, 0.6, CliqueLimits::default()).unwrap().is_empty());
    }

    #[test]
    fn overlapping_triangles_merge() {
        // {0,1,2} and {1,2,3} share two of three nodes: 2 >= 0.6 * 3
        let adj = NormalizedAdjacency::from_entries(
            5,
            [(0, 1, 0.9), (0, 2, 0.9), (1, 2, 0.9), (1, 3, 0.9), (2, 3, 0.9), (3, 4, 0.9)],
        );
        let c = induce_clique_concepts(&adj, 0.4, 0.6, CliqueLimits::default()).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn disjoint_cliques_stay_separate() {
        let adj = NormalizedAdjacency::from_entries(
            6,
            [(0, 1, 0.9), (0, 2, 0.9), (1, 2, 0.9), (3, 4, 0.9), (3, 5, 0.9), (4, 5, 0.9), (2, 3, 0.9)],
        );
        let c = induce_clique_concepts(&adj, 0.4, 0.6, CliqueLimits::default()).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn projection_threshold_is_inclusive() {
        let words = ["a:x", "b:x", "c:x", "d:x", "e:x"];
        let mut g = pivot_graph(&words, &[]);
        let nodes: Vec<u32> = words
            .iter()
            .map(|s| {
                g.add_chi2_edge(&u(s), &u("t1:only1"), 1.0).unwrap();
                g.node(&u(s)).unwrap()
            })
            .collect();
        for s in &words[..3] {
            g.add_chi2_edge(&u(s), &u("t1:three"), 1.0).unwrap();
        }
        for s in &words[..2] {
            g.add_chi2_edge(&u(s), &u("t2:two"), 1.0).unwrap();
        }
        let got: Vec<String> = project_clique(&g, &nodes, 0.6).iter().map(|&n| g.unit(n).key()).collect();
        assert_eq!(got, ["t1:only1", "t1:three"]);
    }

    #[test]
    fn nt_groups_by_exact_neighbourhood() {
        let mut g = DictionaryGraph::new(["bis", "ium", "sag", "tpi"], ["yor2", "ac0", "x"]).unwrap();
        let hood = ["bis:Jorim", "ium:yo-lim", "sag:Yorim", "tpi:Jorim"];
        for t in ["yor2:Jórímù", "ac0:Yorim"] {
            for p in hood {
                g.add_alignment_edge(&u(p), &u(t), w()).unwrap();
            }
        }
        for p in &hood[..3] {
            g.add_alignment_edge(&u(p), &u("x:other"), w()).unwrap();
        }
        let nt = induce_target_neighborhoods(&g);
        assert_eq!(nt.len(), 2);
        let big = nt.iter().find(|c| c.pivot_words.len() == 4).unwrap();
        assert_eq!(keys(&big.pivot_words), hood);
        assert_eq!(keys(&big.target_units), ["ac0:Yorim", "yor2:Jórímù"]);
        for c in &nt {
            for t in &c.target_units {
                let n: Vec<Unit> = g.neighborhood(t).into_iter().cloned().collect();
                assert_eq!(n, c.pivot_words);
            }
        }
    }

    #[test]
    fn nt_filters() {
        let words = ["a:a", "b:b", "c:c", "d:d"];
        let mut g = pivot_graph(&words, &[(0, 1), (1, 2)]);
        let concept = |p: &[&str]| Concept {
            id: 0,
            method: ConceptMethod::Nt,
            pivot_words: p.iter().map(|s| u(s)).collect(),
            target_units: vec![u("t1:z")],
        };
        let path = [concept(&["a:a", "b:b", "c:c"])];
        assert_eq!(filter_nt(&path, &g, NtFilter::Cc).len(), 1);
        assert!(filter_nt(&path, &g, NtFilter::Clique).is_empty());
        assert_eq!(filter_nt(&path, &g, NtFilter::Edge).len(), 2);

        let pair = [concept(&["a:a", "b:b"])];
        for f in [NtFilter::Cc, NtFilter::Clique, NtFilter::Edge] {
            assert_eq!(filter_nt(&pair, &g, f).len(), 1, "{f:?}");
        }

        for (a, b) in [(0, 2), (0, 3), (1, 3), (2, 3)] {
            g.add_alignment_edge(&u(words[a]), &u(words[b]), w()).unwrap();
        }
        let full = [concept(&words)];
        let edges = filter_nt(&full, &g, NtFilter::Edge);
        assert_eq!(edges.len(), 6);
        assert!(edges.iter().all(|c| c.pivot_words.len() == 2 && keys(&c.target_units) == ["t1:z"]));
    }

    fn segmented(id: &str, verses: &[(&str, &str)]) -> SegmentedEdition {
        let e = Edition::from_verses(id, verses.iter().map(|&(v, t)| (v, t))).unwrap();
        let all = e.verses().keys().cloned().collect();
        SegmentedEdition::new(id, &e, UnitMode::Word, &all)
    }

    #[test]
    fn sample_groups_identical_occurrence_sets() {
        let p = segmented("p", &[("3", "water x"), ("17", "water y"), ("20", "x")]);
        let t = segmented("t", &[("3", "wara"), ("17", "wara"), ("20", "q")]);
        let train: Vec<VerseId> = ["3", "17", "20"].iter().map(|v| VerseId::new(*v).unwrap()).collect();
        let pivots = BTreeSet::from(["p".to_string()]);
        let concepts = induce_sample_concepts(&[p, t], &pivots, &train, 40, 1);
        assert!(concepts
            .iter()
            .any(|c| keys(&c.pivot_words) == ["p:water"] && keys(&c.target_units) == ["t:wara"]));
        for c in &concepts {
            assert!(c.pivot_words.iter().all(|u| u.edition == "p"));
            assert!(c.target_units.iter().all(|u| u.edition != "p"));
        }
        assert!(induce_sample_concepts(&[], &pivots, &train, 0, 1).is_empty());
    }

    #[test]
    fn dump_round_trip() {
        let c = vec![Concept {
            id: 3,
            method: ConceptMethod::NtEdge,
            pivot_words: vec![u("a:x"), u("b:y")],
            target_units: vec![],
        }];
        let mut out = Vec::new();
        write_concepts(&c, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "NT_EDGE\t3\ta:x b:y\t\n");
        assert_eq!(read_concepts(&out[..]).unwrap(), c);
    }
}
