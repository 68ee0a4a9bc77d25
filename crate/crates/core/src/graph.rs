//! The multipartite dictionary graph.
//!
//! Nodes are units; edges join two pivot words of different pivot editions or
//! a pivot word and a target unit. Each edge keeps one weight per dictionary
//! method that produced it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use crate::align::AlignmentEdgeSet;
use crate::chi2::Chi2Dictionary;
use crate::error::{Error, Result};
use crate::tsv;
use crate::unit::{validate_edition_id, Unit};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignmentWeight {
    pub links: u64,
    pub cooccurrences: u64,
    /// `min(f(a), f(b))` over verse frequencies.
    pub min_df: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EdgeWeights {
    pub alignment: Option<AlignmentWeight>,
    pub chi2: Option<f64>,
}

/// Denominator of the normalized adjacency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Verses in which both words occur.
    #[default]
    Cooccurrence,
    /// The smaller of the two verse frequencies.
    MinFrequency,
}

#[derive(Debug, Clone, Default)]
pub struct DictionaryGraph {
    pivots: BTreeSet<String>,
    editions: BTreeSet<String>,
    units: Vec<Unit>,
    index: HashMap<Unit, u32>,
    by_edition: BTreeMap<String, Vec<u32>>,
    adjacency: Vec<BTreeMap<u32, EdgeWeights>>,
}

impl DictionaryGraph {
    /// An empty graph over the given editions; pivots are added to the
    /// edition set if missing.
    pub fn new<P, E>(pivots: P, editions: E) -> Result<Self>
    where
        P: IntoIterator,
        P::Item: Into<String>,
        E: IntoIterator,
        E::Item: Into<String>,
    {
        let pivots: BTreeSet<String> = pivots.into_iter().map(Into::into).collect();
        let mut editions: BTreeSet<String> = editions.into_iter().map(Into::into).collect();
        editions.extend(pivots.iter().cloned());
        for e in &editions {
            validate_edition_id(e)?;
        }
        Ok(DictionaryGraph {
            pivots,
            editions,
            ..Default::default()
        })
    }

    pub fn pivots(&self) -> impl Iterator<Item = &str> {
        self.pivots.iter().map(String::as_str)
    }

    pub fn editions(&self) -> impl Iterator<Item = &str> {
        self.editions.iter().map(String::as_str)
    }

    pub fn is_pivot_edition(&self, edition: &str) -> bool {
        self.pivots.contains(edition)
    }

    pub fn node_count(&self) -> usize {
        self.units.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn node(&self, unit: &Unit) -> Option<u32> {
        self.index.get(unit).copied()
    }

    pub fn unit(&self, node: u32) -> &Unit {
        &self.units[node as usize]
    }

    pub fn is_pivot(&self, node: u32) -> bool {
        self.pivots.contains(&self.units[node as usize].edition)
    }

    /// Nodes of one edition in insertion order.
    pub fn edition_nodes(&self, edition: &str) -> &[u32] {
        self.by_edition.get(edition).map_or(&[], Vec::as_slice)
    }

    pub fn pivot_nodes(&self) -> Vec<u32> {
        (0..self.units.len() as u32).filter(|&n| self.is_pivot(n)).collect()
    }

    pub fn neighbors(&self, node: u32) -> impl Iterator<Item = (u32, &EdgeWeights)> {
        self.adjacency[node as usize].iter().map(|(&n, w)| (n, w))
    }

    pub fn edge(&self, a: u32, b: u32) -> Option<&EdgeWeights> {
        self.adjacency.get(a as usize)?.get(&b)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edge(a, b).is_some()
    }

    /// Sorted pivot neighbours of a node.
    pub fn pivot_neighborhood(&self, node: u32) -> Vec<u32> {
        self.adjacency[node as usize]
            .keys()
            .copied()
            .filter(|&n| self.is_pivot(n))
            .collect()
    }

    /// Pivot words adjacent to `unit`; empty for unknown units.
    pub fn neighborhood(&self, unit: &Unit) -> BTreeSet<&Unit> {
        match self.node(unit) {
            Some(n) => self.pivot_neighborhood(n).into_iter().map(|p| self.unit(p)).collect(),
            None => BTreeSet::new(),
        }
    }

    fn intern(&mut self, unit: &Unit) -> u32 {
        if let Some(&n) = self.index.get(unit) {
            return n;
        }
        let n = self.units.len() as u32;
        self.units.push(unit.clone());
        self.index.insert(unit.clone(), n);
        self.by_edition.entry(unit.edition.clone()).or_default().push(n);
        self.adjacency.push(BTreeMap::new());
        n
    }

    fn check_edge(&self, a: &Unit, b: &Unit) -> Result<()> {
        for u in [a, b] {
            if !self.editions.contains(&u.edition) {
                return Err(Error::UnknownEdition(u.edition.clone()));
            }
        }
        let pa = self.pivots.contains(&a.edition);
        let pb = self.pivots.contains(&b.edition);
        if a.edition == b.edition || !(pa || pb) {
            return Err(Error::InvalidEdge(a.to_string(), b.to_string()));
        }
        Ok(())
    }

    fn update(&mut self, a: &Unit, b: &Unit, f: impl Fn(&mut EdgeWeights)) -> Result<()> {
        self.check_edge(a, b)?;
        let na = self.intern(a);
        let nb = self.intern(b);
        f(self.adjacency[na as usize].entry(nb).or_default());
        f(self.adjacency[nb as usize].entry(na).or_default());
        Ok(())
    }

    /// Adds alignment links; repeated additions sum their counts.
    pub fn add_alignment_edge(&mut self, a: &Unit, b: &Unit, weight: AlignmentWeight) -> Result<()> {
        self.update(a, b, |w| {
            let cur = w.alignment.get_or_insert_with(AlignmentWeight::default);
            cur.links += weight.links;
            cur.cooccurrences += weight.cooccurrences;
            cur.min_df += weight.min_df;
        })
    }

    /// Adds a χ² edge; repeated additions sum their scores.
    pub fn add_chi2_edge(&mut self, a: &Unit, b: &Unit, score: f64) -> Result<()> {
        self.update(a, b, |w| *w.chi2.get_or_insert(0.0) += score)
    }

    pub fn add_alignment_dictionary(&mut self, dict: &AlignmentEdgeSet) -> Result<()> {
        for e in &dict.edges {
            self.add_alignment_edge(
                &e.source,
                &e.target,
                AlignmentWeight {
                    links: e.count,
                    cooccurrences: e.cooccurrences,
                    min_df: e.source_df.min(e.target_df),
                },
            )?;
        }
        Ok(())
    }

    pub fn add_chi2_dictionary(&mut self, dict: &Chi2Dictionary) -> Result<()> {
        for e in &dict.edges {
            self.add_chi2_edge(&e.source, &e.target, e.chi2)?;
        }
        Ok(())
    }

    /// Union of intra-pivot and pivot-to-target dictionaries.
    pub fn assemble<'a>(
        pivots: &[String],
        editions: &[String],
        alignment: impl IntoIterator<Item = &'a AlignmentEdgeSet>,
        chi2: impl IntoIterator<Item = &'a Chi2Dictionary>,
    ) -> Result<Self> {
        let mut g = DictionaryGraph::new(pivots.iter().cloned(), editions.iter().cloned())?;
        for d in alignment {
            g.add_alignment_dictionary(d)?;
        }
        for d in chi2 {
            g.add_chi2_dictionary(d)?;
        }
        Ok(g)
    }

    /// Relative frequency of alignment links among pivot words, clipped to 1.
    pub fn normalize(&self, normalization: Normalization) -> Result<NormalizedAdjacency> {
        let mut values = BTreeMap::new();
        for a in 0..self.units.len() as u32 {
            if !self.is_pivot(a) {
                continue;
            }
            for (&b, w) in self.adjacency[a as usize].range(a + 1..) {
                let Some(al) = w.alignment else { continue };
                if !self.is_pivot(b) || al.links == 0 {
                    continue;
                }
                let denominator = match normalization {
                    Normalization::Cooccurrence => al.cooccurrences,
                    Normalization::MinFrequency => al.min_df,
                };
                if denominator == 0 {
                    return Err(Error::InconsistentCounts {
                        left: self.unit(a).to_string(),
                        right: self.unit(b).to_string(),
                        links: al.links as f64,
                    });
                }
                values.insert((a, b), (al.links as f64 / denominator as f64).min(1.0));
            }
        }
        Ok(NormalizedAdjacency {
            nodes: self.units.len(),
            values,
        })
    }

    /// Header lines naming pivots and editions, then one line per edge and
    /// method: `a<TAB>b<TAB>alignment<TAB>links<TAB>cooccurrences<TAB>min_df`
    /// or `a<TAB>b<TAB>chi2<TAB>score`.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "#pivots\t{}", self.pivots.iter().cloned().collect::<Vec<_>>().join(" "))?;
        writeln!(w, "#editions\t{}", self.editions.iter().cloned().collect::<Vec<_>>().join(" "))?;
        let mut lines = Vec::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            let ua = &self.units[a];
            for (&b, weights) in adj {
                let ub = &self.units[b as usize];
                if ua >= ub {
                    continue;
                }
                let (ka, kb) = (ua.key(), ub.key());
                if let Some(al) = weights.alignment {
                    lines.push(format!(
                        "{ka}\t{kb}\talignment\t{}\t{}\t{}",
                        al.links, al.cooccurrences, al.min_df
                    ));
                }
                if let Some(score) = weights.chi2 {
                    lines.push(format!("{ka}\t{kb}\tchi2\t{score}"));
                }
            }
        }
        lines.sort();
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut pivots: Option<Vec<String>> = None;
        let mut editions: Option<Vec<String>> = None;
        let mut graph: Option<DictionaryGraph> = None;
        let parse_err = |line: usize, reason: &str| Error::Parse {
            path: Default::default(),
            line,
            reason: reason.to_string(),
        };
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("", e))?;
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#pivots\t") {
                pivots = Some(rest.split_whitespace().map(str::to_string).collect());
                continue;
            }
            if let Some(rest) = line.strip_prefix("#editions\t") {
                editions = Some(rest.split_whitespace().map(str::to_string).collect());
                continue;
            }
            let g = match &mut graph {
                Some(g) => g,
                None => {
                    let (Some(p), Some(e)) = (&pivots, &editions) else {
                        return Err(parse_err(lineno, "edge before #pivots / #editions header"));
                    };
                    graph.insert(DictionaryGraph::new(p.clone(), e.clone())?)
                }
            };
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || parse_err(lineno, "malformed edge line");
            if f.len() < 4 {
                return Err(bad());
            }
            let a = tsv::parse_unit(f[0], lineno)?;
            let b = tsv::parse_unit(f[1], lineno)?;
            match (f[2], f.len()) {
                ("alignment", 6) => g.add_alignment_edge(
                    &a,
                    &b,
                    AlignmentWeight {
                        links: tsv::parse_u64(f[3], lineno)?,
                        cooccurrences: tsv::parse_u64(f[4], lineno)?,
                        min_df: tsv::parse_u64(f[5], lineno)?,
                    },
                )?,
                ("chi2", 4) => g.add_chi2_edge(&a, &b, tsv::parse_f64(f[3], lineno)?)?,
                _ => return Err(bad()),
            }
        }
        match graph {
            Some(g) => Ok(g),
            None => match (pivots, editions) {
                (Some(p), Some(e)) => DictionaryGraph::new(p, e),
                _ => Err(parse_err(0, "missing #pivots / #editions header")),
            },
        }
    }
}

/// Sparse symmetric matrix of normalized link frequencies between pivot
/// words, indexed by graph node ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalizedAdjacency {
    nodes: usize,
    values: BTreeMap<(u32, u32), f64>,
}

impl NormalizedAdjacency {
    /// Builds a matrix directly from `(i, j, value)` entries.
    pub fn from_entries(nodes: usize, entries: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let values = entries
            .into_iter()
            .filter(|(i, j, _)| i != j)
            .map(|(i, j, v)| ((i.min(j), i.max(j)), v))
            .collect();
        NormalizedAdjacency { nodes, values }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.values.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.values.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    /// Sorted adjacency lists of the graph with edges `I_ij > theta`.
    pub fn threshold(&self, theta: f64) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for (&(i, j), &v) in &self.values {
            if v > theta {
                adj[i as usize].push(j);
                adj[j as usize].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }
}
