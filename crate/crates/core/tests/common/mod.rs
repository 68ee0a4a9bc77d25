//! Independent reference implementations used as oracles by the
//! integration tests. They favour directness over speed.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use concept_embed::corpus::{Edition, SegmentedEdition, UnitMode, VerseId};
use concept_embed::graph::DictionaryGraph;

/// Builds a segmented edition from texts numbered as consecutive verses.
pub fn segmented(prefix: &str, texts: &[String], mode: UnitMode) -> SegmentedEdition {
    let edition = Edition::from_verses(prefix, texts.iter().enumerate().map(|(i, t)| (verse_id(i), t.clone()))).unwrap();
    let all: BTreeSet<VerseId> = edition.verses().keys().cloned().collect();
    SegmentedEdition::new(prefix, &edition, mode, &all)
}

pub fn verse_id(i: usize) -> String {
    format!("{}", 40_001_001 + i)
}

/// One step of the reference χ² greedy selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSelection {
    pub pass: u32,
    pub f_max: u64,
    pub source: u32,
    pub target: u32,
    pub targets: Vec<u32>,
}

/// χ² of the 2x2 presence table as an exact fraction `(numerator, denominator)`.
fn chi2_fraction(c: u64, fs: u64, ft: u64, n: u64) -> (u128, u128) {
    if fs == 0 || ft == 0 || fs == n || ft == n {
        return (0, 1);
    }
    let (c, fs, ft, n) = (c as i128, fs as i128, ft as i128, n as i128);
    let (a, b, cc, d) = (c, fs - c, ft - c, n - fs - ft + c);
    let diff = a * d - b * cc;
    ((n * diff * diff) as u128, (fs * (n - fs) * ft * (n - ft)) as u128)
}

/// Brute-force χ² greedy selection: at every step scan every unit pair.
pub fn chi2_reference(src: &SegmentedEdition, tgt: &SegmentedEdition, chi_min: u64, d_max: u32) -> Vec<ReferenceSelection> {
    let shared: Vec<(BTreeSet<u32>, BTreeSet<u32>)> = src
        .verses
        .iter()
        .filter_map(|(v, s)| tgt.verses.get(v).map(|t| (s.iter().copied().collect(), t.iter().copied().collect())))
        .collect();
    let n = shared.len() as u64;
    let (ns, nt) = (src.vocab_len() as u32, tgt.vocab_len() as u32);
    let mut fs = vec![0u64; ns as usize];
    let mut ft = vec![0u64; nt as usize];
    let mut c: HashMap<(u32, u32), u64> = HashMap::new();
    for (s, t) in &shared {
        for &a in s {
            fs[a as usize] += 1;
        }
        for &b in t {
            ft[b as usize] += 1;
        }
        for &a in s {
            for &b in t {
                *c.entry((a, b)).or_default() += 1;
            }
        }
    }
    let cst = |s: u32, t: u32| c.get(&(s, t)).copied().unwrap_or(0);
    let score = |s: u32, t: u32| chi2_fraction(cst(s, t), fs[s as usize], ft[t as usize], n);
    let band = |f: u64, f_max: u64| {
        let lo = (f_max.min(5) as f64).max(f_max as f64 / 10.0);
        f as f64 >= lo && f <= f_max
    };
    // Larger is better: χ², then smaller frequencies, then surface order.
    let key = |s: u32, t: u32| {
        (
            score(s, t),
            Reverse(fs[s as usize]),
            Reverse(ft[t as usize]),
            Reverse(src.surface(s).to_vec()),
            Reverse(tgt.surface(t).to_vec()),
        )
    };
    type Key = ((u128, u128), Reverse<u64>, Reverse<u64>, Reverse<Vec<u8>>, Reverse<Vec<u8>>);
    let better = |a: &Key, b: &Key| -> bool {
        let (x, y) = (a.0 .0 * b.0 .1, b.0 .0 * a.0 .1);
        x > y || (x == y && (&a.1, &a.2, &a.3, &a.4) > (&b.1, &b.2, &b.3, &b.4))
    };

    let mut removed: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut sdeg = vec![0u32; ns as usize];
    let mut tdeg = vec![0u32; nt as usize];
    let mut out = Vec::new();
    for pass in 1..=d_max {
        for f_max in 2..=n {
            loop {
                let eligible = |s: u32, t: u32, removed: &BTreeSet<(u32, u32)>, sdeg: &[u32], tdeg: &[u32]| {
                    let k = cst(s, t);
                    !removed.contains(&(s, t))
                        && k >= 1
                        && k * n > fs[s as usize] * ft[t as usize]
                        && band(fs[s as usize], f_max)
                        && band(ft[t as usize], f_max)
                        && sdeg[s as usize] < pass
                        && tdeg[t as usize] < pass
                        && {
                            let (num, den) = score(s, t);
                            num >= chi_min as u128 * den
                        }
                };
                let mut best: Option<(u32, u32)> = None;
                for s in 0..ns {
                    for t in 0..nt {
                        if eligible(s, t, &removed, &sdeg, &tdeg)
                            && best.is_none_or(|(bs, bt)| better(&key(s, t), &key(bs, bt)))
                        {
                            best = Some((s, t));
                        }
                    }
                }
                let Some((s, t)) = best else { break };
                let mut targets = vec![t];
                if let UnitMode::Char { .. } = tgt.mode {
                    for right in [true, false] {
                        let mut edge = t;
                        loop {
                            let e = tgt.surface(edge).to_vec();
                            let mut next: Option<u32> = None;
                            for cand in 0..nt {
                                let g = tgt.surface(cand);
                                let adjacent = g.len() == e.len()
                                    && e.len() >= 2
                                    && if right { g[..g.len() - 1] == e[1..] } else { g[1..] == e[..e.len() - 1] };
                                if adjacent
                                    && !targets.contains(&cand)
                                    && eligible(s, cand, &removed, &sdeg, &tdeg)
                                    && next.is_none_or(|b| better(&key(s, cand), &key(s, b)))
                                {
                                    next = Some(cand);
                                }
                            }
                            match next {
                                Some(x) => {
                                    targets.push(x);
                                    edge = x;
                                }
                                None => break,
                            }
                        }
                    }
                }
                for &x in &targets {
                    removed.insert((s, x));
                }
                sdeg[s as usize] += 1;
                tdeg[t as usize] += 1;
                out.push(ReferenceSelection {
                    pass,
                    f_max,
                    source: s,
                    target: t,
                    targets,
                });
            }
        }
    }
    out
}

/// Maximal cliques of size at least `min_size` by enumerating every subset.
pub fn exhaustive_maximal_cliques(n: usize, adjacent: &dyn Fn(usize, usize) -> bool, min_size: usize) -> BTreeSet<Vec<u32>> {
    assert!(n <= 20, "exhaustive enumeration is exponential");
    let is_clique = |mask: u32| {
        (0..n).all(|i| mask & (1 << i) == 0 || (i + 1..n).all(|j| mask & (1 << j) == 0 || adjacent(i, j)))
    };
    let cliques: Vec<u32> = (1u32..1 << n).filter(|&m| is_clique(m)).collect();
    let clique_set: BTreeSet<u32> = cliques.iter().copied().collect();
    cliques
        .into_iter()
        .filter(|&m| (0..n).all(|v| m & (1 << v) != 0 || !clique_set.contains(&(m | 1 << v))))
        .filter(|m| m.count_ones() as usize >= min_size)
        .map(|m| (0..n as u32).filter(|&v| m & (1 << v) != 0).collect())
        .collect()
}

/// Maximal cliques by plain Bron–Kerbosch without pivoting.
pub fn basic_maximal_cliques(n: usize, adjacent: &dyn Fn(usize, usize) -> bool, min_size: usize) -> BTreeSet<Vec<u32>> {
    fn go(
        r: &mut Vec<u32>,
        p: Vec<u32>,
        x: Vec<u32>,
        adjacent: &dyn Fn(usize, usize) -> bool,
        min_size: usize,
        out: &mut BTreeSet<Vec<u32>>,
    ) {
        if p.is_empty() && x.is_empty() {
            if r.len() >= min_size {
                let mut c = r.clone();
                c.sort_unstable();
                out.insert(c);
            }
            return;
        }
        let mut p = p;
        let mut x = x;
        while let Some(v) = p.pop() {
            let nb = |w: &u32| adjacent(v as usize, *w as usize);
            r.push(v);
            go(r, p.iter().copied().filter(nb).collect(), x.iter().copied().filter(nb).collect(), adjacent, min_size, out);
            r.pop();
            x.push(v);
        }
    }
    let mut out = BTreeSet::new();
    go(&mut Vec::new(), (0..n as u32).collect(), Vec::new(), adjacent, min_size, &mut out);
    out
}

/// Clique graph edges straight from the overlap rule, over all pairs.
pub fn direct_clique_graph(cliques: &[Vec<u32>], nu: f64) -> BTreeSet<(u32, u32)> {
    let mut edges = BTreeSet::new();
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            let a: BTreeSet<u32> = cliques[i].iter().copied().collect();
            let shared = cliques[j].iter().filter(|v| a.contains(v)).count();
            let m = cliques[i].len().min(cliques[j].len());
            if shared as f64 + 1e-9 >= nu * m as f64 {
                edges.insert((i as u32, j as u32));
            }
        }
    }
    edges
}

/// Threshold, cliques ≥ 3, overlap graph, metacliques, flatten.
pub fn direct_clique_concepts(n: usize, weight: &dyn Fn(usize, usize) -> f64, theta: f64, nu: f64) -> BTreeSet<Vec<u32>> {
    let base: Vec<Vec<u32>> = exhaustive_maximal_cliques(n, &|i, j| weight(i, j) > theta, 3).into_iter().collect();
    let cg = direct_clique_graph(&base, nu);
    let meta = basic_maximal_cliques(
        base.len(),
        &|i, j| cg.contains(&(i.min(j) as u32, i.max(j) as u32)),
        1,
    );
    meta.into_iter()
        .map(|m| {
            let words: BTreeSet<u32> = m.iter().flat_map(|&c| base[c as usize].iter().copied()).collect();
            words.into_iter().collect()
        })
        .collect()
}

/// Groups nodes with identical, non-empty pivot neighbourhoods by comparing
/// every pair of nodes.
pub fn pairwise_neighborhood_groups(graph: &DictionaryGraph) -> BTreeSet<(Vec<u32>, Vec<u32>)> {
    let n = graph.node_count() as u32;
    let pivots: Vec<u32> = (0..n).filter(|&p| graph.is_pivot_edition(&graph.unit(p).edition)).collect();
    let hood: Vec<Vec<u32>> = (0..n)
        .map(|t| pivots.iter().copied().filter(|&p| graph.has_edge(t, p)).collect())
        .collect();
    let mut group_of: Vec<Option<usize>> = vec![None; n as usize];
    let mut groups: Vec<Vec<u32>> = Vec::new();
    for a in 0..n as usize {
        if hood[a].is_empty() || group_of[a].is_some() {
            continue;
        }
        group_of[a] = Some(groups.len());
        let mut members = vec![a as u32];
        for b in a + 1..n as usize {
            if hood[b] == hood[a] {
                group_of[b] = Some(groups.len());
                members.push(b as u32);
            }
        }
        groups.push(members);
    }
    groups.into_iter().map(|m| (hood[m[0] as usize].clone(), m)).collect()
}

/// Central finite-difference gradient.
pub fn numeric_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Counts per distinct element.
pub fn histogram<T: Ord + Clone>(items: &[T]) -> BTreeMap<T, usize> {
    let mut h = BTreeMap::new();
    for x in items {
        *h.entry(x.clone()).or_default() += 1;
    }
    h
}
