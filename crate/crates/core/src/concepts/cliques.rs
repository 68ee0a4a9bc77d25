//! Maximal clique enumeration: Bron–Kerbosch with pivoting, started from a
//! degeneracy ordering so that each top-level call only sees the later
//! neighbours of its vertex.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CliqueLimits {
    /// Abort once more than this many cliques have been reported.
    pub max_cliques: usize,
    /// Abort on graphs with more vertices than this.
    pub max_vertices: usize,
}

impl Default for CliqueLimits {
    fn default() -> Self {
        CliqueLimits {
            max_cliques: 5_000_000,
            max_vertices: 50_000_000,
        }
    }
}

/// Vertices in an order where each has few neighbours after it.
pub fn degeneracy_order(adj: &[Vec<u32>]) -> Vec<u32> {
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, u32)> = (0..adj.len() as u32).map(|v| (degree[v as usize], v)).collect();
    let mut removed = vec![false; adj.len()];
    let mut order = Vec::with_capacity(adj.len());
    while let Some((_, v)) = queue.pop_first() {
        removed[v as usize] = true;
        order.push(v);
        for &n in &adj[v as usize] {
            if !removed[n as usize] {
                queue.remove(&(degree[n as usize], n));
                degree[n as usize] -= 1;
                queue.insert((degree[n as usize], n));
            }
        }
    }
    order
}

fn intersect(sorted: &[u32], neighbors: &[u32]) -> Vec<u32> {
    sorted
        .iter()
        .copied()
        .filter(|v| neighbors.binary_search(v).is_ok())
        .collect()
}

struct Search<'a> {
    adj: &'a [Vec<u32>],
    min_size: usize,
    limits: CliqueLimits,
    out: Vec<Vec<u32>>,
}

impl Search<'_> {
    fn report(&mut self, r: &[u32]) -> Result<()> {
        let mut c = r.to_vec();
        c.sort_unstable();
        self.out.push(c);
        if self.out.len() > self.limits.max_cliques {
            return Err(Error::CliqueLimit(format!(
                "more than {} maximal cliques",
                self.limits.max_cliques
            )));
        }
        Ok(())
    }

    fn expand(&mut self, r: &mut Vec<u32>, mut p: Vec<u32>, mut x: Vec<u32>) -> Result<()> {
        if p.is_empty() {
            if x.is_empty() && r.len() >= self.min_size {
                self.report(r)?;
            }
            return Ok(());
        }
        if r.len() + p.len() < self.min_size {
            return Ok(());
        }
        let adj = self.adj;
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| (intersect(&p, &adj[u as usize]).len(), std::cmp::Reverse(u)))
            .expect("p is non-empty");
        let branch: Vec<u32> = p
            .iter()
            .copied()
            .filter(|v| adj[pivot as usize].binary_search(v).is_err())
            .collect();
        for v in branch {
            let nv = &adj[v as usize];
            r.push(v);
            self.expand(r, intersect(&p, nv), intersect(&x, nv))?;
            r.pop();
            if let Ok(i) = p.binary_search(&v) {
                p.remove(i);
            }
            if let Err(i) = x.binary_search(&v) {
                x.insert(i, v);
            }
        }
        Ok(())
    }
}

/// All maximal cliques with at least `min_size` vertices, each sorted, in
/// sorted order. `adj` must hold symmetric, sorted, loop-free neighbour lists.
pub fn maximal_cliques(adj: &[Vec<u32>], min_size: usize, limits: CliqueLimits) -> Result<Vec<Vec<u32>>> {
    if adj.len() > limits.max_vertices {
        return Err(Error::CliqueLimit(format!(
            "{} vertices exceed the limit of {}",
            adj.len(),
            limits.max_vertices
        )));
    }
    let order = degeneracy_order(adj);
    let mut position = vec![0usize; adj.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v as usize] = i;
    }
    let mut search = Search {
        adj,
        min_size,
        limits,
        out: Vec::new(),
    };
    for &v in &order {
        let (later, earlier): (Vec<u32>, Vec<u32>) = adj[v as usize]
            .iter()
            .partition(|&&n| position[n as usize] > position[v as usize]);
        search.expand(&mut vec![v], later, earlier)?;
    }
    let mut out = search.out;
    out.sort_unstable();
    Ok(out)
}

/// Symmetric sorted adjacency lists from an edge list.
pub fn adjacency_from_edges(vertices: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); vertices];
    for (a, b) in edges {
        if a != b {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}
