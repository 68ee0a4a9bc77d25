//! Dictionary-only roundtrip: four hops through the dictionary graph,
//! query → pivot → target → pivot → query edition.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{hit, QueryOutcome, QuerySet, RoundtripReport, Setting};
use crate::corpus::base_edition;
use crate::graph::{DictionaryGraph, EdgeWeights};
use crate::unit::Unit;

/// Alignment link counts dominate χ² scores when both are present.
fn strength(w: &EdgeWeights) -> (f64, f64) {
    (
        w.alignment.map_or(0.0, |a| a.links as f64),
        w.chi2.unwrap_or(0.0),
    )
}

/// The neighbour of `node` in `edition` with the heaviest edge; ties go to
/// the lexicographically smaller unit.
fn closest(graph: &DictionaryGraph, node: u32, edition: &str) -> Option<u32> {
    graph
        .neighbors(node)
        .filter(|&(n, _)| graph.unit(n).edition == edition)
        .max_by(|a, b| {
            let (sa, sb) = (strength(a.1), strength(b.1));
            sa.0.total_cmp(&sb.0)
                .then(sa.1.total_cmp(&sb.1))
                .then_with(|| graph.unit(b.0).cmp(graph.unit(a.0)))
        })
        .map(|(n, _)| n)
}

/// Follows `q → p → t → p′ → q′`. Returns `q′`, or `None` when a hop has
/// no dictionary edge.
pub fn rtsimple_chain(graph: &DictionaryGraph, query: &Unit, pivot: &str, target: &str) -> Option<Unit> {
    let q = graph.node(query)?;
    let p = closest(graph, q, pivot)?;
    let t = closest(graph, p, target)?;
    let p2 = closest(graph, t, pivot)?;
    let q2 = closest(graph, p2, &query.edition)?;
    Some(graph.unit(q2).clone())
}

/// Scores the S1 and R1 settings: per target edition, the share of pivot
/// editions whose chain returns a ground-truth unit. Pivots equal to the
/// query or target edition are skipped, and so are target editions left
/// without any pivot.
pub fn rtsimple(graph: &DictionaryGraph, queries: &QuerySet, editions: &[String]) -> RoundtripReport {
    let settings = vec![Setting::S1, Setting::R1];
    let own = base_edition(&queries.edition);
    let pivots: Vec<&str> = graph.pivots().filter(|p| base_edition(p) != own).collect();
    let editions: Vec<String> = editions.iter().filter(|e| pivots.iter().any(|p| p != e)).cloned().collect();
    let outcomes = queries
        .queries
        .par_iter()
        .map(|query| {
            let unit: Option<Unit> = query.candidates.iter().filter_map(|c| c.parse().ok()).find(|u| graph.node(u).is_some());
            let mut scores = vec![vec![0.0; editions.len()]; settings.len()];
            if let Some(unit) = &unit {
                for (ei, e) in editions.iter().enumerate() {
                    let usable: Vec<&str> = pivots.iter().copied().filter(|p| p != e).collect();
                    for p in &usable {
                        let Some(back) = rtsimple_chain(graph, unit, p, e) else { continue };
                        let back = BTreeSet::from([back.key()]);
                        for (si, s) in settings.iter().enumerate() {
                            scores[si][ei] += hit(&back, query.truth(s.truth)) / usable.len() as f64;
                        }
                    }
                }
            }
            QueryOutcome {
                word: query.word.clone(),
                covered: unit.is_some(),
                scores,
            }
        })
        .collect();
    RoundtripReport {
        settings,
        editions,
        queries: outcomes,
    }
}
