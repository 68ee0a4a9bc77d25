use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Method;
use crate::eval::{RoundtripReport, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingScore {
    pub setting: Setting,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub positive_f1: f64,
    pub negative_f1: f64,
}

/// Scores of one method as stored in `eval/results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub settings: Vec<SettingScore>,
    /// Queries with a representation in the method's space or graph.
    pub coverage: usize,
    pub queries: usize,
    pub sentiment: Option<SentimentScores>,
    /// Mean S1 precision per target edition.
    pub edition_accuracy: BTreeMap<String, f64>,
}

impl MethodResult {
    pub fn from_report(method: Method, rt: &RoundtripReport, sentiment: Option<SentimentScores>) -> Self {
        let settings = rt
            .settings
            .iter()
            .enumerate()
            .map(|(i, &setting)| {
                let s = rt.summary(i);
                SettingScore {
                    setting,
                    mean: s.mean,
                    median: s.median,
                }
            })
            .collect();
        let edition_accuracy = rt
            .setting_index(Setting::S1)
            .map(|i| rt.edition_accuracy(i))
            .unwrap_or_default();
        MethodResult {
            method,
            settings,
            coverage: rt.coverage(),
            queries: rt.queries.len(),
            sentiment,
            edition_accuracy,
        }
    }

    pub fn score(&self, setting: Setting) -> Option<&SettingScore> {
        self.settings.iter().find(|s| s.setting == setting)
    }
}

/// Rendered report files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportTables {
    pub tsv: String,
    pub text: String,
    pub editions: String,
}

/// Per-edition S1 accuracy of every method, with the difference to the
/// first method in report order.
#[derive(Debug, Clone, PartialEq)]
pub struct EditionTable {
    pub methods: Vec<Method>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl EditionTable {
    pub fn new(results: &[MethodResult]) -> Self {
        let mut editions: Vec<&String> = results.iter().flat_map(|r| r.edition_accuracy.keys()).collect();
        editions.sort();
        editions.dedup();
        let rows = editions
            .into_iter()
            .map(|e| (e.clone(), results.iter().map(|r| r.edition_accuracy.get(e).copied()).collect()))
            .collect();
        EditionTable {
            methods: results.iter().map(|r| r.method).collect(),
            rows,
        }
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{:.1}", 100.0 * x))
}

pub fn render_report(results: &[MethodResult], settings: &[Setting]) -> ReportTables {
    let mut results = results.to_vec();
    results.sort_by_key(|r| r.method);

    let mut header = vec!["method".to_string()];
    for s in settings {
        header.push(format!("{s}_mean"));
        header.push(format!("{s}_median"));
    }
    header.extend(["N", "coverage", "pos_F1", "neg_F1"].map(String::from));

    let mut tsv = header.join("\t");
    tsv.push('\n');
    let mut cells: Vec<Vec<String>> = Vec::new();
    for r in &results {
        let mut row = vec![r.method.to_string()];
        let mut text_row = vec![r.method.to_string()];
        for &s in settings {
            let sc = r.score(s);
            row.push(num(sc.map(|x| x.mean)));
            row.push(num(sc.map(|x| x.median)));
            text_row.push(pct(sc.map(|x| x.mean)));
            text_row.push(pct(sc.map(|x| x.median)));
        }
        row.push(r.queries.to_string());
        row.push(r.coverage.to_string());
        text_row.push(r.queries.to_string());
        text_row.push(r.coverage.to_string());
        for f in [r.sentiment.map(|s| s.positive_f1), r.sentiment.map(|s| s.negative_f1)] {
            row.push(num(f));
            text_row.push(pct(f));
        }
        tsv.push_str(&row.join("\t"));
        tsv.push('\n');
        cells.push(text_row);
    }

    let mut text_header = vec!["method".to_string()];
    for s in settings {
        text_header.push(format!("{s} μ"));
        text_header.push(format!("{s} Md"));
    }
    text_header.extend(["N", "cov", "pos F1", "neg F1"].map(String::from));
    let text = align_columns(&text_header, &cells);

    let table = EditionTable::new(&results);
    let mut editions = String::from("edition");
    for (i, m) in table.methods.iter().enumerate() {
        write!(editions, "\t{m}").unwrap();
        if i > 0 {
            write!(editions, "\tdelta_{m}").unwrap();
        }
    }
    editions.push('\n');
    for (e, vals) in &table.rows {
        editions.push_str(e);
        for (i, v) in vals.iter().enumerate() {
            write!(editions, "\t{}", num(*v)).unwrap();
            if i > 0 {
                let d = v.zip(vals[0]).map(|(a, b)| a - b);
                write!(editions, "\t{}", d.map_or_else(|| "n/a".into(), |x| format!("{x:+.4}"))).unwrap();
            }
        }
        editions.push('\n');
    }

    ReportTables { tsv, text, editions }
}

fn align_columns(header: &[String], rows: &[Vec<String>]) -> String {
    let width = |c: &str| c.chars().count();
    let mut widths: Vec<usize> = header.iter().map(|h| width(h)).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(width(c));
        }
    }
    let mut out = String::new();
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                let pad = " ".repeat(w - width(c));
                if i == 0 { format!("{c}{pad}") } else { format!("{pad}{c}") }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::ConceptMethod;

    fn result(method: Method, s1: f64, sentiment: bool) -> MethodResult {
        MethodResult {
            method,
            settings: vec![SettingScore {
                setting: Setting::S1,
                mean: s1,
                median: 1.0,
            }],
            coverage: 3,
            queries: 4,
            sentiment: sentiment.then_some(SentimentScores {
                positive_f1: 0.5,
                negative_f1: 0.25,
            }),
            edition_accuracy: [("a".to_string(), s1)].into_iter().collect(),
        }
    }

    #[test]
    fn rows_follow_method_order_and_mark_missing_cells() {
        let results = vec![
            result(Method::Rtsimple, 0.5, false),
            result(Method::Concepts(ConceptMethod::Nt), 0.75, true),
        ];
        let t = render_report(&results, &[Setting::S1, Setting::S4]);
        let lines: Vec<&str> = t.tsv.lines().collect();
        assert_eq!(lines[0], "method\tS1_mean\tS1_median\tS4_mean\tS4_median\tN\tcoverage\tpos_F1\tneg_F1");
        assert_eq!(lines[1], "NT\t0.7500\t1.0000\tn/a\tn/a\t4\t3\t0.5000\t0.2500");
        assert!(lines[2].starts_with("RTSIMPLE\t0.5000"));
        assert!(lines[2].ends_with("n/a\tn/a"));
        assert!(t.text.lines().nth(1).unwrap().contains("75.0"));
        assert_eq!(t.editions, "edition\tNT\tRTSIMPLE\tdelta_RTSIMPLE\na\t0.7500\t0.5000\t-0.2500\n");
    }

    #[test]
    fn results_round_trip_through_json() {
        let r = result(Method::Sid, 0.1, true);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<MethodResult>(&s).unwrap(), r);
    }
}
