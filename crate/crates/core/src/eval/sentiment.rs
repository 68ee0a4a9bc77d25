//! Verse-level sentiment classification over IDF-weighted sums of unit
//! embeddings, with a linear SVM trained by Pegasos-style subgradient steps.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::VerseId;
use crate::embed::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::seed;
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerseLabel {
    pub positive: bool,
    pub negative: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLabels {
    pub labels: BTreeMap<VerseId, VerseLabel>,
}

/// Rows `verse_id<TAB>pos|nonpos<TAB>neg|nonneg`.
pub fn read_labels<R: BufRead>(r: R) -> Result<SentimentLabels> {
    let mut out = SentimentLabels::default();
    for row in tsv::rows(r, 3) {
        let (line, f) = row?;
        let bad = |reason: String| Error::Parse {
            path: Default::default(),
            line,
            reason,
        };
        let verse = VerseId::new(f[0].as_str()).map_err(|_| bad(format!("invalid verse id {:?}", f[0])))?;
        let positive = match f[1].as_str() {
            "pos" => true,
            "nonpos" => false,
            x => return Err(bad(format!("expected pos or nonpos, found {x:?}"))),
        };
        let negative = match f[2].as_str() {
            "neg" => true,
            "nonneg" => false,
            x => return Err(bad(format!("expected neg or nonneg, found {x:?}"))),
        };
        out.labels.insert(verse, VerseLabel { positive, negative });
    }
    Ok(out)
}

/// `idf(u) = ln(N / df(u))` over training verses given as unit keys.
pub fn idf_table<I, V, S>(verses: I) -> HashMap<String, f64>
where
    I: IntoIterator<Item = V>,
    V: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut df: HashMap<String, u64> = HashMap::new();
    let mut n = 0u64;
    for v in verses {
        n += 1;
        let unique: HashSet<String> = v.into_iter().map(|s| s.as_ref().to_string()).collect();
        for u in unique {
            *df.entry(u).or_insert(0) += 1;
        }
    }
    df.into_iter()
        .map(|(u, d)| (u, (n as f64 / d as f64).ln()))
        .collect()
}

/// `Σ idf(u)·vec(u)` over the verse's unit tokens that are both in the
/// space and in the IDF table. The flag is false when nothing contributed.
pub fn verse_vector(space: &EmbeddingSpace, units: &[String], idf: &HashMap<String, f64>) -> (Vec<f64>, bool) {
    let mut v = vec![0.0; space.dim()];
    let mut any = false;
    for u in units {
        let (Some(x), Some(&w)) = (space.vector(u), idf.get(u)) else { continue };
        any = true;
        for (a, &b) in v.iter_mut().zip(x) {
            *a += w * b as f64;
        }
    }
    (v, any)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Inverse regularization strength; `λ = 1 / (C n)`.
    pub c: f64,
    pub epochs: usize,
    /// Value of the constant feature that carries the bias.
    pub bias: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 50,
            bias: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias_weight: f64,
    pub bias_feature: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias_weight * self.bias_feature
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }
}

/// Hinge loss with L2 regularization, one pass over a shuffled order per
/// epoch with step size `1 / (λ t)`.
pub fn train_svm(x: &[Vec<f64>], y: &[bool], config: &SvmConfig) -> Result<LinearSvm> {
    assert_eq!(x.len(), y.len(), "one label per example");
    if !y.iter().any(|&l| l) || y.iter().all(|&l| l) {
        return Err(Error::SingleClass);
    }
    let dim = x[0].len();
    let lambda = 1.0 / (config.c * x.len() as f64);
    let mut svm = LinearSvm {
        weights: vec![0.0; dim],
        bias_weight: 0.0,
        bias_feature: config.bias,
    };
    let mut rng = seed::rng(seed::derive_seed(config.seed, "svm"));
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let label = if y[i] { 1.0 } else { -1.0 };
            let margin = label * svm.decision(&x[i]);
            let shrink = 1.0 - eta * lambda;
            for w in svm.weights.iter_mut() {
                *w *= shrink;
            }
            svm.bias_weight *= shrink;
            if margin < 1.0 {
                for (w, v) in svm.weights.iter_mut().zip(&x[i]) {
                    *w += eta * label * v;
                }
                svm.bias_weight += eta * label * config.bias;
            }
        }
    }
    Ok(svm)
}

/// F1 of the positive class; 0 when there are no true positives.
pub fn f1_score(predicted: &[bool], gold: &[bool]) -> f64 {
    let tp = predicted.iter().zip(gold).filter(|(p, g)| **p && **g).count() as f64;
    let fp = predicted.iter().zip(gold).filter(|(p, g)| **p && !**g).count() as f64;
    let fn_ = predicted.iter().zip(gold).filter(|(p, g)| !**p && **g).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// Expected F1 of a classifier that ignores its input and predicts the
/// positive class with probability `rate` when the positive share is `prior`.
pub fn chance_f1(prior: f64, rate: f64) -> f64 {
    if prior + rate == 0.0 {
        0.0
    } else {
        2.0 * prior * rate / (prior + rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVerse {
    pub units: Vec<String>,
    pub label: VerseLabel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentResult {
    pub positive_f1: f64,
    pub negative_f1: f64,
    pub train_verses: usize,
    pub test_verses: usize,
    /// Test verses without any contributing unit.
    pub empty_test_vectors: usize,
}

/// Trains one classifier per binary task on `train` and scores F1 pooled
/// over `test`.
pub fn evaluate_sentiment(
    space: &EmbeddingSpace,
    train: &[LabeledVerse],
    test: &[LabeledVerse],
    idf: &HashMap<String, f64>,
    config: &SvmConfig,
) -> Result<SentimentResult> {
    let xtr: Vec<Vec<f64>> = train.iter().map(|v| verse_vector(space, &v.units, idf).0).collect();
    let xte: Vec<(Vec<f64>, bool)> = test.iter().map(|v| verse_vector(space, &v.units, idf)).collect();
    let task = |pick: fn(&VerseLabel) -> bool| -> Result<f64> {
        let y: Vec<bool> = train.iter().map(|v| pick(&v.label)).collect();
        let svm = train_svm(&xtr, &y, config)?;
        let pred: Vec<bool> = xte.iter().map(|(x, _)| svm.predict(x)).collect();
        let gold: Vec<bool> = test.iter().map(|v| pick(&v.label)).collect();
        Ok(f1_score(&pred, &gold))
    };
    Ok(SentimentResult {
        positive_f1: task(|l| l.positive)?,
        negative_f1: task(|l| l.negative)?,
        train_verses: train.len(),
        test_verses: test.len(),
        empty_test_vectors: xte.iter().filter(|(_, any)| !any).count(),
    })
}
