//! Synthetic verse-aligned corpora: one base edition drawn from a topic
//! mixture over Zipf-distributed lemmas, plus editions that are bijective
//! token ciphers of it. Optional noise drops verses and replaces tokens
//! independently per edition.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::corpus::{Edition, VerseId};
use crate::error::{Error, Result};
use crate::eval::{LemmaTable, SentimentLabels, VerseLabel};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub verses: usize,
    pub ciphers: usize,
    pub lemmas: usize,
    pub topics: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub zipf_exponent: f64,
    /// Share of each verse's tokens drawn from its topic.
    pub topic_weight: f64,
    /// Probability that an edition lacks a verse.
    pub drop_rate: f64,
    /// Probability that a token is replaced by a random type of its edition.
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            verses: 2000,
            ciphers: 11,
            lemmas: 400,
            topics: 12,
            min_len: 6,
            max_len: 16,
            zipf_exponent: 1.0,
            topic_weight: 0.5,
            drop_rate: 0.0,
            noise_rate: 0.0,
            seed: 1,
        }
    }
}

pub const BASE_EDITION: &str = "base";

pub fn cipher_id(k: usize) -> String {
    format!("c{k:02}")
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub editions: Vec<Edition>,
    /// Forms of each lemma in the base edition; the first form is the stem.
    pub lemma_forms: Vec<Vec<String>>,
    /// Per cipher edition, the base form → cipher form map.
    pub ciphers: BTreeMap<String, HashMap<String, String>>,
    pub positive_lemmas: Vec<usize>,
    pub negative_lemmas: Vec<usize>,
    pub labels: SentimentLabels,
}

struct WordMaker {
    consonants: Vec<u8>,
    vowels: Vec<u8>,
    min_syllables: usize,
    max_syllables: usize,
}

impl WordMaker {
    fn make(&self, rng: &mut ChaCha8Rng) -> String {
        let n = rng.random_range(self.min_syllables..=self.max_syllables);
        let mut w = Vec::with_capacity(2 * n);
        for _ in 0..n {
            w.push(*self.consonants.choose(rng).expect("non-empty"));
            w.push(*self.vowels.choose(rng).expect("non-empty"));
        }
        String::from_utf8(w).expect("ascii")
    }
}

fn verse_id(i: usize) -> String {
    format!("{:02}{:03}{:03}", 40 + i / 1000, (i % 1000) / 40 + 1, i % 40 + 1)
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-s)).collect()
}

fn base_lemmas(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let maker = WordMaker {
        consonants: b"bdfgklmnprstvz".to_vec(),
        vowels: b"aeiou".to_vec(),
        min_syllables: 1,
        max_syllables: 3,
    };
    let mut taken = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let stem = maker.make(rng);
        let forms: Vec<String> = match rng.random_range(0..3) {
            0 => vec![stem.clone()],
            1 => vec![stem.clone(), format!("{stem}s")],
            _ => vec![stem.clone(), format!("{stem}s"), format!("{stem}d")],
        };
        if forms.iter().any(|f| taken.contains(f)) {
            continue;
        }
        taken.extend(forms.iter().cloned());
        out.push(forms);
    }
    out
}

fn cipher_map(forms: &[String], rng: &mut ChaCha8Rng) -> HashMap<String, String> {
    let mut consonants = b"bcdfghjklmnpqrstvwxz".to_vec();
    consonants.shuffle(rng);
    consonants.truncate(9);
    let mut vowels = b"aeiouy".to_vec();
    vowels.shuffle(rng);
    vowels.truncate(4);
    let maker = WordMaker {
        consonants,
        vowels,
        min_syllables: 2,
        max_syllables: 4,
    };
    let mut used = HashSet::new();
    forms
        .iter()
        .map(|f| loop {
            let w = maker.make(rng);
            if used.insert(w.clone()) {
                break (f.clone(), w);
            }
        })
        .collect()
}

impl SynthCorpus {
    pub fn generate(config: &SynthConfig) -> Result<Self> {
        if config.verses == 0 || config.lemmas == 0 || config.topics == 0 || config.min_len == 0 {
            return Err(Error::Config("synthetic corpus needs verses, lemmas, topics and tokens".into()));
        }
        if config.min_len > config.max_len {
            return Err(Error::Config("min_len exceeds max_len".into()));
        }
        let mut rng = seed::rng(seed::derive_seed(config.seed, "synth/lexicon"));
        let lemma_forms = base_lemmas(config.lemmas, &mut rng);

        let global = WeightedAliasIndex::new(zipf_weights(config.lemmas, config.zipf_exponent)).expect("weights");
        let per_topic = (2 * config.lemmas / config.topics).clamp(1, config.lemmas);
        let topics: Vec<(Vec<usize>, WeightedAliasIndex<f64>)> = (0..config.topics)
            .map(|_| {
                let mut members: Vec<usize> = (0..config.lemmas).collect();
                members.shuffle(&mut rng);
                members.truncate(per_topic);
                let w = WeightedAliasIndex::new(zipf_weights(per_topic, config.zipf_exponent)).expect("weights");
                (members, w)
            })
            .collect();
        let form_weights = [0.6, 0.25, 0.15];

        // Mid-frequency lemmas carry sentiment.
        let band: Vec<usize> = (config.lemmas / 20..config.lemmas / 4).collect();
        let mut picks = band.clone();
        picks.shuffle(&mut rng);
        let k = (band.len() / 4).clamp(1, 12).min(band.len() / 2);
        let positive_lemmas: Vec<usize> = picks.iter().take(k).copied().collect();
        let negative_lemmas: Vec<usize> = picks.iter().skip(k).take(k).copied().collect();

        let mut text_rng = seed::rng(seed::derive_seed(config.seed, "synth/text"));
        let mut base_verses: Vec<(String, Vec<(usize, usize)>)> = Vec::with_capacity(config.verses);
        let mut labels = SentimentLabels::default();
        for i in 0..config.verses {
            let (members, tw) = &topics[text_rng.random_range(0..config.topics)];
            let len = text_rng.random_range(config.min_len..=config.max_len);
            let tokens: Vec<(usize, usize)> = (0..len)
                .map(|_| {
                    let lemma = if text_rng.random_bool(config.topic_weight) {
                        members[tw.sample(&mut text_rng)]
                    } else {
                        global.sample(&mut text_rng)
                    };
                    let n = lemma_forms[lemma].len();
                    let fw = WeightedAliasIndex::new(form_weights[..n].to_vec()).expect("weights");
                    (lemma, fw.sample(&mut text_rng))
                })
                .collect();
            let has = |set: &[usize]| tokens.iter().any(|(l, _)| set.contains(l));
            labels.labels.insert(
                VerseId::new(verse_id(i))?,
                VerseLabel {
                    positive: has(&positive_lemmas),
                    negative: has(&negative_lemmas),
                },
            );
            base_verses.push((verse_id(i), tokens));
        }

        let all_forms: Vec<String> = lemma_forms.iter().flatten().cloned().collect();
        let mut ciphers = BTreeMap::new();
        let mut editions = Vec::with_capacity(config.ciphers + 1);
        for k in 0..=config.ciphers {
            let id = if k == 0 { BASE_EDITION.to_string() } else { cipher_id(k) };
            let mut crng = seed::rng(seed::derive_seed(config.seed, &format!("synth/edition/{id}")));
            let map = if k == 0 {
                all_forms.iter().map(|f| (f.clone(), f.clone())).collect()
            } else {
                cipher_map(&all_forms, &mut crng)
            };
            let vocab: Vec<&String> = all_forms.iter().map(|f| &map[f]).collect();
            let mut verses = Vec::with_capacity(base_verses.len());
            for (vid, tokens) in &base_verses {
                if config.drop_rate > 0.0 && crng.random_bool(config.drop_rate) {
                    continue;
                }
                let words: Vec<&str> = tokens
                    .iter()
                    .map(|&(l, f)| {
                        if config.noise_rate > 0.0 && crng.random_bool(config.noise_rate) {
                            vocab.choose(&mut crng).expect("non-empty").as_str()
                        } else {
                            map[&lemma_forms[l][f]].as_str()
                        }
                    })
                    .collect();
                verses.push((vid.clone(), words.join(" ")));
            }
            if verses.is_empty() {
                let (vid, tokens) = &base_verses[0];
                let words: Vec<&str> = tokens.iter().map(|&(l, f)| map[&lemma_forms[l][f]].as_str()).collect();
                verses.push((vid.clone(), words.join(" ")));
            }
            editions.push(Edition::from_verses(id.clone(), verses)?);
            if k > 0 {
                ciphers.insert(id, map);
            }
        }
        Ok(SynthCorpus {
            editions,
            lemma_forms,
            ciphers,
            positive_lemmas,
            negative_lemmas,
            labels,
        })
    }

    pub fn edition(&self, id: &str) -> Option<&Edition> {
        self.editions.iter().find(|e| e.id() == id)
    }

    pub fn lemma_table(&self) -> LemmaTable {
        let mut t = LemmaTable::default();
        for forms in &self.lemma_forms {
            t.add_group(forms.iter().map(|f| f.as_bytes().to_vec()).collect::<BTreeSet<_>>());
        }
        t
    }

    /// Token counts of base forms over the given verses of the base edition.
    pub fn base_frequencies(&self, verses: &BTreeSet<VerseId>) -> HashMap<String, u64> {
        let mut freq = HashMap::new();
        let base = self.edition(BASE_EDITION).expect("base edition exists");
        for v in verses {
            if let Some(text) = base.verse(v) {
                for w in String::from_utf8_lossy(text).split_whitespace() {
                    *freq.entry(w.to_string()).or_insert(0) += 1;
                }
            }
        }
        freq
    }

    /// Up to `n` lemma stems spread evenly over the frequency ranks.
    pub fn query_words(&self, n: usize) -> Vec<String> {
        let m = self.lemma_forms.len();
        let n = n.min(m);
        (0..n).map(|i| self.lemma_forms[i * m / n][0].clone()).collect()
    }

    /// Writes `editions/<edition>.txt` plus `lemmas.tsv`, `labels.tsv` and
    /// `queries.txt` into `dir`.
    pub fn write_dir(&self, dir: &Path, queries: usize) -> Result<()> {
        let io = |p: &Path, e: io::Error| Error::io(p, e);
        let editions = dir.join("editions");
        fs::create_dir_all(&editions).map_err(|e| io(&editions, e))?;
        for e in &self.editions {
            let path = editions.join(format!("{}.txt", e.id()));
            let mut out = Vec::new();
            for (v, text) in e.verses() {
                out.extend_from_slice(v.as_str().as_bytes());
                out.push(b'\t');
                out.extend_from_slice(text);
                out.push(b'\n');
            }
            fs::write(&path, out).map_err(|e| io(&path, e))?;
        }
        let write = |name: &str, body: &dyn Fn(&mut Vec<u8>) -> io::Result<()>| -> Result<()> {
            let path = dir.join(name);
            let mut out = Vec::new();
            body(&mut out).map_err(|e| io(&path, e))?;
            fs::write(&path, out).map_err(|e| io(&path, e))
        };
        write("lemmas.tsv", &|w| {
            for forms in self.lemma_forms.iter().filter(|f| f.len() > 1) {
                writeln!(w, "{}\t{}", forms[0], forms[1..].join(" "))?;
            }
            Ok(())
        })?;
        write("labels.tsv", &|w| {
            for (v, l) in &self.labels.labels {
                let pos = if l.positive { "pos" } else { "nonpos" };
                let neg = if l.negative { "neg" } else { "nonneg" };
                writeln!(w, "{v}\t{pos}\t{neg}")?;
            }
            Ok(())
        })?;
        write("queries.txt", &|w| {
            for q in self.query_words(queries) {
                writeln!(w, "{q}")?;
            }
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize_word;

    fn small() -> SynthConfig {
        SynthConfig {
            verses: 120,
            ciphers: 3,
            lemmas: 60,
            topics: 4,
            ..Default::default()
        }
    }

    #[test]
    fn ciphers_are_token_bijections_of_the_base() {
        let c = SynthCorpus::generate(&small()).unwrap();
        assert_eq!(c.editions.len(), 4);
        let base = c.edition(BASE_EDITION).unwrap();
        for (id, map) in &c.ciphers {
            let values: HashSet<&String> = map.values().collect();
            assert_eq!(values.len(), map.len());
            let ed = c.edition(id).unwrap();
            for (v, text) in base.verses() {
                let mapped: Vec<Vec<u8>> = tokenize_word(text)
                    .iter()
                    .map(|w| map[std::str::from_utf8(w).unwrap()].as_bytes().to_vec())
                    .collect();
                assert_eq!(tokenize_word(ed.verse(v).unwrap()), mapped);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = SynthCorpus::generate(&small()).unwrap();
        let b = SynthCorpus::generate(&small()).unwrap();
        for (x, y) in a.editions.iter().zip(&b.editions) {
            assert_eq!(x.verses(), y.verses());
        }
    }

    #[test]
    fn noise_drops_verses_per_edition() {
        let c = SynthCorpus::generate(&SynthConfig {
            drop_rate: 0.2,
            noise_rate: 0.05,
            ..small()
        })
        .unwrap();
        let sizes: Vec<usize> = c.editions.iter().map(|e| e.verses().len()).collect();
        assert!(sizes.iter().all(|&n| n < 120 && n > 60), "{sizes:?}");
    }

    #[test]
    fn labels_follow_the_lexicon() {
        let c = SynthCorpus::generate(&small()).unwrap();
        let pos = c.labels.labels.values().filter(|l| l.positive).count();
        assert!(pos > 0 && pos < 120);
        assert_eq!(c.lemma_table().forms(c.lemma_forms[0][0].as_bytes()).len(), c.lemma_forms[0].len());
    }
}
