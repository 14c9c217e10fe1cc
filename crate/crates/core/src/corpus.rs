//! Paragraph ingestion, tokenization, vocabulary and the sampling tables
//! that drive embedding training.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum corpus count for a token to enter the vocabulary.
pub const DEFAULT_MIN_COUNT: u64 = 5;

/// Default exponent applied to unigram frequencies in the noise distribution.
pub const DEFAULT_NOISE_EXPONENT: f64 = 0.75;

/// Splits text into tokens.
///
/// Runs of alphanumeric characters form one token; every other
/// non-whitespace character (punctuation, symbols) is a token on its own.
pub fn tokenize(raw_text: &str, lowercase: bool) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();

    for ch in raw_text.chars() {
        if ch.is_alphanumeric() {
            if lowercase {
                current.extend(ch.to_lowercase());
            } else {
                current.push(ch);
            }
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Token to index map with raw counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Counts every token of every paragraph and keeps those seen at least
    /// `min_count` times.
    ///
    /// Indices are assigned by descending count, ties broken by the token
    /// string, so the result does not depend on input order.
    pub fn build<I, S>(paragraphs: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        if min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be at least 1".into()));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut total = 0u64;
        let paragraphs: Vec<S> = paragraphs.into_iter().collect();
        for paragraph in &paragraphs {
            for token in paragraph.as_ref() {
                *counts.entry(token.as_str()).or_default() += 1;
                total += 1;
            }
        }

        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        Ok(Self::from_parts(
            kept.iter().map(|(t, _)| t.to_string()).collect(),
            kept.iter().map(|&(_, c)| c).collect(),
            total,
            min_count,
        ))
    }

    /// Tokenizes raw texts (lowercased) and builds the vocabulary over them.
    pub fn from_texts<I, S>(texts: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokenized: Vec<Vec<String>> = texts
            .into_iter()
            .map(|t| tokenize(t.as_ref(), true))
            .collect();
        Self::build(&tokenized, min_count)
    }

    pub(crate) fn from_parts(
        tokens: Vec<String>,
        counts: Vec<u64>,
        total_tokens: u64,
        min_count: u64,
    ) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            counts,
            index,
            total_tokens,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, index: u32) -> u64 {
        self.counts[index as usize]
    }

    /// Number of tokens in the corpus before `min_count` filtering.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// `count / total_tokens`, the relative frequency used for subsampling.
    pub fn relative_frequency(&self, index: u32) -> f64 {
        self.counts[index as usize] as f64 / self.total_tokens as f64
    }

    /// Maps tokens to indices, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens
            .iter()
            .filter_map(|t| self.index_of(t.as_ref()))
            .collect()
    }
}

/// Unigram frequencies raised to an exponent and renormalized.
#[derive(Clone, Debug)]
pub struct NoiseTable {
    probabilities: Vec<f64>,
    exponent: f64,
    sampler: WeightedIndex<f64>,
}

impl NoiseTable {
    pub fn new(vocab: &Vocabulary, exponent: f64) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        if !(exponent > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise exponent must be positive, got {exponent}"
            )));
        }
        // The total_tokens denominator of f(w) cancels in the normalization.
        let weights: Vec<f64> = vocab
            .counts()
            .iter()
            .map(|&c| (c as f64).powf(exponent))
            .collect();
        let z: f64 = weights.iter().sum();
        let probabilities = weights.iter().map(|w| w / z).collect();
        let sampler = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidArgument(format!("noise weights: {e}")))?;
        Ok(NoiseTable {
            probabilities,
            exponent,
            sampler,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.sampler.sample(rng) as u32
    }
}

/// Probability of discarding one occurrence of a word with relative
/// frequency `f` under subsampling threshold `t`; zero when `t == 0`.
pub fn discard_probability(f: f64, t: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::NonPositiveFrequency(f));
    }
    if t < 0.0 || t.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "subsample threshold must be non-negative, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - (t / f).sqrt()).max(0.0))
}

/// Per-token discard probabilities, drawn against once per occurrence.
#[derive(Clone, Debug)]
pub struct Subsampler {
    discard: Vec<f64>,
}

impl Subsampler {
    pub fn new(vocab: &Vocabulary, threshold: f64) -> Result<Self> {
        let discard = (0..vocab.len() as u32)
            .map(|i| discard_probability(vocab.relative_frequency(i), threshold))
            .collect::<Result<_>>()?;
        Ok(Subsampler { discard })
    }

    pub fn discard_probability(&self, token: u32) -> f64 {
        self.discard[token as usize]
    }

    /// Keeps each occurrence independently with probability `1 - discard`.
    pub fn filter<R: Rng + ?Sized>(&self, tokens: &[u32], rng: &mut R) -> Vec<u32> {
        tokens
            .iter()
            .copied()
            .filter(|&t| {
                let p = self.discard[t as usize];
                p <= 0.0 || rng.gen::<f64>() >= p
            })
            .collect()
    }
}

/// One input line of the labeled corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub doc_id: String,
    pub paragraph_id: String,
    pub text: String,
    #[serde(default)]
    pub categories: Vec<String>,
}

/// A tokenized paragraph encoded against a vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Paragraph {
    pub paragraph_id: String,
    pub doc_id: String,
    pub raw_text: String,
    pub tokens: Vec<u32>,
    pub categories: BTreeSet<String>,
}

impl Paragraph {
    pub fn encode(record: &LabeledRecord, vocab: &Vocabulary) -> Self {
        Paragraph {
            paragraph_id: record.paragraph_id.clone(),
            doc_id: record.doc_id.clone(),
            raw_text: record.text.clone(),
            tokens: vocab.encode(&tokenize(&record.text, true)),
            categories: record.categories.iter().cloned().collect(),
        }
    }
}

/// Reads newline-delimited JSON records, skipping blank lines.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<LabeledRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LabeledRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format("corpus record", format!("line {}: {e}", lineno + 1)))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<W: Write>(mut writer: W, records: &[LabeledRecord]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Declared risk categories, one per line in its file form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CategoryRegistry {
    names: Vec<String>,
}

impl CategoryRegistry {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let names = names
            .into_iter()
            .map(Into::into)
            .filter(|n: &String| seen.insert(n.clone()))
            .collect();
        CategoryRegistry { names }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for name in &self.names {
            out.push_str(name);
            out.push('\n');
        }
        out
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn check(&self, name: &str) -> Result<()> {
        if self.contains(name) {
            Ok(())
        } else {
            Err(Error::UnknownCategory(name.to_string()))
        }
    }
}

/// One binary training example: a paragraph (by position in its split)
/// labeled for one category.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleRecord {
    pub paragraph: usize,
    pub category: String,
    pub label: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub paragraphs: Vec<LabeledRecord>,
    pub examples: Vec<ExampleRecord>,
}

impl Split {
    /// Expands records, in order, into one binary example per category.
    pub fn from_records(records: &[LabeledRecord], categories: &[String]) -> Self {
        let mut split = Split::default();
        for record in records {
            let pos = split.paragraphs.len();
            for category in categories {
                split.examples.push(ExampleRecord {
                    paragraph: pos,
                    category: category.clone(),
                    label: record.categories.contains(category),
                });
            }
            split.paragraphs.push(record.clone());
        }
        split
    }

    pub fn examples_for<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a ExampleRecord> {
        self.examples.iter().filter(move |e| e.category == category)
    }

    pub fn positives(&self, category: &str) -> usize {
        self.examples_for(category).filter(|e| e.label).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub categories: Vec<String>,
    pub train: Split,
    pub validation: Split,
    pub test: Split,
}

impl DatasetSplit {
    pub fn splits(&self) -> [&Split; 3] {
        [&self.train, &self.validation, &self.test]
    }

    pub fn has_category(&self, category: &str) -> bool {
        self.categories.iter().any(|c| c == category)
    }
}

/// Assigns paragraphs to train/validation/test and expands each into one
/// binary example per category.
///
/// Without a registry the category set is the union of categories seen in
/// the records, in first-seen order.
pub fn ingest_labeled(
    records: &[LabeledRecord],
    ratios: (f64, f64, f64),
    seed: u64,
    registry: Option<&CategoryRegistry>,
) -> Result<DatasetSplit> {
    let (r_train, r_val, r_test) = ratios;
    if [r_train, r_val, r_test].iter().any(|r| !(*r >= 0.0))
        || ((r_train + r_val + r_test) - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be non-negative and sum to 1, got {ratios:?}"
        )));
    }

    let mut ids = HashSet::new();
    for record in records {
        if !ids.insert(record.paragraph_id.as_str()) {
            return Err(Error::DuplicateParagraph(record.paragraph_id.clone()));
        }
    }

    let categories: Vec<String> = match registry {
        Some(reg) => {
            for record in records {
                for c in &record.categories {
                    reg.check(c)?;
                }
            }
            reg.names().to_vec()
        }
        None => {
            let mut seen = Vec::new();
            for c in records.iter().flat_map(|r| &r.categories) {
                if !seen.contains(c) {
                    seen.push(c.clone());
                }
            }
            seen
        }
    };

    let n = records.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64) * r_train).round() as usize;
    let n_val = (((n as f64) * r_val).round() as usize).min(n - n_train);

    let pick = |slice: &[usize]| {
        let records: Vec<LabeledRecord> = slice.iter().map(|&i| records[i].clone()).collect();
        Split::from_records(&records, &categories)
    };

    Ok(DatasetSplit {
        train: pick(&order[..n_train]),
        validation: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
        categories,
    })
}
