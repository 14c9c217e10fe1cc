//! Seeded generators for small labeled corpora with a known topic
//! structure. Used by the test suites, the sweep harness examples and the
//! CLI demo data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::LabeledRecord;

pub const SHARED_WORDS: &[&str] = &[
    "the", "shall", "of", "to", "and", "a", "in", "be", "by", "this",
];

pub const RISK_WORDS: &[&str] = &[
    "terminate", "termination", "notice", "breach", "default", "cure", "expiry",
    "cancel", "revoke", "forfeit", "penalty", "liquidated", "damages", "indemnify",
    "liability", "dispute", "withdraw", "suspend", "arbitration", "claim",
];

pub const NEUTRAL_WORDS: &[&str] = &[
    "invoice", "payment", "schedule", "deliver", "service", "office", "meeting",
    "report", "format", "address", "email", "copy", "page", "section", "annex",
    "team", "project", "plan", "review", "submit",
];

/// Shape of a generated two-topic corpus.
#[derive(Clone, Debug)]
pub struct TopicCorpus {
    pub paragraphs: usize,
    pub length: usize,
    /// Fraction of paragraphs drawn from the risk topic.
    pub risk_fraction: f64,
    /// Probability that a token is a shared function word.
    pub shared_rate: f64,
    /// Probability that a topic token is borrowed from the other topic.
    pub leak_rate: f64,
    pub category: String,
    pub seed: u64,
}

impl Default for TopicCorpus {
    fn default() -> Self {
        TopicCorpus {
            paragraphs: 200,
            length: 30,
            risk_fraction: 0.5,
            shared_rate: 0.3,
            leak_rate: 0.05,
            category: "Termination".to_string(),
            seed: 7,
        }
    }
}

fn paragraph<R: Rng>(rng: &mut R, spec: &TopicCorpus, risky: bool) -> String {
    let (own, other) = if risky {
        (RISK_WORDS, NEUTRAL_WORDS)
    } else {
        (NEUTRAL_WORDS, RISK_WORDS)
    };
    let words: Vec<&str> = (0..spec.length)
        .map(|_| {
            if rng.gen::<f64>() < spec.shared_rate {
                *SHARED_WORDS.choose(rng).unwrap()
            } else if rng.gen::<f64>() < spec.leak_rate {
                *other.choose(rng).unwrap()
            } else {
                *own.choose(rng).unwrap()
            }
        })
        .collect();
    words.join(" ")
}

impl TopicCorpus {
    /// Generates the records. Paragraph `i` is risky iff `i` falls in the
    /// first `risk_fraction` share after a seeded shuffle.
    pub fn generate(&self) -> Vec<LabeledRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n_risk = (self.paragraphs as f64 * self.risk_fraction).round() as usize;
        let mut flags: Vec<bool> = (0..self.paragraphs).map(|i| i < n_risk).collect();
        flags.shuffle(&mut rng);
        flags
            .into_iter()
            .enumerate()
            .map(|(i, risky)| LabeledRecord {
                doc_id: format!("doc{:03}", i / 10),
                paragraph_id: format!("p{i:04}"),
                text: paragraph(&mut rng, self, risky),
                categories: if risky {
                    vec![self.category.clone()]
                } else {
                    Vec::new()
                },
            })
            .collect()
    }
}

/// A document of `total` paragraphs in which the paragraphs at `planted`
/// positions are drawn from the risk topic. Paragraphs are separated by
/// blank lines.
pub fn planted_document(total: usize, planted: &[usize], seed: u64) -> String {
    let spec = TopicCorpus {
        seed,
        ..TopicCorpus::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..total)
        .map(|i| paragraph(&mut rng, &spec, planted.contains(&i)))
        .collect::<Vec<_>>()
        .join("\n\n")
}
