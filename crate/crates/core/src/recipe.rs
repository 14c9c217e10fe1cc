//! The end-to-end fit for one risk category: paragraph vectors trained on
//! the category's paragraphs, then a binary classifier on their normalized
//! vectors.

use serde::{Deserialize, Serialize};

use crate::classify::{normalize, CategoryClassifier, ClassifierKind, ClassifierParams, FeatureVector};
use crate::corpus::{tokenize, Vocabulary};
use crate::embedding::{EmbeddingModel, Hyperparams, InferOptions};
use crate::error::{Error, Result};

/// Where classifier training features come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// The paragraph vectors learned during embedding training.
    Trained,
    /// Vectors re-inferred with the frozen model, exactly as unseen
    /// paragraphs are scored.
    Inferred,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub hyper: Hyperparams,
    pub classifier: ClassifierKind,
    pub classifier_params: ClassifierParams,
    /// Inference epochs; `None` reuses the training epoch count.
    pub infer_epochs: Option<usize>,
    pub features: FeatureSource,
}

impl Default for Recipe {
    fn default() -> Self {
        Recipe {
            hyper: Hyperparams::default(),
            classifier: ClassifierKind::SvmLinear,
            classifier_params: ClassifierParams::default(),
            infer_epochs: None,
            features: FeatureSource::Inferred,
        }
    }
}

impl Recipe {
    pub fn infer_options(&self) -> InferOptions {
        InferOptions::new(
            self.infer_epochs.unwrap_or(self.hyper.epochs),
            self.hyper.seed,
        )
    }

    /// Trains embeddings on `texts` and a classifier on their labels.
    pub fn fit(&self, category: &str, texts: &[String], labels: &[bool]) -> Result<FittedCategory> {
        if texts.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if texts.len() != labels.len() {
            return Err(Error::LengthMismatch(texts.len(), labels.len()));
        }
        let tokenized: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t, true)).collect();
        let vocab = Vocabulary::build(&tokenized, self.hyper.min_count)?;
        let encoded: Vec<Vec<u32>> = tokenized.iter().map(|t| vocab.encode(t)).collect();
        let mut model = EmbeddingModel::new(vocab, texts.len(), self.hyper.clone())?;
        model.train(&encoded, |_| {})?;

        let fitted = |classifier| FittedCategory {
            model: model.clone(),
            classifier,
            infer: self.infer_options(),
        };
        let mut x = Vec::with_capacity(texts.len());
        let mut y = Vec::with_capacity(texts.len());
        for (i, (tokens, &label)) in encoded.iter().zip(labels).enumerate() {
            let raw = match self.features {
                FeatureSource::Trained => Ok(model.doc_vector(i).to_vec()),
                FeatureSource::Inferred => model.infer_vector(tokens, &self.infer_options()),
            };
            let Ok(raw) = raw else { continue };
            if let Ok(v) = normalize(&raw) {
                x.push(v);
                y.push(label);
            }
        }
        if x.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let classifier = CategoryClassifier::train(
            category,
            self.classifier,
            &x,
            &y,
            &self.classifier_params,
        )?;
        Ok(fitted(classifier))
    }
}

/// A trained embedding model paired with its category classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedCategory {
    pub model: EmbeddingModel,
    pub classifier: CategoryClassifier,
    pub infer: InferOptions,
}

impl FittedCategory {
    /// Infers and normalizes the vector of an unseen paragraph.
    pub fn features(&self, text: &str) -> Result<FeatureVector> {
        normalize(&self.model.infer_text(text, &self.infer)?)
    }

    /// Probability that `text` belongs to the category.
    pub fn score(&self, text: &str) -> Result<f64> {
        self.classifier.predict_proba(self.features(text)?.values())
    }
}
