//! Document analysis, the review feedback loop, retraining and report
//! export.

mod registry;
mod report;
mod store;
mod workspace;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use registry::{ModelRegistry, ModelVersion, Published, VersionRef};
pub use report::{Report, ReportFormat, ReportRow};
pub use store::{Origin, StoreRecord, TrainingStore};
pub use workspace::{split_paragraphs, AnalysisStatus, DocumentRecord, Workspace};

use crate::corpus::CategoryRegistry;
use crate::error::{Error, Result};
use crate::recipe::Recipe;
use store::JsonLog;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub(crate) fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Accepted,
    Rejected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    /// Also accepted as `decline`.
    #[serde(alias = "decline")]
    Reject,
}

impl Verdict {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accept" => Ok(Verdict::Accept),
            "reject" | "decline" => Ok(Verdict::Reject),
            _ => Err(Error::InvalidArgument(format!("unknown verdict `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub finding_id: String,
    pub doc_id: String,
    pub paragraph_id: String,
    pub paragraph_index: usize,
    pub text: String,
    pub category: String,
    pub probability: f64,
    pub status: Status,
    pub comment: Option<String>,
    pub model_version: u32,
}

/// A paragraph that could not be scored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub paragraph_id: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub doc_id: String,
    pub threshold: f64,
    pub findings: Vec<Finding>,
    pub warnings: Vec<Warning>,
}

pub fn paragraph_id(doc_id: &str, index: usize) -> String {
    format!("{doc_id}:p{index}")
}

pub fn finding_id(doc_id: &str, index: usize, category: &str, version: u32) -> String {
    format!("{}:{category}:v{version}", paragraph_id(doc_id, index))
}

pub fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::BadThreshold(threshold))
    }
}

/// Scores every paragraph against the latest model of each category and
/// returns the pending findings whose probability reaches `threshold`,
/// grouped by category in request order and sorted by descending
/// probability within each group.
pub fn analyze_document(
    doc_id: &str,
    paragraphs: &[String],
    categories: &[String],
    registry: &ModelRegistry,
    threshold: f64,
) -> Result<Analysis> {
    check_threshold(threshold)?;
    let models = categories
        .iter()
        .map(|c| registry.get(c, VersionRef::Latest))
        .collect::<Result<Vec<_>>>()?;
    let mut findings = Vec::new();
    let mut warnings = Vec::new();
    for (category, published) in categories.iter().zip(models) {
        let version = published.meta.version;
        let fitted = &published.fitted;
        let mut group = Vec::new();
        for (index, text) in paragraphs.iter().enumerate() {
            let pid = paragraph_id(doc_id, index);
            let probability = match fitted.score(text) {
                Ok(p) => p,
                Err(e @ (Error::Uninferable | Error::ZeroVector)) => {
                    warnings.push(Warning {
                        paragraph_id: pid,
                        message: format!("{category}: {e}"),
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            if probability >= threshold {
                group.push(Finding {
                    finding_id: finding_id(doc_id, index, category, version),
                    doc_id: doc_id.to_string(),
                    paragraph_id: pid,
                    paragraph_index: index,
                    text: text.clone(),
                    category: category.clone(),
                    probability,
                    status: Status::Pending,
                    comment: None,
                    model_version: version,
                });
            }
        }
        group.sort_by(|a, b| {
            b.probability
                .total_cmp(&a.probability)
                .then(a.paragraph_index.cmp(&b.paragraph_index))
        });
        findings.extend(group);
    }
    warnings.dedup();
    Ok(Analysis {
        doc_id: doc_id.to_string(),
        threshold,
        findings,
        warnings,
    })
}

/// All findings ever produced, keyed by id. Persisted as an append-only
/// log of finding snapshots; the last snapshot of an id wins.
#[derive(Debug)]
pub struct FindingBook {
    log: JsonLog,
    order: Vec<String>,
    findings: HashMap<String, Finding>,
}

impl FindingBook {
    pub fn in_memory() -> Self {
        Self::load(None).expect("in-memory book")
    }

    pub fn open(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::load(Some(path.as_ref()))
    }

    fn load(path: Option<&std::path::Path>) -> Result<Self> {
        let (log, snapshots) = JsonLog::open::<Finding>(path)?;
        let mut book = FindingBook {
            log,
            order: Vec::new(),
            findings: HashMap::new(),
        };
        for f in snapshots {
            book.remember(f);
        }
        Ok(book)
    }

    fn remember(&mut self, f: Finding) {
        if !self.findings.contains_key(&f.finding_id) {
            self.order.push(f.finding_id.clone());
        }
        self.findings.insert(f.finding_id.clone(), f);
    }

    /// Adds newly produced findings. A finding whose id is already known
    /// keeps its recorded state.
    pub fn add(&mut self, findings: &[Finding]) -> Result<Vec<Finding>> {
        let mut current = Vec::with_capacity(findings.len());
        for f in findings {
            match self.findings.get(&f.finding_id) {
                Some(existing) => current.push(existing.clone()),
                None => {
                    self.log.append(f)?;
                    self.remember(f.clone());
                    current.push(f.clone());
                }
            }
        }
        Ok(current)
    }

    pub fn get(&self, finding_id: &str) -> Result<&Finding> {
        self.findings
            .get(finding_id)
            .ok_or_else(|| Error::UnknownFinding(finding_id.to_string()))
    }

    /// Findings of one document in the order they were first recorded.
    pub fn for_document(&self, doc_id: &str) -> Vec<Finding> {
        self.order
            .iter()
            .map(|id| &self.findings[id])
            .filter(|f| f.doc_id == doc_id)
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn update(&mut self, f: Finding) -> Result<()> {
        self.log.append(&f)?;
        self.remember(f);
        Ok(())
    }
}

/// Records a reviewer's verdict on a pending finding and appends the
/// matching training example: accepted findings become positives and
/// rejected ones negatives for the finding's category.
pub fn record_review(
    book: &mut FindingBook,
    store: &mut TrainingStore,
    finding_id: &str,
    verdict: Verdict,
    comment: Option<&str>,
) -> Result<(Finding, StoreRecord)> {
    let mut finding = book.get(finding_id)?.clone();
    if finding.status != Status::Pending {
        return Err(Error::AlreadyReviewed(finding_id.to_string()));
    }
    let (status, label, origin) = match verdict {
        Verdict::Accept => (Status::Accepted, true, Origin::ReviewAccept),
        Verdict::Reject => (Status::Rejected, false, Origin::ReviewReject),
    };
    let record = store
        .append(
            &finding.paragraph_id,
            &finding.text,
            &finding.category,
            label,
            origin,
            Some(finding_id),
        )?
        .clone();
    finding.status = status;
    finding.comment = comment.filter(|c| !c.is_empty()).map(str::to_string);
    book.update(finding.clone())?;
    Ok((finding, record))
}

/// Appends a reviewer-supplied example for a registered category.
pub fn add_manual_example(
    store: &mut TrainingStore,
    categories: &CategoryRegistry,
    paragraph_id: Option<&str>,
    text: &str,
    category: &str,
    label: bool,
) -> Result<StoreRecord> {
    categories.check(category)?;
    if text.trim().is_empty() {
        return Err(Error::EmptyDocument);
    }
    let pid = paragraph_id
        .map(str::to_string)
        .unwrap_or_else(|| format!("manual:{}", store.len()));
    Ok(store
        .append(&pid, text, category, label, Origin::ManualAdd, None)?
        .clone())
}

/// Texts and labels of every store record for `category`, in log order.
pub fn training_set(store: &TrainingStore, category: &str) -> Result<(Vec<String>, Vec<bool>)> {
    let (texts, labels): (Vec<String>, Vec<bool>) = store
        .for_category(category)
        .map(|r| (r.text.clone(), r.label))
        .unzip();
    if texts.is_empty() {
        return Err(Error::EmptyStore(category.to_string()));
    }
    Ok((texts, labels))
}

/// Fully retrains `category` from the store and publishes the result as
/// the next version.
pub fn retrain(
    category: &str,
    registry: &mut ModelRegistry,
    store: &TrainingStore,
    recipe: &Recipe,
) -> Result<ModelVersion> {
    let (texts, labels) = training_set(store, category)?;
    let fitted = recipe.fit(category, &texts, &labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    Ok(registry.publish(recipe, fitted, texts.len(), positives)?.clone())
}

pub fn export_report(doc_id: &str, title: &str, findings: &[Finding]) -> Report {
    Report {
        doc_id: doc_id.to_string(),
        title: title.to_string(),
        rows: findings.iter().map(ReportRow::from).collect(),
    }
}
