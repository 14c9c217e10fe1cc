use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{ingest_labeled, write_records, CategoryRegistry, DatasetSplit, LabeledRecord, Split};
use crate::error::{Error, Result};
use crate::recipe::{FittedCategory, Recipe};

use super::store::JsonLog;
use super::{
    add_manual_example, analyze_document, export_report, record_review, training_set, Analysis,
    Finding, FindingBook, ModelRegistry, ModelVersion, Origin, ReportFormat, StoreRecord,
    TrainingStore, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisStatus {
    Uploaded,
    Analyzed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub seq: u64,
    pub title: String,
    pub uploaded: String,
    /// The uploaded text, verbatim.
    pub text: String,
    pub paragraphs: Vec<String>,
    pub status: AnalysisStatus,
}

/// Splits a document into paragraphs at blank lines, or at every
/// occurrence of `delimiter` when one is given. Empty pieces are dropped.
pub fn split_paragraphs(text: &str, delimiter: Option<&str>) -> Vec<String> {
    match delimiter {
        Some(d) if !d.is_empty() => text
            .split(d)
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect(),
        _ => {
            let mut out = Vec::new();
            let mut current: Vec<&str> = Vec::new();
            for line in text.lines() {
                if line.trim().is_empty() {
                    if !current.is_empty() {
                        out.push(current.join("\n"));
                        current.clear();
                    }
                } else {
                    current.push(line.trim_end());
                }
            }
            if !current.is_empty() {
                out.push(current.join("\n"));
            }
            out
        }
    }
}

/// A directory holding every piece of pipeline state:
///
/// ```text
/// config.json       training recipe
/// categories.txt    registered risk categories, one per line
/// store.jsonl       training store (append-only)
/// documents.jsonl   uploaded documents (snapshots, last wins)
/// findings.jsonl    findings (snapshots, last wins)
/// data/             train/validation/test splits written by ingest
/// models/           published model versions per category
/// ```
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    recipe: Recipe,
    categories: CategoryRegistry,
    store: TrainingStore,
    registry: ModelRegistry,
    findings: FindingBook,
    doc_log: JsonLog,
    documents: Vec<DocumentRecord>,
    doc_index: HashMap<String, usize>,
}

impl Workspace {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let config = root.join("config.json");
        let recipe = if config.exists() {
            serde_json::from_slice(&fs::read(&config)?)?
        } else {
            Recipe::default()
        };
        let categories_path = root.join("categories.txt");
        let categories = if categories_path.exists() {
            CategoryRegistry::parse(&fs::read_to_string(&categories_path)?)
        } else {
            CategoryRegistry::new(Vec::<String>::new())
        };
        let (doc_log, snapshots) = JsonLog::open::<DocumentRecord>(Some(&root.join("documents.jsonl")))?;
        let mut ws = Workspace {
            store: TrainingStore::open(root.join("store.jsonl"))?,
            registry: ModelRegistry::open(root.join("models"))?,
            findings: FindingBook::open(root.join("findings.jsonl"))?,
            root,
            recipe,
            categories,
            doc_log,
            documents: Vec::new(),
            doc_index: HashMap::new(),
        };
        for d in snapshots {
            ws.remember_document(d);
        }
        Ok(ws)
    }

    fn remember_document(&mut self, d: DocumentRecord) {
        match self.doc_index.get(&d.doc_id) {
            Some(&i) => self.documents[i] = d,
            None => {
                self.doc_index.insert(d.doc_id.clone(), self.documents.len());
                self.documents.push(d);
            }
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn recipe(&self) -> &Recipe {
        &self.recipe
    }

    pub fn set_recipe(&mut self, recipe: Recipe) -> Result<()> {
        recipe.hyper.validate()?;
        fs::write(self.root.join("config.json"), serde_json::to_vec_pretty(&recipe)?)?;
        self.recipe = recipe;
        Ok(())
    }

    pub fn categories(&self) -> &CategoryRegistry {
        &self.categories
    }

    pub fn add_categories<S: AsRef<str>>(&mut self, names: &[S]) -> Result<()> {
        let mut all: Vec<String> = self.categories.names().to_vec();
        for n in names {
            let n = n.as_ref().trim();
            if n.is_empty() || n.starts_with('#') || n.contains('\n') {
                return Err(Error::InvalidArgument(format!("bad category name `{n}`")));
            }
            all.push(n.to_string());
        }
        self.categories = CategoryRegistry::new(all);
        fs::write(self.root.join("categories.txt"), self.categories.render())?;
        Ok(())
    }

    pub fn store(&self) -> &TrainingStore {
        &self.store
    }

    pub fn registry(&self) -> &ModelRegistry {
        &self.registry
    }

    pub fn finding_book(&self) -> &FindingBook {
        &self.findings
    }

    /// Splits labeled records, writes the splits under `data/`, and seeds
    /// the training store with one example per (train paragraph,
    /// category). Categories seen in the records are registered.
    pub fn ingest(&mut self, records: &[LabeledRecord], ratios: (f64, f64, f64), seed: u64) -> Result<DatasetSplit> {
        let seen: Vec<String> = records.iter().flat_map(|r| r.categories.clone()).collect();
        self.add_categories(&seen)?;
        let split = ingest_labeled(records, ratios, seed, Some(&self.categories))?;
        let data = self.root.join("data");
        fs::create_dir_all(&data)?;
        for (name, part) in ["train", "validation", "test"].iter().zip(split.splits()) {
            let file = fs::File::create(data.join(format!("{name}.jsonl")))?;
            write_records(std::io::BufWriter::new(file), &part.paragraphs)?;
        }
        for e in &split.train.examples {
            let p = &split.train.paragraphs[e.paragraph];
            self.store.append(
                &p.paragraph_id,
                &p.text,
                &e.category,
                e.label,
                Origin::SeedData,
                None,
            )?;
        }
        Ok(split)
    }

    /// Reads the splits written by the last ingest.
    pub fn dataset(&self) -> Result<DatasetSplit> {
        let data = self.root.join("data");
        let read = |name: &str| -> Result<Vec<LabeledRecord>> {
            let path = data.join(format!("{name}.jsonl"));
            if !path.exists() {
                return Err(Error::EmptyDataset);
            }
            crate::corpus::read_records(std::io::BufReader::new(fs::File::open(path)?))
        };
        let names = self.categories.names();
        Ok(DatasetSplit {
            categories: names.to_vec(),
            train: Split::from_records(&read("train")?, names),
            validation: Split::from_records(&read("validation")?, names),
            test: Split::from_records(&read("test")?, names),
        })
    }

    /// Everything needed to retrain `category` outside of any lock.
    pub fn retrain_inputs(&self, category: &str) -> Result<(Vec<String>, Vec<bool>, Recipe)> {
        self.categories.check(category)?;
        let (texts, labels) = training_set(&self.store, category)?;
        Ok((texts, labels, self.recipe.clone()))
    }

    pub fn publish(&mut self, recipe: &Recipe, fitted: FittedCategory, labels: &[bool]) -> Result<ModelVersion> {
        let positives = labels.iter().filter(|&&l| l).count();
        Ok(self.registry.publish(recipe, fitted, labels.len(), positives)?.clone())
    }

    /// Full retrain of one category from the store; publishes version n+1.
    pub fn retrain(&mut self, category: &str) -> Result<ModelVersion> {
        let (texts, labels, recipe) = self.retrain_inputs(category)?;
        let fitted = recipe.fit(category, &texts, &labels)?;
        self.publish(&recipe, fitted, &labels)
    }

    pub fn upload(&mut self, title: &str, text: &str, delimiter: Option<&str>) -> Result<DocumentRecord> {
        let paragraphs = split_paragraphs(text, delimiter);
        if paragraphs.is_empty() {
            return Err(Error::EmptyDocument);
        }
        let seq = self.documents.len() as u64;
        let doc = DocumentRecord {
            doc_id: format!("doc-{:04}", seq + 1),
            seq,
            title: title.to_string(),
            uploaded: super::now(),
            text: text.to_string(),
            paragraphs,
            status: AnalysisStatus::Uploaded,
        };
        self.doc_log.append(&doc)?;
        self.remember_document(doc.clone());
        Ok(doc)
    }

    /// All documents, newest first.
    pub fn documents(&self) -> Vec<&DocumentRecord> {
        let mut docs: Vec<&DocumentRecord> = self.documents.iter().collect();
        docs.sort_by(|a, b| b.uploaded.cmp(&a.uploaded).then(b.seq.cmp(&a.seq)));
        docs
    }

    pub fn document(&self, doc_id: &str) -> Result<&DocumentRecord> {
        self.doc_index
            .get(doc_id)
            .map(|&i| &self.documents[i])
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    /// Categories to analyze: the requested ones, or every registered
    /// category when none are given.
    pub fn resolve_categories(&self, requested: Option<&[String]>) -> Result<Vec<String>> {
        match requested {
            Some(list) if !list.is_empty() => {
                for c in list {
                    self.categories.check(c)?;
                }
                Ok(list.to_vec())
            }
            _ => Ok(self.categories.names().to_vec()),
        }
    }

    /// Analyzes a stored document and records its findings. Findings that
    /// already exist (same paragraph, category and model version) keep
    /// their review state.
    pub fn analyze(&mut self, doc_id: &str, categories: Option<&[String]>, threshold: f64) -> Result<Analysis> {
        let categories = self.resolve_categories(categories)?;
        let doc = self.document(doc_id)?.clone();
        let mut analysis = analyze_document(doc_id, &doc.paragraphs, &categories, &self.registry, threshold)?;
        analysis.findings = self.findings.add(&analysis.findings)?;
        if doc.status != AnalysisStatus::Analyzed {
            let doc = DocumentRecord {
                status: AnalysisStatus::Analyzed,
                ..doc
            };
            self.doc_log.append(&doc)?;
            self.remember_document(doc);
        }
        Ok(analysis)
    }

    pub fn findings(&self, doc_id: &str) -> Result<Vec<Finding>> {
        self.document(doc_id)?;
        Ok(self.findings.for_document(doc_id))
    }

    pub fn finding(&self, finding_id: &str) -> Result<&Finding> {
        self.findings.get(finding_id)
    }

    pub fn review(&mut self, finding_id: &str, verdict: Verdict, comment: Option<&str>) -> Result<(Finding, StoreRecord)> {
        record_review(&mut self.findings, &mut self.store, finding_id, verdict, comment)
    }

    pub fn add_manual(&mut self, text: &str, category: &str, label: bool) -> Result<StoreRecord> {
        add_manual_example(&mut self.store, &self.categories, None, text, category, label)
    }

    pub fn export(&self, doc_id: &str, format: ReportFormat) -> Result<Vec<u8>> {
        let doc = self.document(doc_id)?;
        export_report(doc_id, &doc.title, &self.findings.for_document(doc_id)).render(format)
    }
}
