use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a training record came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    SeedData,
    ReviewAccept,
    ReviewReject,
    ManualAdd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub seq: u64,
    pub paragraph_id: String,
    pub text: String,
    pub category: String,
    pub label: bool,
    pub origin: Origin,
    /// Set exactly for review-originated records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finding_id: Option<String>,
    pub timestamp: String,
}

/// A newline-delimited JSON file that only ever grows.
#[derive(Debug)]
pub(crate) struct JsonLog {
    path: Option<PathBuf>,
}

impl JsonLog {
    pub fn open<T: DeserializeOwned>(path: Option<&Path>) -> Result<(Self, Vec<T>)> {
        let mut items = Vec::new();
        if let Some(path) = path {
            if path.exists() {
                for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    items.push(serde_json::from_str(&line).map_err(|e| {
                        Error::format("log", format!("{}:{}: {e}", path.display(), n + 1))
                    })?);
                }
            }
        }
        Ok((
            JsonLog {
                path: path.map(Path::to_path_buf),
            },
            items,
        ))
    }

    pub fn append<T: Serialize>(&self, item: &T) -> Result<()> {
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(item)?;
            line.push('\n');
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        Ok(())
    }
}

/// Append-only log of labeled training examples, one per
/// (paragraph, category). Every record is one training example; the same
/// paragraph may appear several times with different origins.
#[derive(Debug)]
pub struct TrainingStore {
    log: JsonLog,
    records: Vec<StoreRecord>,
}

impl TrainingStore {
    pub fn in_memory() -> Self {
        TrainingStore {
            log: JsonLog { path: None },
            records: Vec::new(),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let (log, records) = JsonLog::open(Some(path.as_ref()))?;
        Ok(TrainingStore { log, records })
    }

    pub fn records(&self) -> &[StoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn for_category<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a StoreRecord> {
        self.records.iter().filter(move |r| r.category == category)
    }

    /// `(positives, negatives)` for `category`.
    pub fn label_counts(&self, category: &str) -> (usize, usize) {
        self.for_category(category).fold((0, 0), |(p, n), r| {
            if r.label {
                (p + 1, n)
            } else {
                (p, n + 1)
            }
        })
    }

    /// Appends one record, assigning its sequence number.
    pub fn append(
        &mut self,
        paragraph_id: &str,
        text: &str,
        category: &str,
        label: bool,
        origin: Origin,
        finding_id: Option<&str>,
    ) -> Result<&StoreRecord> {
        let review = matches!(origin, Origin::ReviewAccept | Origin::ReviewReject);
        if review != finding_id.is_some() {
            return Err(Error::InvalidArgument(
                "review records, and only those, reference a finding".into(),
            ));
        }
        let record = StoreRecord {
            seq: self.records.len() as u64,
            paragraph_id: paragraph_id.to_string(),
            text: text.to_string(),
            category: category.to_string(),
            label,
            origin,
            finding_id: finding_id.map(str::to_string),
            timestamp: super::now(),
        };
        self.log.append(&record)?;
        self.records.push(record);
        Ok(self.records.last().unwrap())
    }
}
