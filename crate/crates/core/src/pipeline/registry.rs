use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::CategoryClassifier;
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::recipe::{FittedCategory, Recipe};

/// Metadata of one published model version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelVersion {
    pub category: String,
    pub version: u32,
    pub created: String,
    pub recipe: Recipe,
    pub training_records: usize,
    pub positives: usize,
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VersionRef {
    Latest,
    Exact(u32),
}

#[derive(Debug)]
pub struct Published {
    pub meta: ModelVersion,
    pub model_bytes: Vec<u8>,
    pub classifier_bytes: Vec<u8>,
    pub fitted: Arc<FittedCategory>,
}

/// Versioned per-category models. Versions start at 1 and only grow; a
/// published version is never rewritten.
#[derive(Debug, Default)]
pub struct ModelRegistry {
    root: Option<PathBuf>,
    entries: BTreeMap<String, Vec<Published>>,
}

fn dir_name(category: &str) -> String {
    category
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_new(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.exists() {
        return Err(Error::InvalidArgument(format!(
            "refusing to overwrite published file {}",
            path.display()
        )));
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl ModelRegistry {
    pub fn in_memory() -> Self {
        ModelRegistry::default()
    }

    /// Opens a registry rooted at `root`, loading every published version.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let mut registry = ModelRegistry {
            root: Some(root.clone()),
            entries: BTreeMap::new(),
        };
        let mut dirs: Vec<PathBuf> = fs::read_dir(&root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        for dir in dirs {
            let mut metas: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
                .collect();
            metas.sort();
            for meta_path in metas {
                let meta: ModelVersion = serde_json::from_slice(&fs::read(&meta_path)?)?;
                let stem = dir.join(format!("v{:04}", meta.version));
                let model_bytes = fs::read(stem.with_extension("model"))?;
                let classifier_bytes = fs::read(stem.with_extension("clf"))?;
                registry.insert(meta, model_bytes, classifier_bytes)?;
            }
        }
        Ok(registry)
    }

    fn insert(&mut self, meta: ModelVersion, model_bytes: Vec<u8>, classifier_bytes: Vec<u8>) -> Result<()> {
        let fitted = FittedCategory {
            model: EmbeddingModel::from_bytes(&model_bytes)?,
            classifier: CategoryClassifier::from_bytes(&classifier_bytes)?,
            infer: meta.recipe.infer_options(),
        };
        let versions = self.entries.entry(meta.category.clone()).or_default();
        let expected = versions.len() as u32 + 1;
        if meta.version != expected {
            return Err(Error::format(
                "registry",
                format!("{} version {} found where {expected} was expected", meta.category, meta.version),
            ));
        }
        versions.push(Published {
            meta,
            model_bytes,
            classifier_bytes,
            fitted: Arc::new(fitted),
        });
        Ok(())
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn versions(&self, category: &str) -> &[Published] {
        self.entries.get(category).map_or(&[], Vec::as_slice)
    }

    pub fn latest_version(&self, category: &str) -> Option<u32> {
        self.versions(category).last().map(|p| p.meta.version)
    }

    pub fn get(&self, category: &str, version: VersionRef) -> Result<&Published> {
        let versions = self.versions(category);
        let found = match version {
            VersionRef::Latest => versions.last(),
            VersionRef::Exact(v) => versions.get((v as usize).wrapping_sub(1)),
        };
        found.ok_or_else(|| Error::NoModel(category.to_string()))
    }

    /// Publishes `fitted` as the next version of its category.
    pub fn publish(
        &mut self,
        recipe: &Recipe,
        fitted: FittedCategory,
        training_records: usize,
        positives: usize,
    ) -> Result<&ModelVersion> {
        let category = fitted.classifier.category.clone();
        let version = self.latest_version(&category).unwrap_or(0) + 1;
        let meta = ModelVersion {
            category: category.clone(),
            version,
            created: super::now(),
            recipe: recipe.clone(),
            training_records,
            positives,
            degenerate: fitted.classifier.degenerate,
        };
        let model_bytes = fitted.model.to_bytes();
        let classifier_bytes = fitted.classifier.to_bytes();
        if let Some(root) = &self.root {
            let dir = root.join(dir_name(&category));
            fs::create_dir_all(&dir)?;
            let stem = dir.join(format!("v{version:04}"));
            write_new(&stem.with_extension("model"), &model_bytes)?;
            write_new(&stem.with_extension("clf"), &classifier_bytes)?;
            // The metadata file is written last; its presence marks the
            // version as published.
            write_new(
                &dir.join(format!("v{version:04}.meta.json")),
                &serde_json::to_vec_pretty(&meta)?,
            )?;
        }
        self.entries.entry(category.clone()).or_default().push(Published {
            meta,
            model_bytes,
            classifier_bytes,
            fitted: Arc::new(fitted),
        });
        Ok(&self.entries[&category].last().unwrap().meta)
    }
}
