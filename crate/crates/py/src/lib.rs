//! Python bindings: `import lexrisk_py`.
//!
//! Structured results cross the boundary as plain dicts and lists.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use serde::Serialize;

use lexrisk::corpus::LabeledRecord;
use lexrisk::eval::{self, Axis, EvalSplit, SweepParam};
use lexrisk::pipeline::{ReportFormat, Verdict, Workspace as CoreWorkspace};
use lexrisk::recipe::{FeatureSource, FittedCategory, Recipe as CoreRecipe};
use lexrisk::server::Service as CoreService;
use lexrisk::synthetic::TopicCorpus;

create_exception!(lexrisk_py, LexriskError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    LexriskError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(err)
}

/// Embedding and classifier settings. Keyword arguments override the
/// defaults: arch, objective, negative (or k), subsample, window, dim,
/// combine, epochs, min_count, classifier, c, seed, infer_epochs, features.
#[pyclass(module = "lexrisk_py", from_py_object)]
#[derive(Clone)]
struct Recipe {
    inner: CoreRecipe,
}

#[pymethods]
impl Recipe {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut recipe = CoreRecipe::default();
        if let Some(kw) = overrides {
            for (key, value) in kw.iter() {
                let key: String = key.extract()?;
                match key.as_str() {
                    "seed" => recipe.hyper.seed = value.extract()?,
                    "infer_epochs" => recipe.infer_epochs = value.extract()?,
                    "features" => {
                        let v: String = value.extract()?;
                        recipe.features = match v.as_str() {
                            "trained" => FeatureSource::Trained,
                            "inferred" => FeatureSource::Inferred,
                            _ => return Err(err(format!("unknown feature source `{v}`"))),
                        };
                    }
                    _ => {
                        let text = value.str()?.to_string();
                        SweepParam::parse(&key).and_then(|p| p.apply(&mut recipe, &text)).map_err(err)?;
                    }
                }
            }
        }
        recipe.hyper.validate().map_err(err)?;
        Ok(Recipe { inner: recipe })
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    #[getter]
    fn method_label(&self) -> &'static str {
        self.inner.hyper.method_label()
    }

    fn fit(&self, category: &str, texts: Vec<String>, labels: Vec<bool>) -> PyResult<CategoryModel> {
        let fitted = self.inner.fit(category, &texts, &labels).map_err(err)?;
        Ok(CategoryModel { inner: Arc::new(fitted) })
    }

    fn __repr__(&self) -> String {
        let h = &self.inner.hyper;
        format!(
            "Recipe({}, k={}, subsample={}, window={}, dim={}, epochs={}, classifier={})",
            h.method_label(),
            h.negative,
            h.subsample,
            h.window,
            h.dim,
            h.epochs,
            self.inner.classifier.label()
        )
    }
}

/// Paragraph-vector model plus classifier for one category.
#[pyclass(module = "lexrisk_py", frozen)]
struct CategoryModel {
    inner: Arc<FittedCategory>,
}

#[pymethods]
impl CategoryModel {
    /// Probability that `text` belongs to the category.
    fn score(&self, text: &str) -> PyResult<f64> {
        self.inner.score(text).map_err(err)
    }

    /// Unit-normalized inferred paragraph vector.
    fn features(&self, text: &str) -> PyResult<Vec<f64>> {
        Ok(self.inner.features(text).map_err(err)?.values().to_vec())
    }

    #[pyo3(signature = (token, k = 5))]
    fn most_similar(&self, token: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        self.inner.model.most_similar(token, k).map_err(err)
    }

    fn vocabulary(&self) -> Vec<String> {
        self.inner.model.vocabulary().tokens().to_vec()
    }

    fn model_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.model.to_bytes())
    }

    fn classifier_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.classifier.to_bytes())
    }
}

/// A workspace directory: corpus splits, training store, model registry,
/// documents and findings.
#[pyclass(module = "lexrisk_py", frozen)]
struct Workspace {
    inner: Mutex<CoreWorkspace>,
}

impl Workspace {
    fn with<T>(&self, f: impl FnOnce(&mut CoreWorkspace) -> lexrisk::Result<T>) -> PyResult<T> {
        let mut ws = self.inner.lock().map_err(err)?;
        f(&mut ws).map_err(err)
    }
}

#[pymethods]
impl Workspace {
    #[new]
    fn new(root: PathBuf) -> PyResult<Self> {
        Ok(Workspace {
            inner: Mutex::new(CoreWorkspace::open(root).map_err(err)?),
        })
    }

    fn recipe(&self) -> PyResult<Recipe> {
        self.with(|ws| Ok(Recipe { inner: ws.recipe().clone() }))
    }

    fn set_recipe(&self, recipe: &Recipe) -> PyResult<()> {
        self.with(|ws| ws.set_recipe(recipe.inner.clone()))
    }

    /// Splits `records` (dicts with doc_id, paragraph_id, text, categories)
    /// and seeds the training store. Returns split sizes.
    #[pyo3(signature = (records, ratios = (0.8, 0.1, 0.1), seed = 1))]
    fn ingest(&self, py: Python<'_>, records: &Bound<'_, PyAny>, ratios: (f64, f64, f64), seed: u64) -> PyResult<(usize, usize, usize)> {
        let records: Vec<LabeledRecord> = from_py(py, records)?;
        let split = self.with(|ws| ws.ingest(&records, ratios, seed))?;
        let [a, b, c] = split.splits().map(|s| s.paragraphs.len());
        Ok((a, b, c))
    }

    fn categories(&self) -> PyResult<Vec<String>> {
        self.with(|ws| Ok(ws.categories().names().to_vec()))
    }

    fn add_category(&self, name: &str) -> PyResult<()> {
        self.with(|ws| ws.add_categories(&[name]))
    }

    fn retrain(&self, py: Python<'_>, category: &str) -> PyResult<Py<PyAny>> {
        let meta = self.with(|ws| ws.retrain(category))?;
        to_py(py, &meta)
    }

    #[pyo3(signature = (title, text, delimiter = None))]
    fn upload(&self, py: Python<'_>, title: &str, text: &str, delimiter: Option<&str>) -> PyResult<Py<PyAny>> {
        let doc = self.with(|ws| ws.upload(title, text, delimiter))?;
        to_py(py, &doc)
    }

    fn documents(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let docs = self.with(|ws| Ok(ws.documents().into_iter().cloned().collect::<Vec<_>>()))?;
        to_py(py, &docs)
    }

    #[pyo3(signature = (doc_id, categories = None, threshold = 0.5))]
    fn analyze(&self, py: Python<'_>, doc_id: &str, categories: Option<Vec<String>>, threshold: f64) -> PyResult<Py<PyAny>> {
        let analysis = self.with(|ws| ws.analyze(doc_id, categories.as_deref(), threshold))?;
        to_py(py, &analysis)
    }

    fn findings(&self, py: Python<'_>, doc_id: &str) -> PyResult<Py<PyAny>> {
        let findings = self.with(|ws| ws.findings(doc_id))?;
        to_py(py, &findings)
    }

    /// Records a verdict (accept, reject or decline); returns the updated
    /// finding.
    #[pyo3(signature = (finding_id, verdict, comment = None))]
    fn review(&self, py: Python<'_>, finding_id: &str, verdict: &str, comment: Option<&str>) -> PyResult<Py<PyAny>> {
        let verdict = Verdict::parse(verdict).map_err(err)?;
        let (finding, _) = self.with(|ws| ws.review(finding_id, verdict, comment))?;
        to_py(py, &finding)
    }

    fn add_example(&self, py: Python<'_>, text: &str, category: &str, label: bool) -> PyResult<Py<PyAny>> {
        let record = self.with(|ws| ws.add_manual(text, category, label))?;
        to_py(py, &record)
    }

    fn store_size(&self) -> PyResult<usize> {
        self.with(|ws| Ok(ws.store().len()))
    }

    #[pyo3(signature = (doc_id, format = "csv"))]
    fn export<'py>(&self, py: Python<'py>, doc_id: &str, format: &str) -> PyResult<Bound<'py, PyBytes>> {
        let format = ReportFormat::parse(format).map_err(err)?;
        let bytes = self.with(|ws| ws.export(doc_id, format))?;
        Ok(PyBytes::new(py, &bytes))
    }

    /// Sweeps one parameter over `values` and returns the report as CSV.
    #[pyo3(signature = (param, values, category = None, split = "validation", recipe = None))]
    fn sweep(&self, param: &str, values: Vec<String>, category: Option<String>, split: &str, recipe: Option<Recipe>) -> PyResult<String> {
        let split = match split {
            "validation" => EvalSplit::Validation,
            "test" => EvalSplit::Test,
            _ => return Err(err(format!("unknown split `{split}`"))),
        };
        let axis = Axis::new(SweepParam::parse(param).map_err(err)?, values);
        self.with(|ws| {
            let base = recipe.map(|r| r.inner).unwrap_or_else(|| ws.recipe().clone());
            let category = match category {
                Some(c) => c,
                None => ws.categories().names().first().cloned().ok_or(lexrisk::Error::EmptyDataset)?,
            };
            Ok(eval::sweep(&base, &[axis], &ws.dataset()?, &category, split)?.to_csv())
        })
    }
}

/// The /v1 request handler, without an HTTP transport.
#[pyclass(module = "lexrisk_py", frozen)]
struct Service {
    inner: CoreService,
}

#[pymethods]
impl Service {
    #[new]
    fn new(root: PathBuf) -> PyResult<Self> {
        Ok(Service {
            inner: CoreService::open(root).map_err(err)?,
        })
    }

    /// Returns `(status, content_type, body)`.
    #[pyo3(signature = (method, path, query = "", body = b"".as_slice()))]
    fn handle<'py>(&self, py: Python<'py>, method: &str, path: &str, query: &str, body: &[u8]) -> (u16, &'static str, Bound<'py, PyBytes>) {
        let r = py.detach(|| self.inner.handle(method, path, query, body));
        (r.status, r.content_type, PyBytes::new(py, &r.body))
    }
}

#[pyfunction]
#[pyo3(signature = (text, lowercase = true))]
fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    lexrisk::corpus::tokenize(text, lowercase)
}

#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::auc(&scores, &labels).map_err(err)
}

/// Confusion counts and metrics; absent metrics are `None`.
#[pyfunction]
fn metrics(py: Python<'_>, predictions: Vec<bool>, labels: Vec<bool>) -> PyResult<Py<PyAny>> {
    let c = eval::confusion(&predictions, &labels).map_err(err)?;
    let m = eval::metrics(&c).map_err(err)?;
    to_py(py, &serde_json::json!({ "confusion": c, "metrics": m }))
}

/// Records of the built-in two-topic corpus.
#[pyfunction]
#[pyo3(signature = (paragraphs = 200, seed = 7))]
fn synthetic_corpus(py: Python<'_>, paragraphs: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let corpus = TopicCorpus { paragraphs, seed, ..TopicCorpus::default() };
    to_py(py, &corpus.generate())
}

/// A document of `total` paragraphs with risk text at `planted` indices.
#[pyfunction]
fn planted_document(total: usize, planted: Vec<usize>, seed: u64) -> String {
    lexrisk::synthetic::planted_document(total, &planted, seed)
}

#[pymodule]
fn lexrisk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LexriskError", m.py().get_type::<LexriskError>())?;
    m.add_class::<Recipe>()?;
    m.add_class::<CategoryModel>()?;
    m.add_class::<Workspace>()?;
    m.add_class::<Service>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(planted_document, m)?)?;
    Ok(())
}
