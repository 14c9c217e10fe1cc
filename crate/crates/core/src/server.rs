//! The versioned request/response API over a [`Workspace`].
//!
//! [`Service::handle`] is transport-agnostic: it takes a method, a path, a
//! query string and a JSON body and returns a status, content type and
//! body. The command-line crate serves it over HTTP.
//!
//! | method | path                              | body / query                          |
//! |--------|-----------------------------------|---------------------------------------|
//! | GET    | /v1/health                        |                                       |
//! | POST   | /v1/documents                     | `{text, title?, delimiter?}`          |
//! | GET    | /v1/documents                     |                                       |
//! | GET    | /v1/documents/{id}                |                                       |
//! | POST   | /v1/documents/{id}/analyze        | `{categories?, threshold?}`           |
//! | GET    | /v1/documents/{id}/findings       |                                       |
//! | GET    | /v1/documents/{id}/export         | `?format=csv\|json\|text`             |
//! | POST   | /v1/findings/{id}/review          | `{verdict, comment?}`                 |
//! | GET    | /v1/categories                    |                                       |
//! | POST   | /v1/categories                    | `{name}`                              |
//! | POST   | /v1/categories/{name}/examples    | `{text, label}`                       |
//! | POST   | /v1/categories/{name}/retrain     |                                       |

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use percent_encoding::percent_decode_str;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::pipeline::{
    check_threshold, DocumentRecord, Finding, ReportFormat, Verdict, VersionRef, Workspace,
    DEFAULT_THRESHOLD,
};

/// Machine-readable error codes. The set is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    EmptyDocument,
    NotFound,
    NoModel,
    BadThreshold,
    AlreadyReviewed,
    UnknownCategory,
    EmptyStore,
    BadRequest,
    MethodNotAllowed,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 10] = [
        ErrorCode::EmptyDocument,
        ErrorCode::NotFound,
        ErrorCode::NoModel,
        ErrorCode::BadThreshold,
        ErrorCode::AlreadyReviewed,
        ErrorCode::UnknownCategory,
        ErrorCode::EmptyStore,
        ErrorCode::BadRequest,
        ErrorCode::MethodNotAllowed,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::EmptyDocument => "empty_document",
            ErrorCode::NotFound => "not_found",
            ErrorCode::NoModel => "no_model",
            ErrorCode::BadThreshold => "bad_threshold",
            ErrorCode::AlreadyReviewed => "already_reviewed",
            ErrorCode::UnknownCategory => "unknown_category",
            ErrorCode::EmptyStore => "empty_store",
            ErrorCode::BadRequest => "bad_request",
            ErrorCode::MethodNotAllowed => "method_not_allowed",
            ErrorCode::Internal => "internal",
        }
    }

    pub fn status(self) -> u16 {
        match self {
            ErrorCode::EmptyDocument | ErrorCode::BadThreshold | ErrorCode::BadRequest => 400,
            ErrorCode::NotFound | ErrorCode::UnknownCategory => 404,
            ErrorCode::MethodNotAllowed => 405,
            ErrorCode::NoModel | ErrorCode::AlreadyReviewed | ErrorCode::EmptyStore => 409,
            ErrorCode::Internal => 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            detail: None,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::EmptyDocument => ErrorCode::EmptyDocument,
            Error::UnknownDocument(_) | Error::UnknownFinding(_) => ErrorCode::NotFound,
            Error::NoModel(_) => ErrorCode::NoModel,
            Error::BadThreshold(_) => ErrorCode::BadThreshold,
            Error::AlreadyReviewed(_) => ErrorCode::AlreadyReviewed,
            Error::UnknownCategory(_) => ErrorCode::UnknownCategory,
            Error::EmptyStore(_) => ErrorCode::EmptyStore,
            Error::Io(_) | Error::Json(_) | Error::Format { .. } => ErrorCode::Internal,
            _ => ErrorCode::BadRequest,
        };
        ApiError::new(code, e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Response {
    fn json(status: u16, value: &impl Serialize) -> Self {
        Response {
            status,
            content_type: "application/json",
            body: serde_json::to_vec(value).expect("response serializes"),
        }
    }

    pub fn error(e: &ApiError) -> Self {
        Response::json(e.code.status(), e)
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn json_body(&self) -> serde_json::Result<Value> {
        serde_json::from_slice(&self.body)
    }
}

#[derive(Deserialize)]
struct UploadBody {
    text: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    delimiter: Option<String>,
}

#[derive(Deserialize, Default)]
struct AnalyzeBody {
    #[serde(default)]
    categories: Option<Vec<String>>,
    #[serde(default)]
    threshold: Option<f64>,
}

#[derive(Deserialize)]
struct ReviewBody {
    verdict: String,
    #[serde(default)]
    comment: Option<String>,
}

#[derive(Deserialize)]
struct CategoryBody {
    name: String,
}

#[derive(Deserialize)]
struct ExampleBody {
    text: String,
    label: bool,
}

#[derive(Serialize)]
struct DocumentSummary<'a> {
    doc_id: &'a str,
    title: &'a str,
    uploaded: &'a str,
    status: crate::pipeline::AnalysisStatus,
    paragraphs: usize,
}

impl<'a> From<&'a DocumentRecord> for DocumentSummary<'a> {
    fn from(d: &'a DocumentRecord) -> Self {
        DocumentSummary {
            doc_id: &d.doc_id,
            title: &d.title,
            uploaded: &d.uploaded,
            status: d.status,
            paragraphs: d.paragraphs.len(),
        }
    }
}

/// Findings grouped by category, preserving order.
fn grouped(findings: &[Finding]) -> Vec<Value> {
    let mut groups: Vec<(String, Vec<&Finding>)> = Vec::new();
    for f in findings {
        match groups.iter_mut().find(|(c, _)| *c == f.category) {
            Some((_, list)) => list.push(f),
            None => groups.push((f.category.clone(), vec![f])),
        }
    }
    groups
        .into_iter()
        .map(|(category, list)| json!({ "category": category, "findings": list }))
        .collect()
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let raw = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}".as_slice()
    } else {
        body
    };
    serde_json::from_slice(raw).map_err(|e| {
        let mut err = ApiError::new(ErrorCode::BadRequest, "malformed request body");
        err.detail = Some(e.to_string());
        err
    })
}

fn query_param(query: &str, key: &str) -> Option<String> {
    query.split('&').find_map(|pair| {
        let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
        let decode = |s: &str| percent_decode_str(&s.replace('+', " ")).decode_utf8_lossy().into_owned();
        (decode(k) == key).then(|| decode(v))
    })
}

/// Transport-independent API over one workspace. Reads share a lock;
/// writes are serialized. Retraining fits outside the lock, one retrain at
/// a time per category, and publishes atomically.
pub struct Service {
    workspace: RwLock<Workspace>,
    retraining: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Service {
    pub fn new(workspace: Workspace) -> Self {
        Service {
            workspace: RwLock::new(workspace),
            retraining: Mutex::new(HashMap::new()),
        }
    }

    pub fn open(root: impl AsRef<Path>) -> crate::Result<Self> {
        Ok(Service::new(Workspace::open(root)?))
    }

    pub fn read<T>(&self, f: impl FnOnce(&Workspace) -> T) -> T {
        f(&self.workspace.read().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn write<T>(&self, f: impl FnOnce(&mut Workspace) -> T) -> T {
        f(&mut self.workspace.write().unwrap_or_else(|e| e.into_inner()))
    }

    /// Handles one request. `path` excludes the query string.
    pub fn handle(&self, method: &str, path: &str, query: &str, body: &[u8]) -> Response {
        match self.route(method, path, query, body) {
            Ok(r) => r,
            Err(e) => Response::error(&e),
        }
    }

    fn route(&self, method: &str, path: &str, query: &str, body: &[u8]) -> Result<Response, ApiError> {
        let segments: Vec<String> = path
            .trim_matches('/')
            .split('/')
            .map(|s| percent_decode_str(s).decode_utf8_lossy().into_owned())
            .collect();
        let segs: Vec<&str> = segments.iter().map(String::as_str).collect();
        let method = method.to_ascii_uppercase();
        let not_found = || ApiError::new(ErrorCode::NotFound, format!("no route for {path}"));
        let Some((&"v1", rest)) = segs.split_first() else {
            return Err(not_found());
        };
        let wrong_method = || ApiError::new(ErrorCode::MethodNotAllowed, format!("{method} not allowed on {path}"));
        match (method.as_str(), rest) {
            ("GET", ["health"]) => Ok(Response::json(200, &json!({ "status": "ok" }))),
            ("POST", ["documents"]) => self.upload(body),
            ("GET", ["documents"]) => Ok(self.list_documents()),
            ("GET", ["documents", id]) => self.get_document(id),
            ("POST", ["documents", id, "analyze"]) => self.analyze(id, body),
            ("GET", ["documents", id, "findings"]) => self.findings(id),
            ("GET", ["documents", id, "export"]) => self.export(id, query),
            ("POST", ["findings", id, "review"]) => self.review(id, body),
            ("GET", ["categories"]) => Ok(self.list_categories()),
            ("POST", ["categories"]) => self.add_category(body),
            ("POST", ["categories", name, "examples"]) => self.add_example(name, body),
            ("POST", ["categories", name, "retrain"]) => self.retrain(name),
            (
                _,
                ["health"]
                | ["documents"]
                | ["documents", _]
                | ["documents", _, "analyze" | "findings" | "export"]
                | ["findings", _, "review"]
                | ["categories"]
                | ["categories", _, "examples" | "retrain"],
            ) => Err(wrong_method()),
            _ => Err(not_found()),
        }
    }

    fn upload(&self, body: &[u8]) -> Result<Response, ApiError> {
        let req: UploadBody = parse_body(body)?;
        let title = req.title.unwrap_or_else(|| "Untitled".to_string());
        let doc = self.write(|ws| ws.upload(&title, &req.text, req.delimiter.as_deref()))?;
        Ok(Response::json(201, &doc))
    }

    fn list_documents(&self) -> Response {
        self.read(|ws| {
            let docs: Vec<DocumentSummary> = ws.documents().into_iter().map(Into::into).collect();
            Response::json(200, &json!({ "documents": docs }))
        })
    }

    fn get_document(&self, id: &str) -> Result<Response, ApiError> {
        self.read(|ws| Ok(Response::json(200, ws.document(id)?)))
    }

    fn analyze(&self, id: &str, body: &[u8]) -> Result<Response, ApiError> {
        let req: AnalyzeBody = parse_body(body)?;
        let threshold = req.threshold.unwrap_or(DEFAULT_THRESHOLD);
        check_threshold(threshold)?;
        let analysis = self.write(|ws| ws.analyze(id, req.categories.as_deref(), threshold))?;
        let versions: Vec<Value> = self.read(|ws| {
            let categories = ws.resolve_categories(req.categories.as_deref()).unwrap_or_default();
            categories
                .iter()
                .map(|c| {
                    json!({
                        "category": c,
                        "model_version": ws.registry().latest_version(c),
                    })
                })
                .collect()
        });
        Ok(Response::json(
            200,
            &json!({
                "doc_id": analysis.doc_id,
                "threshold": analysis.threshold,
                "models": versions,
                "groups": grouped(&analysis.findings),
                "warnings": analysis.warnings,
            }),
        ))
    }

    fn findings(&self, id: &str) -> Result<Response, ApiError> {
        self.read(|ws| {
            let findings = ws.findings(id)?;
            Ok(Response::json(
                200,
                &json!({ "doc_id": id, "groups": grouped(&findings), "findings": findings }),
            ))
        })
    }

    fn export(&self, id: &str, query: &str) -> Result<Response, ApiError> {
        let format = ReportFormat::parse(&query_param(query, "format").unwrap_or_else(|| "csv".into()))?;
        let bytes = self.read(|ws| ws.export(id, format))?;
        Ok(Response {
            status: 200,
            content_type: format.content_type(),
            body: bytes,
        })
    }

    fn review(&self, id: &str, body: &[u8]) -> Result<Response, ApiError> {
        let req: ReviewBody = parse_body(body)?;
        let verdict = Verdict::parse(&req.verdict)?;
        let (finding, _) = self.write(|ws| ws.review(id, verdict, req.comment.as_deref()))?;
        Ok(Response::json(200, &finding))
    }

    fn list_categories(&self) -> Response {
        self.read(|ws| {
            let cats: Vec<Value> = ws
                .categories()
                .names()
                .iter()
                .map(|c| {
                    let (pos, neg) = ws.store().label_counts(c);
                    let latest = ws.registry().get(c, VersionRef::Latest).ok();
                    json!({
                        "name": c,
                        "latest_version": latest.map(|p| p.meta.version),
                        "degenerate": latest.map(|p| p.meta.degenerate),
                        "positives": pos,
                        "negatives": neg,
                    })
                })
                .collect();
            Response::json(200, &json!({ "categories": cats }))
        })
    }

    fn add_category(&self, body: &[u8]) -> Result<Response, ApiError> {
        let req: CategoryBody = parse_body(body)?;
        self.write(|ws| ws.add_categories(&[req.name.as_str()]))?;
        Ok(self.list_categories())
    }

    fn add_example(&self, name: &str, body: &[u8]) -> Result<Response, ApiError> {
        let req: ExampleBody = parse_body(body)?;
        let record = self.write(|ws| ws.add_manual(&req.text, name, req.label))?;
        Ok(Response::json(201, &record))
    }

    fn retrain(&self, name: &str) -> Result<Response, ApiError> {
        let gate = {
            let mut map = self.retraining.lock().unwrap_or_else(|e| e.into_inner());
            map.entry(name.to_string()).or_default().clone()
        };
        let _exclusive = gate.lock().unwrap_or_else(|e| e.into_inner());
        let (texts, labels, recipe) = self.read(|ws| ws.retrain_inputs(name))?;
        let fitted = recipe.fit(name, &texts, &labels)?;
        let meta = self.write(|ws| ws.publish(&recipe, fitted, &labels))?;
        Ok(Response::json(200, &meta))
    }
}
