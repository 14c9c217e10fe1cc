mod common;

use serde_json::{json, Value};

use lexrisk::pipeline::{Report, ReportFormat, Workspace};
use lexrisk::server::{ErrorCode, Response, Service};
use lexrisk::synthetic::{planted_document, TopicCorpus};

use common::final_config;

const CAT: &str = "Termination";

fn trained_service(dir: &std::path::Path) -> Service {
    let mut ws = Workspace::open(dir).unwrap();
    ws.set_recipe(final_config(100)).unwrap();
    ws.ingest(&TopicCorpus::default().generate(), (0.8, 0.1, 0.1), 1).unwrap();
    let svc = Service::new(ws);
    let r = svc.handle("POST", &format!("/v1/categories/{CAT}/retrain"), "", b"");
    assert_eq!(r.status, 200, "{}", String::from_utf8_lossy(&r.body));
    svc
}

fn call(svc: &Service, method: &str, path: &str, body: Value) -> (u16, Value) {
    let (path, query) = path.split_once('?').unwrap_or((path, ""));
    let bytes = if body.is_null() { Vec::new() } else { serde_json::to_vec(&body).unwrap() };
    let r = svc.handle(method, path, query, &bytes);
    (r.status, r.json_body().unwrap_or(Value::Null))
}

fn error_code(r: &(u16, Value)) -> &str {
    r.1["code"].as_str().unwrap_or("")
}

fn upload(svc: &Service, title: &str, text: &str) -> String {
    let (status, doc) = call(svc, "POST", "/v1/documents", json!({ "title": title, "text": text }));
    assert_eq!(status, 201);
    doc["doc_id"].as_str().unwrap().to_string()
}

fn all_findings(analysis: &Value) -> Vec<Value> {
    analysis["groups"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|g| g["findings"].as_array().unwrap().clone())
        .collect()
}

#[test]
fn health_and_routing() {
    let dir = tempfile::tempdir().unwrap();
    let svc = Service::open(dir.path()).unwrap();
    assert_eq!(call(&svc, "GET", "/v1/health", Value::Null), (200, json!({"status": "ok"})));
    assert_eq!(error_code(&call(&svc, "GET", "/v1/nothing", Value::Null)), "not_found");
    assert_eq!(error_code(&call(&svc, "PUT", "/v1/categories", Value::Null)), "method_not_allowed");
}

#[test]
fn upload_and_repository() {
    let dir = tempfile::tempdir().unwrap();
    let svc = Service::open(dir.path()).unwrap();
    let (_, list) = call(&svc, "GET", "/v1/documents", Value::Null);
    assert_eq!(list["documents"], json!([]));

    let original = "First clause, with “quotes”.\n\n  Second clause ends here.  \n";
    let (status, doc) = call(&svc, "POST", "/v1/documents", json!({ "title": "MSA", "text": original }));
    assert_eq!(status, 201);
    assert_eq!(doc["paragraphs"].as_array().unwrap().len(), 2);
    let id = doc["doc_id"].as_str().unwrap();
    let (status, fetched) = call(&svc, "GET", &format!("/v1/documents/{id}"), Value::Null);
    assert_eq!(status, 200);
    assert_eq!(fetched["text"].as_str().unwrap().as_bytes(), original.as_bytes());

    upload(&svc, "second", "a\n\nb");
    upload(&svc, "third", "c");
    let (_, list) = call(&svc, "GET", "/v1/documents", Value::Null);
    let docs = list["documents"].as_array().unwrap();
    assert_eq!(docs.len(), 3);
    let titles: Vec<&str> = docs.iter().map(|d| d["title"].as_str().unwrap()).collect();
    assert_eq!(titles, ["third", "second", "MSA"]);
    let stamps: Vec<&str> = docs.iter().map(|d| d["uploaded"].as_str().unwrap()).collect();
    assert!(stamps.windows(2).all(|w| w[0] >= w[1]));

    let (status, doc) = call(&svc, "POST", "/v1/documents", json!({ "text": "a;;b;;c", "delimiter": ";;" }));
    assert_eq!(status, 201);
    assert_eq!(doc["paragraphs"].as_array().unwrap().len(), 3);

    let r = call(&svc, "POST", "/v1/documents", json!({ "text": "" }));
    assert_eq!((r.0, error_code(&r)), (400, "empty_document"));
    assert_eq!(error_code(&call(&svc, "POST", "/v1/documents", json!({ "title": "x" }))), "bad_request");
    assert_eq!(error_code(&call(&svc, "GET", "/v1/documents/doc-9999", Value::Null)), "not_found");
}

#[test]
fn analyze_review_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let svc = trained_service(dir.path());
    let planted = [1, 6, 11];
    let id = upload(&svc, "Planted", &planted_document(14, &planted, 4));

    let (status, analysis) = call(&svc, "POST", &format!("/v1/documents/{id}/analyze"), json!({ "categories": [CAT], "threshold": 0.5 }));
    assert_eq!(status, 200);
    assert_eq!(analysis["models"][0]["model_version"], 1);
    let findings = all_findings(&analysis);
    let mut flagged: Vec<u64> = findings.iter().map(|f| f["paragraph_index"].as_u64().unwrap()).collect();
    flagged.sort();
    assert_eq!(flagged, [1, 6, 11]);

    let (_, stored) = call(&svc, "GET", &format!("/v1/documents/{id}/findings"), Value::Null);
    assert_eq!(stored["findings"].as_array().unwrap().len(), 3);

    // Export probabilities equal the analyze payload exactly.
    for format in ["csv", "json"] {
        let r = svc.handle("GET", &format!("/v1/documents/{id}/export"), &format!("format={format}"), b"");
        assert_eq!(r.status, 200);
        let fmt = ReportFormat::parse(format).unwrap();
        assert_eq!(r.content_type, fmt.content_type());
        let report = Report::parse(&r.body, fmt).unwrap();
        assert_eq!(report.rows.len(), findings.len());
        for (row, f) in report.rows.iter().zip(&findings) {
            assert_eq!(row.finding_id, f["finding_id"].as_str().unwrap());
            assert_eq!(row.probability, f["probability"].as_f64().unwrap());
        }
    }

    let store_len = || svc.read(|ws| ws.store().len());
    let before = store_len();
    let comment = "Überprüfen ✓ « 条款 » 🚩 \"quoted\"\nsecond line";
    let fid = findings[0]["finding_id"].as_str().unwrap();
    let (status, updated) = call(&svc, "POST", &format!("/v1/findings/{fid}/review"), json!({ "verdict": "accept", "comment": comment }));
    assert_eq!(status, 200);
    assert_eq!(updated["status"], "accepted");
    assert_eq!(updated["comment"], comment);
    assert_eq!(store_len(), before + 1);

    let r = call(&svc, "POST", &format!("/v1/findings/{fid}/review"), json!({ "verdict": "reject" }));
    assert_eq!((r.0, error_code(&r)), (409, "already_reviewed"));
    assert_eq!(store_len(), before + 1);

    let fid2 = findings[1]["finding_id"].as_str().unwrap();
    let (status, declined) = call(&svc, "POST", &format!("/v1/findings/{fid2}/review"), json!({ "verdict": "decline" }));
    assert_eq!(status, 200);
    assert_eq!(declined["status"], "rejected");
    let last = svc.read(|ws| ws.store().records().last().cloned().unwrap());
    assert!(!last.label);
    assert_eq!(last.finding_id.as_deref(), Some(fid2));

    assert_eq!(error_code(&call(&svc, "POST", "/v1/findings/nope/review", json!({ "verdict": "accept" }))), "not_found");
    let fid3 = findings[2]["finding_id"].as_str().unwrap();
    assert_eq!(error_code(&call(&svc, "POST", &format!("/v1/findings/{fid3}/review"), json!({ "verdict": "maybe" }))), "bad_request");

    let r = svc.handle("GET", &format!("/v1/documents/{id}/export"), "format=json", b"");
    let report = Report::parse(&r.body, ReportFormat::Json).unwrap();
    assert_eq!(report.rows[0].comment.as_deref(), Some(comment));

    let r = svc.handle("GET", &format!("/v1/documents/{id}/export"), "format=text", b"");
    assert_eq!(r.status, 200);
    assert!(String::from_utf8(r.body).unwrap().contains(comment));
}

#[test]
fn analysis_errors() {
    let dir = tempfile::tempdir().unwrap();
    let svc = trained_service(dir.path());
    let id = upload(&svc, "d", "the notice period");
    let path = format!("/v1/documents/{id}/analyze");
    let r = call(&svc, "POST", "/v1/documents/doc-9999/analyze", json!({}));
    assert_eq!((r.0, error_code(&r)), (404, "not_found"));
    for t in [1.01, -0.1] {
        let r = call(&svc, "POST", &path, json!({ "threshold": t }));
        assert_eq!((r.0, error_code(&r)), (400, "bad_threshold"));
    }
    call(&svc, "POST", "/v1/categories", json!({ "name": "Indemnity" }));
    let r = call(&svc, "POST", &path, json!({ "categories": ["Indemnity"] }));
    assert_eq!((r.0, error_code(&r)), (409, "no_model"));
    let r = call(&svc, "POST", &path, json!({ "categories": ["Insurance"] }));
    assert_eq!((r.0, error_code(&r)), (404, "unknown_category"));
    let r = call(&svc, "POST", "/v1/categories/Indemnity/retrain", Value::Null);
    assert_eq!((r.0, error_code(&r)), (409, "empty_store"));
    assert_eq!(error_code(&call(&svc, "GET", "/v1/documents/doc-9999/export", Value::Null)), "not_found");
    let r = svc.handle("GET", &format!("/v1/documents/{id}/export"), "format=pdf", b"");
    assert_eq!(r.json_body().unwrap()["code"], "bad_request");

    // All registered categories are the default, and one lacks a model.
    let r = call(&svc, "POST", &path, Value::Null);
    assert_eq!(error_code(&r), "no_model");
    let (status, analysis) = call(&svc, "POST", &path, json!({ "categories": [CAT] }));
    assert_eq!(status, 200);
    assert_eq!(analysis["threshold"], 0.5);
}

#[test]
fn export_before_analysis_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let svc = Service::open(dir.path()).unwrap();
    let id = upload(&svc, "Fresh", "one\n\ntwo");
    let r = svc.handle("GET", &format!("/v1/documents/{id}/export"), "", b"");
    assert_eq!(r.status, 200);
    assert_eq!(r.content_type, ReportFormat::Csv.content_type());
    let report = Report::parse(&r.body, ReportFormat::Csv).unwrap();
    assert_eq!(report.doc_id, id);
    assert!(report.rows.is_empty());
}

#[test]
fn categories_examples_and_retrain() {
    let dir = tempfile::tempdir().unwrap();
    let svc = trained_service(dir.path());
    let (_, list) = call(&svc, "GET", "/v1/categories", Value::Null);
    let cat = &list["categories"][0];
    assert_eq!(cat["name"], CAT);
    assert_eq!(cat["latest_version"], 1);
    let positives = cat["positives"].as_u64().unwrap();

    let (status, record) = call(&svc, "POST", &format!("/v1/categories/{CAT}/examples"), json!({ "text": "terminate upon notice", "label": true }));
    assert_eq!(status, 201);
    assert_eq!(record["origin"], "manual-add");
    let r = call(&svc, "POST", "/v1/categories/Insurance/examples", json!({ "text": "x", "label": true }));
    assert_eq!(error_code(&r), "unknown_category");

    let (status, meta) = call(&svc, "POST", &format!("/v1/categories/{CAT}/retrain"), Value::Null);
    assert_eq!(status, 200);
    assert_eq!(meta["version"], 2);
    assert_eq!(meta["positives"].as_u64().unwrap(), positives + 1);

    let (_, list) = call(&svc, "POST", "/v1/categories", json!({ "name": "Indemnity" }));
    let names: Vec<&str> = list["categories"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, [CAT, "Indemnity"]);
    assert_eq!(list["categories"][1]["latest_version"], Value::Null);
}

#[test]
fn concurrent_retrains_publish_distinct_versions() {
    let dir = tempfile::tempdir().unwrap();
    let svc = trained_service(dir.path());
    let versions: Vec<u64> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..3)
            .map(|_| s.spawn(|| call(&svc, "POST", &format!("/v1/categories/{CAT}/retrain"), Value::Null).1["version"].as_u64().unwrap()))
            .collect();
        let _ = call(&svc, "GET", "/v1/documents", Value::Null);
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut sorted = versions.clone();
    sorted.sort();
    assert_eq!(sorted, [2, 3, 4]);
}

#[test]
fn every_error_is_a_single_documented_code() {
    let dir = tempfile::tempdir().unwrap();
    let svc = Service::open(dir.path()).unwrap();
    let bad: [(&str, &str, &[u8]); 5] = [
        ("POST", "/v1/documents", b"[1,2"),
        ("GET", "/v1/documents/x", b""),
        ("POST", "/v1/categories/x/retrain", b""),
        ("PATCH", "/v1/health", b""),
        ("POST", "/v1/categories", b"{}"),
    ];
    let documented: Vec<&str> = ErrorCode::ALL.iter().map(|c| c.as_str()).collect();
    for (m, p, b) in bad {
        let r: Response = svc.handle(m, p, "", b);
        assert!(!r.is_success());
        let v = r.json_body().unwrap();
        let obj = v.as_object().unwrap();
        assert!(documented.contains(&obj["code"].as_str().unwrap()));
        assert!(obj["message"].is_string());
        assert!(obj.keys().all(|k| ["code", "message", "detail"].contains(&k.as_str())));
    }
}

/// The nine reviewer-facing functions, each exercised through the API.
#[test]
fn every_framework_function_is_reachable() {
    let dir = tempfile::tempdir().unwrap();
    let svc = trained_service(dir.path());
    let text = planted_document(6, &[2], 9);
    let mut covered = Vec::new();

    // 1 document upload
    let id = upload(&svc, "Coverage", &text);
    covered.push("document upload");
    // 2 document repository
    let (_, list) = call(&svc, "GET", "/v1/documents", Value::Null);
    assert_eq!(list["documents"][0]["doc_id"], id.as_str());
    covered.push("document repository");
    // 3 risk category selection
    let (status, analysis) = call(&svc, "POST", &format!("/v1/documents/{id}/analyze"), json!({ "categories": [CAT] }));
    assert_eq!(status, 200);
    assert_eq!(analysis["groups"][0]["category"], CAT);
    covered.push("risk category selection");
    // 4 extracted risk paragraphs
    let findings = all_findings(&analysis);
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0]["paragraph_index"], 2);
    covered.push("extracted risk paragraphs");
    // 5 probability values
    let p = findings[0]["probability"].as_f64().unwrap();
    assert!((0.5..=1.0).contains(&p));
    covered.push("probability values");
    // 6 reviewing and commenting
    let fid = findings[0]["finding_id"].as_str().unwrap();
    let (_, reviewed) = call(&svc, "POST", &format!("/v1/findings/{fid}/review"), json!({ "verdict": "accept", "comment": "agreed" }));
    assert_eq!(reviewed["comment"], "agreed");
    covered.push("reviewing and commenting");
    // 7 feedback to decline a paragraph
    let (_, all) = call(&svc, "POST", &format!("/v1/documents/{id}/analyze"), json!({ "threshold": 0.0 }));
    let other = all_findings(&all).into_iter().find(|f| f["status"] == "pending").unwrap();
    let (status, _) = call(&svc, "POST", &format!("/v1/findings/{}/review", other["finding_id"].as_str().unwrap()), json!({ "verdict": "decline" }));
    assert_eq!(status, 200);
    covered.push("decline feedback");
    // 8 original legal document
    let (_, doc) = call(&svc, "GET", &format!("/v1/documents/{id}"), Value::Null);
    assert_eq!(doc["text"], text.as_str());
    covered.push("original document");
    // 9 export reports
    let r = svc.handle("GET", &format!("/v1/documents/{id}/export"), "format=json", b"");
    assert_eq!(r.status, 200);
    covered.push("export reports");

    assert_eq!(covered.len(), 9);
}
