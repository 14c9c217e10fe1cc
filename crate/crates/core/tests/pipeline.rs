mod common;

use proptest::prelude::*;

use lexrisk::corpus::{ingest_labeled, CategoryRegistry};
use lexrisk::eval::{sweep, Axis, EvalSplit, SweepParam};
use lexrisk::pipeline::{
    add_manual_example, analyze_document, export_report, record_review, retrain, training_set,
    FindingBook, ModelRegistry, Origin, Report, ReportFormat, Status, TrainingStore, Verdict,
    VersionRef, Workspace,
};
use lexrisk::synthetic::{planted_document, TopicCorpus};
use lexrisk::Error;

use common::final_config;

const CAT: &str = "Termination";

fn trained(dir: &std::path::Path) -> Workspace {
    let mut ws = Workspace::open(dir).unwrap();
    ws.set_recipe(final_config(100)).unwrap();
    ws.ingest(&TopicCorpus::default().generate(), (0.8, 0.1, 0.1), 1).unwrap();
    ws.retrain(CAT).unwrap();
    ws
}

#[test]
fn planted_paragraphs_are_exactly_the_flagged_ones() {
    let dir = tempfile::tempdir().unwrap();
    let mut ws = trained(dir.path());
    let planted = [2, 9, 15];
    let doc = ws.upload("Planted", &planted_document(20, &planted, 21), None).unwrap();
    assert_eq!(doc.paragraphs.len(), 20);
    let analysis = ws.analyze(&doc.doc_id, None, 0.5).unwrap();
    let mut flagged: Vec<usize> = analysis.findings.iter().map(|f| f.paragraph_index).collect();
    flagged.sort();
    assert_eq!(flagged, planted);
    assert!(analysis
        .findings
        .windows(2)
        .all(|w| w[0].probability >= w[1].probability));
}

#[test]
fn analysis_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let ws = trained(dir.path());
    let cats = vec![CAT.to_string()];
    let empty = analyze_document("d", &[], &cats, ws.registry(), 0.5).unwrap();
    assert!(empty.findings.is_empty());

    let paragraphs: Vec<String> = planted_document(6, &[1], 3).split("\n\n").map(str::to_string).collect();
    let all = analyze_document("d", &paragraphs, &cats, ws.registry(), 0.0).unwrap();
    assert_eq!(all.findings.len(), paragraphs.len());
    let again = analyze_document("d", &paragraphs, &cats, ws.registry(), 0.0).unwrap();
    assert_eq!(all, again);

    let odd = vec!["zzz qqq xxyy".to_string(), paragraphs[1].clone()];
    let partial = analyze_document("d", &odd, &cats, ws.registry(), 0.0).unwrap();
    assert_eq!(partial.findings.len(), 1);
    assert_eq!(partial.warnings.len(), 1);
    assert_eq!(partial.warnings[0].paragraph_id, "d:p0");

    assert!(matches!(
        analyze_document("d", &odd, &cats, ws.registry(), 1.01),
        Err(Error::BadThreshold(_))
    ));
    assert!(matches!(
        analyze_document("d", &odd, &["Insurance".to_string()], ws.registry(), 0.5),
        Err(Error::NoModel(_))
    ));
}

#[test]
fn review_state_machine() {
    let dir = tempfile::tempdir().unwrap();
    let mut ws = trained(dir.path());
    let doc = ws.upload("Doc", &planted_document(4, &[0, 1], 5), None).unwrap();
    let findings = ws.analyze(&doc.doc_id, None, 0.0).unwrap().findings;
    let before = ws.store().len();

    let (f, rec) = ws.review(&findings[0].finding_id, Verdict::Accept, Some("ok ✓ naïve")).unwrap();
    assert_eq!(f.status, Status::Accepted);
    assert_eq!(f.comment.as_deref(), Some("ok ✓ naïve"));
    assert!(rec.label);
    assert_eq!(rec.origin, Origin::ReviewAccept);
    assert_eq!(ws.store().len(), before + 1);

    ws.review(&findings[1].finding_id, Verdict::Reject, None).unwrap();
    assert!(matches!(
        ws.review(&findings[1].finding_id, Verdict::Reject, None),
        Err(Error::AlreadyReviewed(_))
    ));
    assert!(matches!(ws.review("nope", Verdict::Accept, None), Err(Error::UnknownFinding(_))));
    assert_eq!(ws.store().len(), before + 2);
    let last = ws.store().records().last().unwrap();
    assert!(!last.label);
    assert_eq!(last.origin, Origin::ReviewReject);

    // Re-analysis with the same model keeps review state.
    let again = ws.analyze(&doc.doc_id, None, 0.0).unwrap().findings;
    let status_of = |id: &str| again.iter().find(|f| f.finding_id == id).unwrap().status;
    assert_eq!(status_of(&findings[0].finding_id), Status::Accepted);
    assert_eq!(status_of(&findings[1].finding_id), Status::Rejected);
}

#[test]
fn manual_examples_flow_into_retraining() {
    let dir = tempfile::tempdir().unwrap();
    let mut ws = trained(dir.path());
    let v1 = ws.registry().get(CAT, VersionRef::Latest).unwrap().meta.clone();
    let before = ws.store().len();
    ws.add_manual("the breach notice shall terminate", CAT, true).unwrap();
    assert_eq!(ws.store().len(), before + 1);
    assert!(matches!(ws.add_manual("text", "Insurance", true), Err(Error::UnknownCategory(_))));
    let v2 = ws.retrain(CAT).unwrap();
    assert_eq!(v2.training_records, v1.training_records + 1);
    assert_eq!(v2.positives, v1.positives + 1);
}

#[test]
fn registry_versions_are_immutable_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let mut ws = trained(dir.path());
    let v1_model = std::fs::read(dir.path().join("models/Termination/v0001.model")).unwrap();
    ws.add_manual("notice of termination for breach", CAT, true).unwrap();
    let v2 = ws.retrain(CAT).unwrap();
    assert_eq!(v2.version, 2);
    assert_eq!(ws.registry().versions(CAT).len(), 2);
    assert_eq!(ws.registry().get(CAT, VersionRef::Latest).unwrap().meta.version, 2);
    let reread = std::fs::read(dir.path().join("models/Termination/v0001.model")).unwrap();
    assert_eq!(v1_model, reread);
    assert_eq!(ws.registry().get(CAT, VersionRef::Exact(1)).unwrap().model_bytes, v1_model);
    assert!(ws.registry().get(CAT, VersionRef::Exact(3)).is_err());
    assert!(ws.registry().get(CAT, VersionRef::Exact(0)).is_err());

    let reopened = Workspace::open(dir.path()).unwrap();
    for v in [1, 2] {
        let a = ws.registry().get(CAT, VersionRef::Exact(v)).unwrap();
        let b = reopened.registry().get(CAT, VersionRef::Exact(v)).unwrap();
        assert_eq!(a.meta, b.meta);
        assert_eq!(a.model_bytes, b.model_bytes);
        assert_eq!(a.classifier_bytes, b.classifier_bytes);
    }
    assert_eq!(reopened.store().records(), ws.store().records());
}

#[test]
fn retrain_errors_and_degenerate_categories() {
    let mut store = TrainingStore::in_memory();
    let mut registry = ModelRegistry::in_memory();
    let recipe = final_config(20);
    assert!(matches!(retrain(CAT, &mut registry, &store, &recipe), Err(Error::EmptyStore(_))));
    let cats = CategoryRegistry::new(["Insurance"]);
    for r in TopicCorpus::default().generate().iter().take(30) {
        add_manual_example(&mut store, &cats, None, &r.text, "Insurance", false).unwrap();
    }
    let meta = retrain("Insurance", &mut registry, &store, &recipe).unwrap();
    assert!(meta.degenerate);
    assert_eq!(meta.positives, 0);
}

#[test]
fn reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut ws = trained(dir.path());
    let doc = ws.upload("Master \"services\", agreement", &planted_document(10, &[1, 4, 7], 8), None).unwrap();

    let empty = ws.export(&doc.doc_id, ReportFormat::Csv).unwrap();
    let parsed = Report::parse(&empty, ReportFormat::Csv).unwrap();
    assert_eq!(parsed.doc_id, doc.doc_id);
    assert_eq!(parsed.title, doc.title);
    assert!(parsed.rows.is_empty());
    let text = String::from_utf8(ws.export(&doc.doc_id, ReportFormat::Text).unwrap()).unwrap();
    assert!(text.contains(&doc.doc_id));

    let analysis = ws.analyze(&doc.doc_id, None, 0.5).unwrap();
    assert_eq!(analysis.findings.len(), 3);
    ws.review(&analysis.findings[0].finding_id, Verdict::Accept, Some("line one\nline, two")).unwrap();
    for format in [ReportFormat::Csv, ReportFormat::Json] {
        let bytes = ws.export(&doc.doc_id, format).unwrap();
        let report = Report::parse(&bytes, format).unwrap();
        assert_eq!(report.rows.len(), 3);
        for (row, f) in report.rows.iter().zip(&analysis.findings) {
            assert_eq!(row.probability, f.probability);
            assert_eq!(row.finding_id, f.finding_id);
        }
        assert_eq!(report.rows[0].comment.as_deref(), Some("line one\nline, two"));
        assert_eq!(report.render(format).unwrap(), bytes);
    }
    assert!(matches!(ws.export("doc-9999", ReportFormat::Csv), Err(Error::UnknownDocument(_))));
    assert!(Report::parse(b"garbage", ReportFormat::Csv).is_err());
}

#[test]
fn export_report_of_nothing_has_a_header() {
    let report = export_report("doc-0001", "Empty", &[]);
    let csv = String::from_utf8(report.render(ReportFormat::Csv).unwrap()).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "doc_id,title,findings");
    assert_eq!(csv.lines().nth(1).unwrap(), "doc-0001,Empty,0");
    assert_eq!(Report::parse(csv.as_bytes(), ReportFormat::Csv).unwrap(), report);
}

#[test]
fn ten_verdicts_make_ten_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut ws = trained(dir.path());
    let doc = ws.upload("Doc", &planted_document(12, &[3, 5], 2), None).unwrap();
    let findings = ws.analyze(&doc.doc_id, None, 0.0).unwrap().findings;
    let before = ws.store().len();
    let (pos_before, neg_before) = ws.store().label_counts(CAT);
    let verdicts: Vec<Verdict> = (0..10)
        .map(|i| if i % 4 == 1 { Verdict::Reject } else { Verdict::Accept })
        .collect();
    for (f, &v) in findings.iter().zip(&verdicts) {
        ws.review(&f.finding_id, v, None).unwrap();
    }
    let accepts = verdicts.iter().filter(|&&v| v == Verdict::Accept).count();
    assert_eq!(ws.store().len(), before + 10);
    let (pos, neg) = ws.store().label_counts(CAT);
    assert_eq!(pos, pos_before + accepts);
    assert_eq!(neg, neg_before + 10 - accepts);
    let reviewed = ws.store().records()[before..]
        .iter()
        .map(|r| r.finding_id.clone().unwrap())
        .collect::<std::collections::HashSet<_>>();
    assert_eq!(reviewed.len(), 10);
}

#[test]
fn sweep_rows_follow_grid_order() {
    let records = TopicCorpus { paragraphs: 80, ..TopicCorpus::default() }.generate();
    let data = ingest_labeled(&records, (0.6, 0.2, 0.2), 2, None).unwrap();
    let base = final_config(40);
    let forward = sweep(&base, &[Axis::new(SweepParam::Negative, ["5", "10", "20"])], &data, CAT, EvalSplit::Validation).unwrap();
    let backward = sweep(&base, &[Axis::new(SweepParam::Negative, ["20", "10", "5"])], &data, CAT, EvalSplit::Validation).unwrap();
    let mut reversed = backward.rows.clone();
    reversed.reverse();
    assert_eq!(forward.rows, reversed);
    let test_split = sweep(&base, &[Axis::new(SweepParam::Negative, ["5"])], &data, CAT, EvalSplit::Test).unwrap();
    assert!(test_split.to_text().contains("test split"));
    assert!(matches!(
        sweep(&base, &[Axis::new(SweepParam::Negative, ["5"])], &data, "Insurance", EvalSplit::Validation),
        Err(Error::UnknownCategory(_))
    ));
    assert!(sweep(&base, &[], &data, CAT, EvalSplit::Validation).is_err());
}

#[test]
fn documents_are_listed_newest_first() {
    let dir = tempfile::tempdir().unwrap();
    let mut ws = Workspace::open(dir.path()).unwrap();
    assert!(ws.documents().is_empty());
    for i in 0..3 {
        ws.upload(&format!("d{i}"), "one\n\ntwo", None).unwrap();
    }
    let titles: Vec<&str> = ws.documents().iter().map(|d| d.title.as_str()).collect();
    assert_eq!(titles, ["d2", "d1", "d0"]);
    let d = ws.upload("delim", "a||b||  ||c", Some("||")).unwrap();
    assert_eq!(d.paragraphs, ["a", "b", "c"]);
    assert!(matches!(ws.upload("x", " \n\n ", None), Err(Error::EmptyDocument)));
    let reopened = Workspace::open(dir.path()).unwrap();
    assert_eq!(reopened.document(&d.doc_id).unwrap().text, "a||b||  ||c");
}

#[derive(Clone, Debug)]
enum Op {
    Manual(bool),
    Review(usize, bool),
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn store_is_append_only(ops in prop::collection::vec(
        prop_oneof![any::<bool>().prop_map(Op::Manual), (0usize..6, any::<bool>()).prop_map(|(i, a)| Op::Review(i, a))],
        1..25,
    )) {
        let mut store = TrainingStore::in_memory();
        let mut book = FindingBook::in_memory();
        let cats = CategoryRegistry::new([CAT]);
        let findings: Vec<_> = (0..6)
            .map(|i| lexrisk::pipeline::Finding {
                finding_id: format!("d:p{i}:{CAT}:v1"),
                doc_id: "d".into(),
                paragraph_id: format!("d:p{i}"),
                paragraph_index: i,
                text: format!("paragraph {i}"),
                category: CAT.into(),
                probability: 0.5,
                status: Status::Pending,
                comment: None,
                model_version: 1,
            })
            .collect();
        book.add(&findings).unwrap();
        let mut snapshot = Vec::new();
        for op in ops {
            let len = store.len();
            let result = match op {
                Op::Manual(label) => add_manual_example(&mut store, &cats, None, "manual text", CAT, label).map(|_| ()),
                Op::Review(i, accept) => {
                    let v = if accept { Verdict::Accept } else { Verdict::Reject };
                    record_review(&mut book, &mut store, &findings[i].finding_id, v, None).map(|_| ())
                }
            };
            prop_assert_eq!(store.len(), len + result.is_ok() as usize);
            prop_assert_eq!(&store.records()[..snapshot.len()], &snapshot[..]);
            snapshot = store.records().to_vec();
        }
        // one store record per reviewed finding, and vice versa
        let reviewed = findings.iter().filter(|f| book.get(&f.finding_id).unwrap().status != Status::Pending).count();
        let review_records = store.records().iter().filter(|r| r.finding_id.is_some()).count();
        prop_assert_eq!(reviewed, review_records);
        let (texts, labels) = training_set(&store, CAT).unwrap_or_default();
        prop_assert_eq!(texts.len(), store.len());
        prop_assert_eq!(labels.len(), store.len());
    }
}
