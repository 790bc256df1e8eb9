use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use sentimt::corpus::{annotation_path, load_annotations, write_corpus, AnnotationRecord, Corpus, ReviewRecord};
use sentimt::lexicons::PolarityTag;
use sentimt::metrics::evaluate;
use sentimt::sentiment::{LexiconScorer, SentenceScorer};
use sentimt_service::{router, QueueItem, QueuePage, ReportView, Service, ServiceConfig};

/// Ten flagged reviews plus two consistent ones.
fn fixture_records() -> Vec<ReviewRecord> {
    let rows: [(&str, u8, &str, &str, &str); 12] = [
        ("f01", 5, "الروايه رهيبه", "The novel is terrible.", "The novel is great."),
        ("f02", 5, "الكتاب مش حلو خالص", "The book is bad.", "The book is not bad at all."),
        ("f03", 1, "النهايه فظيعه", "The ending is great.", "The ending is terrible."),
        ("ok1", 5, "الروايه جميله", "The novel is beautiful.", "The novel is beautiful."),
        ("f04", 5, "الكاتب خفيف الظل", "The writer is light and weak.", "The writer is funny."),
        ("f05", 1, "البطل عبيط", "The hero is awesome.", "The hero is silly."),
        ("f06", 5, "أظرف روايه", "The most tiring and boring novel.", "The nicest novel."),
        ("f07", 5, "الروايه طويله", "The novel is long and boring.", "The novel is long and nice."),
        ("ok2", 1, "الروايه مملة", "The novel is boring.", "The novel is boring."),
        ("f08", 5, "القصه جامده", "The story is rigid.", "The story is awesome."),
        ("f09", 5, "الروايه رهيبه بس النهايه مملة", "The novel is great, the ending is boring and weak.", "The novel is terrible, the ending is boring and weak."),
        ("f10", 1, "معجبنيش", "I loved it.", "I did not like it."),
    ];
    rows.iter()
        .map(|&(id, rating, src, mt, reference)| ReviewRecord::new(id, src, rating).with_mt(mt).with_reference(reference))
        .collect()
}

fn scorer() -> Arc<dyn SentenceScorer> {
    Arc::new(LexiconScorer::builtin())
}

fn setup(dir: &Path) -> (Arc<Service>, Router) {
    let corpus = Corpus::new(fixture_records(), Vec::new()).unwrap();
    let path = dir.join("corpus.jsonl");
    write_corpus(&corpus, &path).unwrap();
    let service = Arc::new(Service::load(&ServiceConfig::new(&path), scorer()).unwrap());
    let app = router(service.clone(), None);
    (service, app)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() })
}

fn ids(page: &QueuePage) -> Vec<&str> {
    page.items.iter().map(|i| i.flag.item_id.as_str()).collect()
}

#[tokio::test]
async fn queue_lists_flags_in_corpus_order() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let (status, body) = call(&app, "GET", "/api/queue?page_size=50", None).await;
    assert_eq!(status, StatusCode::OK);
    let page: QueuePage = serde_json::from_value(body).unwrap();
    assert_eq!(ids(&page), ["f01", "f02", "f03", "f04", "f05", "f06", "f07", "f08", "f09", "f10"]);
    assert_eq!(page.total, 10);
}

#[tokio::test]
async fn queue_filters_and_paginates() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let (_, body) = call(&app, "GET", "/api/queue?category=Contronym", None).await;
    let page: QueuePage = serde_json::from_value(body).unwrap();
    assert_eq!(ids(&page), ["f01", "f03", "f08", "f09"]);
    assert!(page.items.iter().all(|i| i.flag.primary_category.as_str() == "Contronym"));

    let (_, body) = call(&app, "GET", "/api/queue?page=2&page_size=3", None).await;
    let page: QueuePage = serde_json::from_value(body).unwrap();
    assert_eq!(ids(&page), ["f04", "f05", "f06"]);

    let (_, body) = call(&app, "GET", "/api/queue?page=9", None).await;
    assert_eq!(body["items"], json!([]));

    for bad in ["/api/queue?category=Bogus", "/api/queue?page=0", "/api/queue?page_size=0"] {
        let (status, _) = call(&app, "GET", bad, None).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
}

#[tokio::test]
async fn queue_is_read_only() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let (_, first) = call(&app, "GET", "/api/queue", None).await;
    let (_, second) = call(&app, "GET", "/api/queue", None).await;
    assert_eq!(first, second);
    assert_eq!(std::fs::read_to_string(annotation_path(&dir.path().join("corpus.jsonl"))).unwrap(), "");
}

#[tokio::test]
async fn item_exposes_contronym_occurrences_with_glosses() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let (status, body) = call(&app, "GET", "/api/items/f01", None).await;
    assert_eq!(status, StatusCode::OK);
    let item: QueueItem = serde_json::from_value(body).unwrap();
    assert_eq!(item.source_tokens, ["الروايه", "رهيبه"]);
    assert_eq!(item.contronym_occurrences.len(), 1);
    let occ = &item.contronym_occurrences[0];
    assert_eq!((occ.token_index, occ.lemma.as_str(), occ.tag), (1, "رهيبه", None));
    assert!(occ.positive_glosses.contains(&"great".to_string()));
    assert!(occ.negative_glosses.contains(&"terrible".to_string()));

    assert_eq!(call(&app, "GET", "/api/items/nope", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/items/ok1", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn polarity_tag_is_stored_and_visible() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let body = json!({"kind": "polarity_tag", "token_index": 1, "polarity": "POS", "annotator": "a1"});
    let (status, created) = call(&app, "POST", "/api/items/f01/annotations", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED);
    let record: AnnotationRecord = serde_json::from_value(created).unwrap();
    assert_eq!(record.item_id, "f01");
    assert!(record.timestamp > 0);

    let (_, body) = call(&app, "GET", "/api/items/f01", None).await;
    let item: QueueItem = serde_json::from_value(body).unwrap();
    assert_eq!(item.current_annotations, vec![record.clone()]);
    assert_eq!(item.source_tokens[1], "رهيبه__POS");
    assert_eq!(item.contronym_occurrences[0].tag, Some(PolarityTag::Pos));

    let log = load_annotations(&annotation_path(&dir.path().join("corpus.jsonl"))).unwrap();
    assert_eq!(log, vec![record]);
}

#[tokio::test]
async fn invalid_submissions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let (status, body) = call(&app, "POST", "/api/items/f01/annotations", Some(json!({"kind": "polarity_tag", "token_index": 0, "polarity": "POS", "annotator": "a1"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["fields"][0]["message"], "index not a contronym occurrence");

    let (status, _) = call(&app, "POST", "/api/items/zzz/annotations", Some(json!({"kind": "post_edit", "edited_target": "x", "annotator": "a1"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let cases = [
        json!({"kind": "polarity_tag", "token_index": 1, "annotator": "a1"}),
        json!({"kind": "post_edit", "annotator": "a1"}),
        json!({"kind": "post_edit", "edited_target": "x", "annotator": "a1", "timestamp": 5}),
        json!({"kind": "post_edit", "edited_target": "x", "annotator": "a1", "item_id": "f02"}),
        json!({"kind": "rename", "annotator": "a1"}),
        json!([1, 2]),
    ];
    for body in cases {
        let (status, resp) = call(&app, "POST", "/api/items/f01/annotations", Some(body.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert!(resp["fields"].as_array().is_some_and(|f| !f.is_empty()), "{resp}");
    }
    let log = std::fs::read_to_string(annotation_path(&dir.path().join("corpus.jsonl"))).unwrap();
    assert!(log.is_empty());
}

#[tokio::test]
async fn report_matches_offline_evaluation_without_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let (status, body) = call(&app, "GET", "/api/report", None).await;
    assert_eq!(status, StatusCode::OK);
    let view: ReportView = serde_json::from_value(body).unwrap();
    let corpus = Corpus::new(fixture_records(), Vec::new()).unwrap();
    let offline = evaluate(&corpus, &sentimt::ContronymLexicon::builtin(), &LexiconScorer::builtin(), &Default::default()).unwrap();
    assert_eq!(view.report, offline);
    assert_eq!(view.histogram.total, 10);
    assert!(view.missing_reference.is_empty());
}

#[tokio::test]
async fn corrective_post_edit_lowers_cost() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = setup(dir.path());
    let before: ReportView = serde_json::from_value(call(&app, "GET", "/api/report", None).await.1).unwrap();
    let tag = json!({"kind": "polarity_tag", "token_index": 1, "polarity": "POS", "annotator": "a1"});
    assert_eq!(call(&app, "POST", "/api/items/f09/annotations", Some(tag)).await.0, StatusCode::CREATED);
    let edit = json!({"kind": "post_edit", "edited_target": "The novel is great, the ending is boring and weak.", "annotator": "a1"});
    assert_eq!(call(&app, "POST", "/api/items/f09/annotations", Some(edit)).await.0, StatusCode::CREATED);

    let item: QueueItem = serde_json::from_value(call(&app, "GET", "/api/items/f09", None).await.1).unwrap();
    assert_eq!(item.current_annotations.len(), 2);
    assert_eq!(item.reference_text.as_deref(), Some("The novel is great, the ending is boring and weak."));

    let after: ReportView = serde_json::from_value(call(&app, "GET", "/api/report", None).await.1).unwrap();
    let (b, a) = (before.report.cost_overall.unwrap(), after.report.cost_overall.unwrap());
    assert!(a < b, "overall cost {b} -> {a}");
    assert!(after.report.cost_positive.unwrap() < before.report.cost_positive.unwrap());
}

#[tokio::test]
async fn report_lists_records_without_references() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = fixture_records();
    records[0].reference_text = None;
    let path = dir.path().join("c.jsonl");
    write_corpus(&Corpus::new(records, Vec::new()).unwrap(), &path).unwrap();
    let service = Arc::new(Service::load(&ServiceConfig::new(&path), scorer()).unwrap());
    let view = service.report().unwrap();
    assert_eq!(view.missing_reference, ["f01"]);
    assert_eq!(view.report.records, 11);
}

#[tokio::test]
async fn empty_corpus_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    std::fs::write(&path, "").unwrap();
    let service = Arc::new(Service::load(&ServiceConfig::new(&path), scorer()).unwrap());
    let app = router(service, None);
    let (_, body) = call(&app, "GET", "/api/report", None).await;
    let view: ReportView = serde_json::from_value(body).unwrap();
    assert_eq!(view.report.records, 0);
    assert_eq!(view.report.bleu, None);
    let (_, body) = call(&app, "GET", "/api/queue", None).await;
    assert_eq!(body["total"], 0);
}

#[test]
fn concurrent_submissions_each_land_intact() {
    let dir = tempfile::tempdir().unwrap();
    let (service, _) = setup(dir.path());
    let items = ["f01", "f02", "f03", "f04", "f05", "f06", "f07", "f08"];
    std::thread::scope(|scope| {
        for (t, id) in items.iter().enumerate() {
            let service = &service;
            scope.spawn(move || {
                for k in 0..10 {
                    let body = json!({"kind": "post_edit", "edited_target": format!("edit {t}-{k} \"quoted\""), "annotator": format!("a{t}")});
                    service.submit(id, body.to_string().as_bytes()).unwrap();
                }
            });
        }
    });
    let log = load_annotations(&annotation_path(&dir.path().join("corpus.jsonl"))).unwrap();
    assert_eq!(log.len(), 80);
    for w in log.windows(2) {
        assert!(w[0].timestamp < w[1].timestamp);
    }
    for (t, id) in items.iter().enumerate() {
        let mine: Vec<&AnnotationRecord> = log.iter().filter(|a| a.item_id == *id).collect();
        assert_eq!(mine.len(), 10);
        assert!(mine.iter().all(|a| a.annotator == format!("a{t}")));
        let item = service.item(id).unwrap();
        assert_eq!(item.reference_text.unwrap(), format!("edit {t}-9 \"quoted\""));
    }
}

#[test]
fn annotations_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (service, _) = setup(dir.path());
    let body = json!({"kind": "polarity_tag", "token_index": 1, "polarity": "NEG", "annotator": "a1"});
    let first = service.submit("f03", body.to_string().as_bytes()).unwrap();
    drop(service);
    let reloaded = Service::load(&ServiceConfig::new(dir.path().join("corpus.jsonl")), scorer()).unwrap();
    let item = reloaded.item("f03").unwrap();
    assert_eq!(item.current_annotations, vec![first.clone()]);
    let second = reloaded.submit("f03", body.to_string().as_bytes()).unwrap();
    assert!(second.timestamp > first.timestamp);
}

#[tokio::test]
async fn serves_static_files() {
    let dir = tempfile::tempdir().unwrap();
    let (service, _) = setup(dir.path());
    let site = dir.path().join("site");
    std::fs::create_dir(&site).unwrap();
    std::fs::write(site.join("index.html"), "<html>queue</html>").unwrap();
    let app = router(service, Some(&site));
    let resp = app.oneshot(Request::builder().uri("/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    assert_eq!(&bytes[..], b"<html>queue</html>");
}
