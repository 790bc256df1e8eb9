//! HTTP annotation API over a flagged review corpus.
//!
//! Reads are served from an immutable snapshot swapped atomically on every
//! write; annotation appends go through a single mutex-guarded appender that
//! also assigns strictly increasing server timestamps.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use arc_swap::ArcSwap;
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use tower_http::services::ServeDir;

use sentimt::corpus::{annotation_path, append_annotation, apply_annotations, load_reviews, AnnotationKind, AnnotationRecord, Corpus, CorpusError, CorpusFormat, FieldError};
use sentimt::detect::{classify_flags, flag_discrepancies, frequency_report, Classifier, DetectError, DiscrepancyFlag, ErrorCategory, FrequencyReport, Thresholds};
use sentimt::lexicons::{Lexica, PolarityTag};
use sentimt::metrics::{evaluate, EvalOptions, EvalReport, MetricError};
use sentimt::normalize::{normalize_token, tokenize};
use sentimt::sentiment::SentenceScorer;

pub const DEFAULT_PORT: u16 = 8077;
pub const DEFAULT_PAGE_SIZE: usize = 20;
pub const MAX_PAGE_SIZE: usize = 500;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub corpus_path: PathBuf,
    pub format: CorpusFormat,
    pub static_dir: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub options: EvalOptions,
    pub lexica: Lexica,
}

impl ServiceConfig {
    pub fn new(corpus_path: impl Into<PathBuf>) -> Self {
        let corpus_path = corpus_path.into();
        Self {
            format: CorpusFormat::from_path(&corpus_path),
            corpus_path,
            static_dir: None,
            thresholds: Thresholds::default(),
            options: EvalOptions::default(),
            lexica: Lexica::builtin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceView {
    pub token_index: usize,
    pub lemma: String,
    pub positive_glosses: Vec<String>,
    pub negative_glosses: Vec<String>,
    pub tag: Option<PolarityTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub flag: DiscrepancyFlag,
    /// Current source tokens, with any polarity tags applied; annotation
    /// token indices refer to these positions.
    pub source_tokens: Vec<String>,
    pub mt_text: String,
    pub reference_text: Option<String>,
    pub contronym_occurrences: Vec<OccurrenceView>,
    pub current_annotations: Vec<AnnotationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuePage {
    pub items: Vec<QueueItem>,
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportView {
    pub report: EvalReport,
    pub histogram: FrequencyReport,
    /// Records left out of the metrics because they lack a translation or reference.
    pub missing_reference: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fields: Vec<FieldError>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error: error.into(), fields: Vec::new() } }
    }

    fn invalid(fields: Vec<FieldError>) -> Self {
        Self { status: StatusCode::UNPROCESSABLE_ENTITY, body: ErrorBody { error: "invalid annotation".into(), fields } }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

struct Snapshot {
    corpus: Corpus,
    applied: Corpus,
    report: OnceLock<Result<ReportView, String>>,
}

impl Snapshot {
    fn new(corpus: Corpus) -> Result<Self, CorpusError> {
        let applied = apply_annotations(&corpus)?;
        Ok(Self { corpus, applied, report: OnceLock::new() })
    }
}

struct Appender {
    path: PathBuf,
    last_timestamp: i64,
}

/// Shared server state.
pub struct Service {
    lexica: Lexica,
    scorer: Arc<dyn SentenceScorer>,
    options: EvalOptions,
    flags: Vec<DiscrepancyFlag>,
    flag_index: HashMap<String, usize>,
    snapshot: ArcSwap<Snapshot>,
    appender: Mutex<Appender>,
}

fn now_millis() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)
}

impl Service {
    /// Loads the corpus and its annotation log, then flags and classifies it.
    /// Flags are fixed for the server's lifetime: annotations never change a
    /// record's rating or machine translation.
    pub fn load(config: &ServiceConfig, scorer: Arc<dyn SentenceScorer>) -> Result<Self, ServiceError> {
        let corpus = load_reviews(&config.corpus_path, config.format)?;
        Self::from_corpus(corpus, annotation_path(&config.corpus_path), config, scorer)
    }

    pub fn from_corpus(corpus: Corpus, log_path: PathBuf, config: &ServiceConfig, scorer: Arc<dyn SentenceScorer>) -> Result<Self, ServiceError> {
        let raw = flag_discrepancies(&corpus, scorer.as_ref(), &config.thresholds)?;
        let flags = classify_flags(&corpus, &raw, &Classifier::new(&config.lexica))?;
        let flag_index = flags.iter().enumerate().map(|(i, f)| (f.item_id.clone(), i)).collect();
        let last_timestamp = corpus.annotations().iter().map(|a| a.timestamp).max().unwrap_or(0);
        Ok(Self {
            lexica: config.lexica.clone(),
            scorer,
            options: config.options,
            flags,
            flag_index,
            snapshot: ArcSwap::from_pointee(Snapshot::new(corpus)?),
            appender: Mutex::new(Appender { path: log_path, last_timestamp }),
        })
    }

    pub fn flags(&self) -> &[DiscrepancyFlag] {
        &self.flags
    }

    fn item_view(&self, snap: &Snapshot, flag: &DiscrepancyFlag) -> QueueItem {
        let record = snap.applied.get(&flag.item_id).expect("flags refer to corpus records");
        let tokens = tokenize(&record.source_text);
        let normalized: Vec<String> = tokens.iter().map(|t| normalize_token(t)).collect();
        let contronym_occurrences = self
            .lexica
            .contronyms
            .find_contronyms(&normalized)
            .into_iter()
            .map(|occ| {
                let entry = self.lexica.contronyms.entry(&occ.lemma).expect("occurrence lemma is in the lexicon");
                OccurrenceView {
                    token_index: occ.token_index,
                    lemma: occ.lemma,
                    positive_glosses: entry.positive_glosses.iter().cloned().collect(),
                    negative_glosses: entry.negative_glosses.iter().cloned().collect(),
                    tag: occ.tag,
                }
            })
            .collect();
        QueueItem {
            flag: flag.clone(),
            source_tokens: tokens.into_inner(),
            mt_text: record.mt_text.clone().unwrap_or_default(),
            reference_text: record.reference_text.clone(),
            contronym_occurrences,
            current_annotations: snap.corpus.annotations_for(&flag.item_id).cloned().collect(),
        }
    }

    pub fn queue(&self, category: Option<&str>, page: Option<usize>, page_size: Option<usize>) -> Result<QueuePage, ApiError> {
        let category = category
            .filter(|c| !c.is_empty())
            .map(ErrorCategory::from_str)
            .transpose()
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))?;
        let page = page.unwrap_or(1);
        let page_size = page_size.unwrap_or(DEFAULT_PAGE_SIZE);
        if page == 0 {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "page starts at 1"));
        }
        if page_size == 0 || page_size > MAX_PAGE_SIZE {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("page_size must be within 1..={MAX_PAGE_SIZE}")));
        }
        let snap = self.snapshot.load();
        let selected: Vec<&DiscrepancyFlag> = self.flags.iter().filter(|f| category.map_or(true, |c| f.primary_category == c)).collect();
        let items = selected.iter().skip((page - 1).saturating_mul(page_size)).take(page_size).map(|f| self.item_view(&snap, f)).collect();
        Ok(QueuePage { items, page, page_size, total: selected.len() })
    }

    pub fn item(&self, id: &str) -> Result<QueueItem, ApiError> {
        let flag = self.flag_index.get(id).map(|&i| &self.flags[i]).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no flagged item {id:?}")))?;
        Ok(self.item_view(&self.snapshot.load(), flag))
    }

    /// Validates a submitted body, stamps it and appends it to the log.
    pub fn submit(&self, id: &str, body: &[u8]) -> Result<AnnotationRecord, ApiError> {
        if !self.flag_index.contains_key(id) {
            return Err(ApiError::new(StatusCode::NOT_FOUND, format!("no flagged item {id:?}")));
        }
        let mut record = parse_submission(id, body)?;
        let mut appender = self.appender.lock().unwrap_or_else(|p| p.into_inner());
        // validated against the latest snapshot while holding the writer lock
        let snap = self.snapshot.load_full();
        if record.kind == AnnotationKind::PolarityTag {
            let item = self.item_view(&snap, &self.flags[self.flag_index[id]]);
            let idx = record.token_index.expect("checked by validate_body");
            if !item.contronym_occurrences.iter().any(|o| o.token_index == idx) {
                return Err(ApiError::invalid(vec![FieldError::new("token_index", "index not a contronym occurrence")]));
            }
        }
        record.timestamp = now_millis().max(appender.last_timestamp + 1);
        let corpus = snap.corpus.with_annotation(record.clone()).map_err(ApiError::internal)?;
        let next = Snapshot::new(corpus).map_err(ApiError::internal)?;
        append_annotation(&appender.path, &record).map_err(ApiError::internal)?;
        appender.last_timestamp = record.timestamp;
        self.snapshot.store(Arc::new(next));
        Ok(record)
    }

    /// Metrics over the records that have both a translation and a reference,
    /// with current annotations applied; cached per snapshot.
    pub fn report(&self) -> Result<ReportView, ApiError> {
        let snap = self.snapshot.load_full();
        snap.report.get_or_init(|| self.compute_report(&snap).map_err(|e| e.to_string())).clone().map_err(ApiError::internal)
    }

    fn compute_report(&self, snap: &Snapshot) -> Result<ReportView, MetricError> {
        let (complete, missing): (Vec<_>, Vec<_>) = snap.applied.records().iter().cloned().partition(|r| r.mt_text.is_some() && r.reference_text.is_some());
        let subset = Corpus::new(complete, Vec::new())?;
        let report = if subset.is_empty() {
            EvalReport::empty(self.options.modes)
        } else {
            evaluate(&subset, &self.lexica.contronyms, self.scorer.as_ref(), &self.options)?
        };
        Ok(ReportView { report, histogram: frequency_report(&self.flags), missing_reference: missing.into_iter().map(|r| r.id).collect() })
    }
}

/// Builds a record from a JSON body; the item id comes from the URL and the
/// timestamp from the server.
fn parse_submission(id: &str, body: &[u8]) -> Result<AnnotationRecord, ApiError> {
    let value: Value = serde_json::from_slice(body).map_err(|e| ApiError::invalid(vec![FieldError::new("body", format!("not valid JSON: {e}"))]))?;
    let Value::Object(mut map) = value else {
        return Err(ApiError::invalid(vec![FieldError::new("body", "expected a JSON object")]));
    };
    let mut errors = Vec::new();
    if map.remove("timestamp").is_some() {
        errors.push(FieldError::new("timestamp", "assigned by the server"));
    }
    match map.remove("item_id") {
        Some(Value::String(s)) if s == id => {}
        Some(_) => errors.push(FieldError::new("item_id", "does not match the item in the URL")),
        None => {}
    }
    map.insert("item_id".into(), Value::String(id.to_string()));
    map.insert("timestamp".into(), Value::from(1));
    if !errors.is_empty() {
        return Err(ApiError::invalid(errors));
    }
    let record: AnnotationRecord = serde_json::from_value(Value::Object(map)).map_err(|e| ApiError::invalid(vec![FieldError::new("body", e.to_string())]))?;
    let errors = record.validate_body();
    if !errors.is_empty() {
        return Err(ApiError::invalid(errors));
    }
    Ok(record)
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    category: Option<String>,
    page: Option<usize>,
    page_size: Option<usize>,
}

type Shared = Arc<Service>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn get_queue(State(s): State<Shared>, Query(p): Query<QueueParams>) -> Result<Json<QueuePage>, ApiError> {
    s.queue(p.category.as_deref(), p.page, p.page_size).map(Json)
}

async fn get_item(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<QueueItem>, ApiError> {
    s.item(&id).map(Json)
}

async fn post_annotation(State(s): State<Shared>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<(StatusCode, Json<AnnotationRecord>), ApiError> {
    let record = blocking(move || s.submit(&id, &body)).await?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn get_report(State(s): State<Shared>) -> Result<Json<ReportView>, ApiError> {
    blocking(move || s.report()).await.map(Json)
}

pub fn router(service: Shared, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/queue", get(get_queue))
        .route("/api/items/:id", get(get_item))
        .route("/api/items/:id/annotations", axum::routing::post(post_annotation))
        .route("/api/report", get(get_report))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process is stopped.
pub async fn serve(service: Shared, static_dir: Option<PathBuf>, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service, static_dir.as_deref())).await
}
