//! Detection, annotation and evaluation of sentiment errors in Arabic to
//! English machine translation of user reviews.

pub mod corpus;
pub mod detect;
pub mod embed;
pub mod lexicons;
pub mod metrics;
pub mod normalize;
pub mod num;
pub mod sentiment;

pub use corpus::{AnnotationKind, AnnotationRecord, Corpus, CorpusError, CorpusFormat, ReviewRecord};
pub use detect::{Classifier, DiscrepancyFlag, ErrorCategory, FrequencyReport, Thresholds};
pub use embed::{Embeddings, TrainConfig, Vocabulary};
pub use lexicons::{ContronymLexicon, Lexica, PolarityTag};
pub use metrics::{EvalOptions, EvalReport};
pub use normalize::TokenSequence;
pub use num::Scalar;
pub use sentiment::{LexiconScorer, ScalarMode, Score, SentenceScorer};

pub type SentimentScore = sentiment::Score<f64>;
pub type SentimentScore32 = sentiment::Score<f32>;
pub type EmbeddingModel = embed::Embeddings<f32>;
pub type EmbeddingModel64 = embed::Embeddings<f64>;
