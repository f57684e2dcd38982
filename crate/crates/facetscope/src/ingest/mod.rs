//! Corpus ingest: load the two dataset formats into one normalized record
//! schema and segment source documents into overlapping token chunks.

pub mod chunker;
pub mod hotpotqa;
pub mod medical;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chunker::chunk_document;
pub use hotpotqa::load_hotpotqa;
pub use medical::load_ragbench_medical;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error("duplicate question_id `{0}`")]
    DuplicateQuestionId(String),
    #[error("invalid chunking parameters: overlap {overlap} must be < chunk_size {chunk_size}")]
    InvalidChunking { chunk_size: usize, overlap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Hotpotqa,
    Medical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub fn as_str(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

/// Question meta-type. Bridge/comparison for multi-hop questions,
/// fact-retrieval/complex-reasoning for the medical set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaType {
    Bridge,
    Comparison,
    FactRetrieval,
    ComplexReasoning,
}

impl MetaType {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetaType::Bridge => "bridge",
            MetaType::Comparison => "comparison",
            MetaType::FactRetrieval => "fact_retrieval",
            MetaType::ComplexReasoning => "complex_reasoning",
        }
    }
}

/// `(title, sentence_index)` as stored by the source dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportingFact(pub String, pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub question_text: String,
    /// May be empty for unlabeled sets.
    pub gold_answer: String,
    pub dataset: DatasetKind,
    pub difficulty: Option<Difficulty>,
    pub meta_type: Option<MetaType>,
    pub supporting_facts: Option<Vec<SupportingFact>>,
    pub documents: Vec<Document>,
}

/// Half-open token interval `[start, end)` within a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub token_span: TokenSpan,
    pub text: String,
}

/// Loader output: accepted records plus the skip count destined for the
/// run manifest. Per-row diagnostics go to the log.
#[derive(Debug)]
pub struct IngestOutcome {
    pub records: Vec<QuestionRecord>,
    pub skipped: u64,
}

pub(crate) fn check_unique_ids(records: &[QuestionRecord]) -> Result<(), IngestError> {
    let mut seen = std::collections::HashSet::new();
    for record in records {
        if !seen.insert(record.question_id.as_str()) {
            return Err(IngestError::DuplicateQuestionId(record.question_id.clone()));
        }
    }
    Ok(())
}
