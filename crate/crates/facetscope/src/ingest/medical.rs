//! Loader for the medical QA dataset.
//!
//! Input is a JSON array of objects with `id`, `question`, `response`
//! (the gold answer), `question_type` (`fact_retrieval` or
//! `complex_reasoning`, whitespace/case tolerant) and `documents`
//! (source guideline passages as plain strings). These questions carry
//! no supporting-fact annotations and no difficulty level.

use std::path::Path;

use serde::Deserialize;

use super::{
    check_unique_ids, DatasetKind, Document, IngestError, IngestOutcome, MetaType, QuestionRecord,
};

#[derive(Deserialize)]
struct RawRow {
    id: String,
    question: String,
    #[serde(default)]
    response: String,
    question_type: String,
    documents: Vec<String>,
}

fn parse_meta_type(raw: &str) -> Option<MetaType> {
    let normalized = raw.trim().to_lowercase().replace([' ', '-'], "_");
    match normalized.as_str() {
        "fact_retrieval" => Some(MetaType::FactRetrieval),
        "complex_reasoning" => Some(MetaType::ComplexReasoning),
        _ => None,
    }
}

fn convert_row(index: usize, value: &serde_json::Value) -> Result<QuestionRecord, String> {
    let raw: RawRow =
        serde_json::from_value(value.clone()).map_err(|e| format!("row {index}: {e}"))?;
    if raw.question.trim().is_empty() {
        return Err(format!("row {index}: empty question"));
    }
    let meta_type = parse_meta_type(&raw.question_type)
        .ok_or_else(|| format!("row {index}: unknown question_type `{}`", raw.question_type))?;
    let documents = raw
        .documents
        .iter()
        .enumerate()
        .map(|(i, text)| Document {
            doc_id: format!("{}.d{}", raw.id, i),
            title: format!("{} source {}", raw.id, i),
            text: text.clone(),
        })
        .collect();
    Ok(QuestionRecord {
        question_id: raw.id,
        question_text: raw.question,
        gold_answer: raw.response,
        dataset: DatasetKind::Medical,
        difficulty: None,
        meta_type: Some(meta_type),
        supporting_facts: None,
        documents,
    })
}

pub fn load_ragbench_medical(path: &Path) -> Result<IngestOutcome, IngestError> {
    let raw = std::fs::read_to_string(path)?;
    parse_ragbench_medical(&raw)
}

pub fn parse_ragbench_medical(raw: &str) -> Result<IngestOutcome, IngestError> {
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(raw).map_err(|e| IngestError::Malformed(e.to_string()))?;
    let mut records = Vec::with_capacity(rows.len());
    let mut skipped = 0u64;
    for (index, value) in rows.iter().enumerate() {
        match convert_row(index, value) {
            Ok(record) => records.push(record),
            Err(diagnostic) => {
                log::warn!("medical ingest skipped {diagnostic}");
                skipped += 1;
            }
        }
    }
    check_unique_ids(&records)?;
    Ok(IngestOutcome { records, skipped })
}
