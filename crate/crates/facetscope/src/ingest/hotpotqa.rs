//! Loader for HotpotQA-format JSON files.
//!
//! Input is the dataset-native shape: a JSON array of objects with
//! `_id`, `question`, `answer`, `type`, `level`, `supporting_facts`
//! (pairs of `[title, sentence_index]`) and `context` (pairs of
//! `[title, [sentences...]]`). Context paragraphs become documents;
//! all provided paragraphs are kept in the retrieval corpus, not just
//! the supporting ones.
//!
//! Malformed rows are skipped with a logged diagnostic and counted in
//! the ingest outcome; duplicate question ids abort the load.

use std::path::Path;

use serde::Deserialize;

use super::{
    check_unique_ids, DatasetKind, Difficulty, Document, IngestError, IngestOutcome, MetaType,
    QuestionRecord, SupportingFact,
};

#[derive(Deserialize)]
struct RawRow {
    #[serde(rename = "_id")]
    id: String,
    question: String,
    #[serde(default)]
    answer: String,
    #[serde(rename = "type")]
    question_type: String,
    level: String,
    supporting_facts: Vec<(String, usize)>,
    context: Vec<(String, Vec<String>)>,
}

fn convert_row(index: usize, value: &serde_json::Value) -> Result<QuestionRecord, String> {
    let raw: RawRow =
        serde_json::from_value(value.clone()).map_err(|e| format!("row {index}: {e}"))?;
    if raw.question.trim().is_empty() {
        return Err(format!("row {index}: empty question"));
    }
    let meta_type = match raw.question_type.as_str() {
        "bridge" => MetaType::Bridge,
        "comparison" => MetaType::Comparison,
        other => return Err(format!("row {index}: unknown question type `{other}`")),
    };
    let difficulty = match raw.level.as_str() {
        "easy" => Difficulty::Easy,
        "medium" => Difficulty::Medium,
        "hard" => Difficulty::Hard,
        other => return Err(format!("row {index}: unknown level `{other}`")),
    };
    let documents = raw
        .context
        .iter()
        .enumerate()
        .map(|(i, (title, sentences))| Document {
            doc_id: format!("{}.d{}", raw.id, i),
            title: title.clone(),
            text: sentences.join(" "),
        })
        .collect();
    Ok(QuestionRecord {
        question_id: raw.id,
        question_text: raw.question,
        gold_answer: raw.answer,
        dataset: DatasetKind::Hotpotqa,
        difficulty: Some(difficulty),
        meta_type: Some(meta_type),
        supporting_facts: Some(
            raw.supporting_facts.into_iter().map(|(t, i)| SupportingFact(t, i)).collect(),
        ),
        documents,
    })
}

pub fn load_hotpotqa(path: &Path) -> Result<IngestOutcome, IngestError> {
    let raw = std::fs::read_to_string(path)?;
    parse_hotpotqa(&raw)
}

pub fn parse_hotpotqa(raw: &str) -> Result<IngestOutcome, IngestError> {
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(raw).map_err(|e| IngestError::Malformed(e.to_string()))?;
    let mut records = Vec::with_capacity(rows.len());
    let mut skipped = 0u64;
    for (index, value) in rows.iter().enumerate() {
        match convert_row(index, value) {
            Ok(record) => records.push(record),
            Err(diagnostic) => {
                log::warn!("hotpotqa ingest skipped {diagnostic}");
                skipped += 1;
            }
        }
    }
    check_unique_ids(&records)?;
    Ok(IngestOutcome { records, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, qtype: &str, level: &str) -> serde_json::Value {
        serde_json::json!({
            "_id": id,
            "question": format!("Question {id}?"),
            "answer": "gold",
            "type": qtype,
            "level": level,
            "supporting_facts": [["Title A", 0]],
            "context": [
                ["Title A", ["Sentence one.", "Sentence two."]],
                ["Title B", ["Other paragraph."]]
            ]
        })
    }

    #[test]
    fn bridge_hard_row_maps_meta_fields() {
        let raw = serde_json::json!([row("q1", "bridge", "hard")]).to_string();
        let outcome = parse_hotpotqa(&raw).unwrap();
        assert_eq!(outcome.records.len(), 1);
        let record = &outcome.records[0];
        assert_eq!(record.meta_type, Some(MetaType::Bridge));
        assert_eq!(record.difficulty, Some(Difficulty::Hard));
        assert_eq!(record.dataset, DatasetKind::Hotpotqa);
        assert_eq!(record.documents.len(), 2);
        assert_eq!(record.documents[0].text, "Sentence one. Sentence two.");
        assert_eq!(
            record.supporting_facts.as_ref().unwrap()[0],
            SupportingFact("Title A".into(), 0)
        );
    }

    #[test]
    fn empty_answer_is_accepted() {
        let mut r = row("q1", "comparison", "easy");
        r["answer"] = serde_json::json!("");
        let outcome = parse_hotpotqa(&serde_json::json!([r]).to_string()).unwrap();
        assert_eq!(outcome.records[0].gold_answer, "");
    }

    #[test]
    fn malformed_rows_are_skipped_and_counted() {
        let rows = serde_json::json!([
            row("q1", "bridge", "hard"),
            {"_id": "broken"},
            row("q2", "comparison", "easy"),
            row("q3", "bridge", "medium"),
        ]);
        let outcome = parse_hotpotqa(&rows.to_string()).unwrap();
        assert_eq!(outcome.records.len(), 3);
        assert_eq!(outcome.skipped, 1);
    }

    #[test]
    fn unknown_type_or_level_is_skipped() {
        let rows = serde_json::json!([row("q1", "bridge", "impossible")]);
        let outcome = parse_hotpotqa(&rows.to_string()).unwrap();
        assert_eq!(outcome.records.len(), 0);
        assert_eq!(outcome.skipped, 1);
    }

    #[test]
    fn duplicate_question_id_is_an_error() {
        let rows = serde_json::json!([row("q1", "bridge", "hard"), row("q1", "bridge", "hard")]);
        let err = parse_hotpotqa(&rows.to_string()).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateQuestionId(id) if id == "q1"));
    }

    #[test]
    fn non_array_input_is_malformed() {
        assert!(matches!(parse_hotpotqa("{}"), Err(IngestError::Malformed(_))));
        assert!(matches!(parse_hotpotqa("not json"), Err(IngestError::Malformed(_))));
    }
}
