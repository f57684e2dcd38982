//! Prompt templates, compiled in from the `prompts/` text assets.
//!
//! Templates are versioned files with `{{slot}}` placeholders; rendering is
//! plain substitution so a rendered prompt differs from its asset only in
//! the filled slots. Golden tests pin the rendered output.

use crate::ingest::{Chunk, SupportingFact};

pub const DECOMPOSE_MEDICAL: &str = include_str!("../prompts/decompose_medical.txt");
pub const DECOMPOSE_BRIDGE: &str = include_str!("../prompts/decompose_bridge.txt");
pub const DECOMPOSE_COMPARISON: &str = include_str!("../prompts/decompose_comparison.txt");
pub const ANSWER_SYSTEM: &str = include_str!("../prompts/answer_system.txt");
pub const ANSWER_STRICT: &str = include_str!("../prompts/answer_strict.txt");
pub const ANSWER_SOFT: &str = include_str!("../prompts/answer_soft.txt");
pub const ANSWER_LLM_ONLY: &str = include_str!("../prompts/answer_llm_only.txt");
pub const AGGREGATE: &str = include_str!("../prompts/aggregate.txt");

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.trim_end_matches('\n').to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    out
}

/// Shared system text for all three inference modes.
pub fn answer_system_text() -> String {
    ANSWER_SYSTEM.trim_end_matches('\n').to_string()
}

pub fn render_decompose_medical(question: &str) -> String {
    fill(DECOMPOSE_MEDICAL, &[("question", question)])
}

fn facts_json(facts: &[SupportingFact]) -> String {
    let pairs: Vec<serde_json::Value> = facts
        .iter()
        .map(|SupportingFact(title, index)| serde_json::json!([title, index]))
        .collect();
    serde_json::to_string(&serde_json::Value::Array(pairs)).expect("facts serialize")
}

pub fn render_decompose_bridge(question: &str, facts: &[SupportingFact]) -> String {
    fill(DECOMPOSE_BRIDGE, &[("question", question), ("facts", &facts_json(facts))])
}

pub fn render_decompose_comparison(question: &str, facts: &[SupportingFact]) -> String {
    fill(DECOMPOSE_COMPARISON, &[("question", question), ("facts", &facts_json(facts))])
}

/// Evidence block: one `- ` bullet per chunk, in retrieval rank order.
fn evidence_block(chunks: &[&Chunk]) -> String {
    chunks.iter().map(|c| format!("- {}", c.text)).collect::<Vec<_>>().join("\n")
}

pub fn render_answer_strict(facet_text: &str, chunks: &[&Chunk]) -> String {
    fill(ANSWER_STRICT, &[("evidence", &evidence_block(chunks)), ("facet", facet_text)])
}

pub fn render_answer_soft(facet_text: &str, chunks: &[&Chunk]) -> String {
    fill(ANSWER_SOFT, &[("evidence", &evidence_block(chunks)), ("facet", facet_text)])
}

pub fn render_answer_llm_only(facet_text: &str) -> String {
    fill(ANSWER_LLM_ONLY, &[("facet", facet_text)])
}

/// Sub-answer block: `- Facet N: <question> → Answer: <answer>` per facet.
pub fn render_aggregate(question: &str, facet_answers: &[(String, String)]) -> String {
    let block = facet_answers
        .iter()
        .enumerate()
        .map(|(i, (facet_question, answer))| {
            format!("- Facet {}: {} → Answer: {}", i + 1, facet_question, answer)
        })
        .collect::<Vec<_>>()
        .join("\n");
    fill(AGGREGATE, &[("question", question), ("sub_answers", &block)])
}
