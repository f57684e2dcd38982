//! Facet decomposition: break each question into atomic sub-questions and
//! label every facet with a semantic type.
//!
//! Multi-hop questions are converted via few-shot prompts keyed on the
//! question meta-type (bridge vs comparison) using their supporting facts;
//! medical questions are decomposed zero-shot. Facets are generated once
//! per run and frozen as a stage artifact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DatasetKind, MetaType, QuestionRecord};
use crate::provider::{Gateway, GenerationRequest, ProviderError};
use crate::templates;

#[derive(Debug, Error)]
pub enum FacetError {
    #[error("provider: {0}")]
    Provider(ProviderError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticType {
    Temporal,
    Comparative,
    Procedural,
    Numerical,
    Boolean,
    Entity,
    Causal,
    Other,
}

impl SemanticType {
    pub fn as_str(&self) -> &'static str {
        match self {
            SemanticType::Temporal => "temporal",
            SemanticType::Comparative => "comparative",
            SemanticType::Procedural => "procedural",
            SemanticType::Numerical => "numerical",
            SemanticType::Boolean => "boolean",
            SemanticType::Entity => "entity",
            SemanticType::Causal => "causal",
            SemanticType::Other => "other",
        }
    }

    fn parse(raw: &str) -> Option<SemanticType> {
        match raw.trim().to_lowercase().as_str() {
            "temporal" => Some(SemanticType::Temporal),
            "comparative" => Some(SemanticType::Comparative),
            "procedural" => Some(SemanticType::Procedural),
            "numerical" => Some(SemanticType::Numerical),
            "boolean" => Some(SemanticType::Boolean),
            "entity" => Some(SemanticType::Entity),
            "causal" => Some(SemanticType::Causal),
            "other" => Some(SemanticType::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetOrigin {
    SupportingFactConversion,
    LlmDecomposition,
}

/// An atomic sub-question of one parent question, in interrogative form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub facet_id: String,
    pub question_id: String,
    pub text: String,
    pub semantic_type: SemanticType,
    pub origin: FacetOrigin,
}

/// Ordered, non-empty facet list for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetSet {
    pub question_id: String,
    pub facets: Vec<Facet>,
}

#[derive(Debug)]
pub struct DecomposeOutcome {
    pub set: FacetSet,
    /// True when the reply was unparseable (or refused) twice and the whole
    /// question was kept as a single facet.
    pub used_fallback: bool,
}

/// Ensure interrogative form: trim, drop trailing sentence punctuation,
/// end with a question mark.
pub fn normalize_facet_text(raw: &str) -> String {
    let trimmed = raw.trim().trim_end_matches(['.', '!', ';', ':', ',', '?']).trim_end();
    format!("{trimmed}?")
}

fn strip_bullet(line: &str) -> Option<&str> {
    let t = line.trim_start();
    if let Some(rest) = t.strip_prefix("- ").or_else(|| t.strip_prefix("* ")) {
        return Some(rest.trim_start());
    }
    let digits = t.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let after = &t[digits..];
        if let Some(rest) = after.strip_prefix('.').or_else(|| after.strip_prefix(')')) {
            return Some(rest.trim_start());
        }
    }
    None
}

/// Parse a numbered-list reply into facet texts. Accepts `1.`, `1)` and
/// `- `/`* ` bullets; non-bullet lines are ignored. Empty result means the
/// reply was unparseable.
pub fn parse_facet_list(reply: &str) -> Vec<String> {
    reply
        .lines()
        .filter_map(strip_bullet)
        .filter(|t| !t.trim().is_empty())
        .map(normalize_facet_text)
        .collect()
}

/// Rule-first semantic typing over interrogative cue words. This is a pure
/// function; the provider-assisted path for `other` lives in
/// [`classify_with_provider`].
pub fn classify_semantic_type(text: &str) -> SemanticType {
    let t = text.trim().to_lowercase();
    let words: Vec<&str> = t
        .split(|c: char| c.is_whitespace() || ",.?!;:".contains(c))
        .filter(|w| !w.is_empty())
        .collect();
    let first = words.first().copied().unwrap_or("");

    if first == "when" || t.contains("what year") || t.contains("what date") || t.contains("how long")
    {
        return SemanticType::Temporal;
    }
    if t.contains("how many") || t.contains("how much") {
        return SemanticType::Numerical;
    }
    if first == "how" || t.contains("what steps") || t.contains("what procedure") || t.contains("what process")
    {
        return SemanticType::Procedural;
    }
    const COMPARATIVE_CUES: &[&str] = &[
        "more", "less", "fewer", "older", "younger", "earlier", "later", "first", "last",
        "longer", "shorter", "higher", "lower", "larger", "smaller", "bigger", "better", "worse",
    ];
    if words.contains(&"or") && words.iter().any(|w| COMPARATIVE_CUES.contains(w)) {
        return SemanticType::Comparative;
    }
    const BOOLEAN_AUX: &[&str] = &[
        "did", "do", "does", "is", "are", "was", "were", "has", "have", "had", "can", "could",
        "will", "would", "should", "must",
    ];
    if BOOLEAN_AUX.contains(&first) {
        return SemanticType::Boolean;
    }
    if first == "why" || t.contains("what causes") || t.contains("what caused") || t.contains("reason for")
    {
        return SemanticType::Causal;
    }
    if ["who", "whom", "whose", "where", "which", "what"].contains(&first) {
        return SemanticType::Entity;
    }
    SemanticType::Other
}

/// Ask the generation provider to label a facet the rules left as `other`.
/// Unparseable or refused replies keep the `other` label.
pub fn classify_with_provider(
    gateway: &Gateway,
    facet_text: &str,
    temperature: f64,
    max_tokens: u32,
) -> SemanticType {
    let template = include_str!("../prompts/classify_semantic_type.txt");
    let user_text =
        template.trim_end_matches('\n').replace("{{facet}}", facet_text);
    let req = GenerationRequest {
        system_text: String::new(),
        user_text,
        temperature,
        max_tokens,
    };
    match gateway.generate(&req) {
        Ok(result) => result
            .text
            .split_whitespace()
            .next()
            .and_then(SemanticType::parse)
            .unwrap_or(SemanticType::Other),
        Err(_) => SemanticType::Other,
    }
}

fn decompose_with_prompt(
    gateway: &Gateway,
    q: &QuestionRecord,
    user_text: String,
    origin: FacetOrigin,
    temperature: f64,
    max_tokens: u32,
) -> Result<DecomposeOutcome, FacetError> {
    let req = GenerationRequest {
        system_text: String::new(),
        user_text,
        temperature,
        max_tokens,
    };
    // Unparseable replies are retried once with the identical prompt before
    // falling back to the whole question as a single facet.
    let mut texts = Vec::new();
    for _ in 0..2 {
        match gateway.generate(&req) {
            Ok(result) => {
                texts = parse_facet_list(&result.text);
                if !texts.is_empty() {
                    break;
                }
            }
            Err(err) if err.is_refusal() => {}
            Err(err) => return Err(FacetError::Provider(err)),
        }
    }
    let used_fallback = texts.is_empty();
    if used_fallback {
        texts = vec![normalize_facet_text(&q.question_text)];
    }
    let facets = texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| Facet {
            facet_id: format!("{}.f{}", q.question_id, i),
            question_id: q.question_id.clone(),
            semantic_type: classify_semantic_type(&text),
            origin,
            text,
        })
        .collect();
    Ok(DecomposeOutcome {
        set: FacetSet { question_id: q.question_id.clone(), facets },
        used_fallback,
    })
}

/// Zero-shot decomposition for medical questions.
pub fn decompose_medical(
    gateway: &Gateway,
    q: &QuestionRecord,
    temperature: f64,
    max_tokens: u32,
) -> Result<DecomposeOutcome, FacetError> {
    if q.dataset != DatasetKind::Medical {
        return Err(FacetError::Precondition(format!(
            "{}: decompose_medical called on a non-medical record",
            q.question_id
        )));
    }
    let prompt = templates::render_decompose_medical(&q.question_text);
    decompose_with_prompt(gateway, q, prompt, FacetOrigin::LlmDecomposition, temperature, max_tokens)
}

/// Supporting-fact conversion for multi-hop questions; the few-shot prompt
/// is selected by the question meta-type.
pub fn decompose_hotpot(
    gateway: &Gateway,
    q: &QuestionRecord,
    temperature: f64,
    max_tokens: u32,
) -> Result<DecomposeOutcome, FacetError> {
    if q.dataset != DatasetKind::Hotpotqa {
        return Err(FacetError::Precondition(format!(
            "{}: decompose_hotpot called on a non-hotpotqa record",
            q.question_id
        )));
    }
    let facts = q.supporting_facts.as_deref().ok_or_else(|| {
        FacetError::Precondition(format!("{}: missing supporting_facts", q.question_id))
    })?;
    let prompt = match q.meta_type {
        Some(MetaType::Bridge) => templates::render_decompose_bridge(&q.question_text, facts),
        Some(MetaType::Comparison) => {
            templates::render_decompose_comparison(&q.question_text, facts)
        }
        other => {
            return Err(FacetError::Precondition(format!(
                "{}: meta_type {other:?} is not decomposable",
                q.question_id
            )))
        }
    };
    decompose_with_prompt(
        gateway,
        q,
        prompt,
        FacetOrigin::SupportingFactConversion,
        temperature,
        max_tokens,
    )
}
