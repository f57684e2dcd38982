//! Scripted mock providers.
//!
//! All three capabilities can be driven from one JSON script file, which
//! makes full pipeline runs reproducible without any live model service.
//! The mocks are pure functions of the request:
//!
//! * generation — exact `user_text` lookup first, then ordered
//!   substring rules, otherwise a refusal;
//! * embedding — exact text lookup, otherwise a deterministic
//!   hash-derived unit vector of the declared dimension;
//! * NLI — exact (premise, hypothesis) lookup, `premise == hypothesis`
//!   maps to full entailment, otherwise a neutral verdict.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    EmbeddingVector, GenerationRequest, GenerationResult, NliScorer, NliVerdict, ProviderError,
    TextEmbedder, TextGenerator,
};

pub const MOCK_PROVIDER_ID: &str = "mock";

fn default_embed_dim() -> usize {
    8
}

/// Substring rule for generation replies: fires when every `contains`
/// fragment occurs in the request's `user_text`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContainsRule {
    pub contains: Vec<String>,
    pub reply: String,
}

/// One scripted NLI verdict for an exact (premise, hypothesis) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NliRule {
    pub premise: String,
    pub hypothesis: String,
    pub entail: f64,
    pub neutral: f64,
    pub contradict: f64,
}

/// On-disk script driving all three mock capabilities.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MockScript {
    /// Exact `user_text` → reply.
    #[serde(default)]
    pub generate: BTreeMap<String, String>,
    /// Ordered fallback rules, tried after the exact map.
    #[serde(default)]
    pub generate_rules: Vec<ContainsRule>,
    /// Exact text → embedding values.
    #[serde(default)]
    pub embed: BTreeMap<String, Vec<f32>>,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default)]
    pub nli: Vec<NliRule>,
    /// Verdict for unscripted, non-identical pairs. Defaults to neutral.
    #[serde(default)]
    pub nli_default: Option<[f64; 3]>,
    /// After this many generation calls the mock reports itself unreachable.
    /// Used to exercise mid-stage failure handling.
    #[serde(default)]
    pub fail_after_generate_calls: Option<u64>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<MockScript, ProviderError> {
        let raw = std::fs::read_to_string(path)?;
        Self::parse(&raw)
    }

    pub fn parse(raw: &str) -> Result<MockScript, ProviderError> {
        let script: MockScript = serde_json::from_str(raw)
            .map_err(|e| ProviderError::MalformedResponse(format!("mock script: {e}")))?;
        if script.embed_dim == 0 {
            return Err(ProviderError::MalformedResponse(
                "mock script: embed_dim must be >= 1".into(),
            ));
        }
        for (text, values) in &script.embed {
            if values.len() != script.embed_dim {
                return Err(ProviderError::MalformedResponse(format!(
                    "mock script: embedding for {text:?} has {} values, embed_dim is {}",
                    values.len(),
                    script.embed_dim
                )));
            }
        }
        for rule in &script.nli {
            NliVerdict {
                p_entail: rule.entail,
                p_neutral: rule.neutral,
                p_contradict: rule.contradict,
            }
            .validate()?;
        }
        Ok(script)
    }
}

pub struct MockGenerator {
    script: MockScript,
    calls: AtomicU64,
}

impl MockGenerator {
    pub fn new(script: MockScript) -> Self {
        MockGenerator { script, calls: AtomicU64::new(0) }
    }
}

impl TextGenerator for MockGenerator {
    fn id(&self) -> &str {
        MOCK_PROVIDER_ID
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        req.validate()?;
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(limit) = self.script.fail_after_generate_calls {
            if n >= limit {
                return Err(ProviderError::Unreachable {
                    provider: MOCK_PROVIDER_ID.into(),
                    reason: format!("scripted failure after {limit} calls"),
                });
            }
        }
        if let Some(reply) = self.script.generate.get(&req.user_text) {
            return Ok(GenerationResult {
                text: reply.clone(),
                provider_id: MOCK_PROVIDER_ID.into(),
                from_cache: false,
            });
        }
        for rule in &self.script.generate_rules {
            if rule.contains.iter().all(|frag| req.user_text.contains(frag)) {
                return Ok(GenerationResult {
                    text: rule.reply.clone(),
                    provider_id: MOCK_PROVIDER_ID.into(),
                    from_cache: false,
                });
            }
        }
        Err(ProviderError::Refusal { provider: MOCK_PROVIDER_ID.into() })
    }
}

pub struct MockEmbedder {
    script: MockScript,
}

impl MockEmbedder {
    pub fn new(script: MockScript) -> Self {
        MockEmbedder { script }
    }

    /// Deterministic unit vector derived from the text digest.
    fn hash_vector(&self, text: &str) -> Vec<f32> {
        let digest = Sha256::digest(text.as_bytes());
        let mut state = u64::from_le_bytes(digest[..8].try_into().unwrap());
        let mut values: Vec<f32> = (0..self.script.embed_dim)
            .map(|_| {
                state = splitmix64(state);
                // Map the top 24 bits to [-1, 1].
                ((state >> 40) as f32 / (1u64 << 23) as f32) - 1.0
            })
            .collect();
        let norm: f32 = values.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        } else {
            values[0] = 1.0;
        }
        values
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl TextEmbedder for MockEmbedder {
    fn id(&self) -> &str {
        MOCK_PROVIDER_ID
    }

    fn dimension(&self) -> usize {
        self.script.embed_dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        if text.is_empty() {
            return Err(ProviderError::InvalidRequest("embed: text is empty".into()));
        }
        let values = match self.script.embed.get(text) {
            Some(v) => v.clone(),
            None => self.hash_vector(text),
        };
        let vector = EmbeddingVector::new(values);
        vector.validate(self.script.embed_dim)?;
        Ok(vector)
    }
}

pub struct MockNli {
    script: MockScript,
}

impl MockNli {
    pub fn new(script: MockScript) -> Self {
        MockNli { script }
    }
}

impl NliScorer for MockNli {
    fn id(&self) -> &str {
        MOCK_PROVIDER_ID
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, ProviderError> {
        if premise.is_empty() || hypothesis.is_empty() {
            return Err(ProviderError::InvalidRequest(
                "nli: premise and hypothesis must be non-empty".into(),
            ));
        }
        for rule in &self.script.nli {
            if rule.premise == premise && rule.hypothesis == hypothesis {
                return Ok(NliVerdict {
                    p_entail: rule.entail,
                    p_neutral: rule.neutral,
                    p_contradict: rule.contradict,
                });
            }
        }
        if premise == hypothesis {
            return Ok(NliVerdict { p_entail: 1.0, p_neutral: 0.0, p_contradict: 0.0 });
        }
        let [e, n, c] = self.script.nli_default.unwrap_or([0.0, 1.0, 0.0]);
        let verdict = NliVerdict { p_entail: e, p_neutral: n, p_contradict: c };
        verdict.validate()?;
        Ok(verdict)
    }
}
