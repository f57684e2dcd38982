//! Provider gateway: a uniform interface to three external model
//! capabilities — text generation, text embedding, and NLI scoring.
//!
//! Backends implement [`TextGenerator`], [`TextEmbedder`], and [`NliScorer`].
//! The [`Gateway`](cache::Gateway) wraps a backend triple with a persistent,
//! content-addressed call cache so reruns replay byte-identical responses
//! without touching a live service.

pub mod cache;
pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CallCache, Gateway};

/// Errors surfaced by provider backends and the gateway.
#[derive(Debug, Error)]
pub enum ProviderError {
    /// Transport-level failure. Retryable; never cached.
    #[error("provider `{provider}` unreachable: {reason}")]
    Unreachable { provider: String, reason: String },
    /// The provider declined to answer. Downstream treats this as an empty
    /// answer with a refusal flag, not as a pipeline failure.
    #[error("provider `{provider}` refused the request")]
    Refusal { provider: String },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("cache io: {0}")]
    CacheIo(#[from] std::io::Error),
}

impl ProviderError {
    pub fn is_refusal(&self) -> bool {
        matches!(self, ProviderError::Refusal { .. })
    }
}

/// One text-generation request. `system_text` may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.user_text.is_empty() {
            return Err(ProviderError::InvalidRequest("user_text is empty".into()));
        }
        if self.max_tokens < 1 {
            return Err(ProviderError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 1]",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub provider_id: String,
    pub from_cache: bool,
}

/// A fixed-length embedding. All values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
    pub dimension: usize,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Self {
        let dimension = values.len();
        EmbeddingVector { values, dimension }
    }

    pub fn validate(&self, expected_dim: usize) -> Result<(), ProviderError> {
        if self.values.len() != self.dimension || self.dimension != expected_dim {
            return Err(ProviderError::DimensionMismatch {
                expected: expected_dim,
                got: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(ProviderError::MalformedResponse(
                "embedding contains non-finite values".into(),
            ));
        }
        Ok(())
    }
}

/// NLI class probabilities. Components lie in [0, 1] and sum to 1 ± 1e-6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliVerdict {
    pub p_entail: f64,
    pub p_neutral: f64,
    pub p_contradict: f64,
}

impl NliVerdict {
    pub fn validate(&self) -> Result<(), ProviderError> {
        let components = [self.p_entail, self.p_neutral, self.p_contradict];
        if components.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(ProviderError::MalformedResponse(format!(
                "NLI probability outside [0, 1]: {components:?}"
            )));
        }
        let sum: f64 = components.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ProviderError::MalformedResponse(format!(
                "NLI probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Which of the three capabilities a request targets. Cache records are
/// partitioned by capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Generate,
    Embed,
    Nli,
}

impl Capability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Capability::Generate => "generate",
            Capability::Embed => "embed",
            Capability::Nli => "nli",
        }
    }
}

/// Content-addressed identity of one provider request.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub capability: Capability,
    pub content_hash: String,
}

pub trait TextGenerator: Send + Sync {
    fn id(&self) -> &str;
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, ProviderError>;
}

pub trait TextEmbedder: Send + Sync {
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError>;
}

pub trait NliScorer: Send + Sync {
    fn id(&self) -> &str;
    /// Whitespace-token limit for the premise, if the backend has one.
    /// The gateway truncates the premise (never the hypothesis) to fit.
    fn max_premise_tokens(&self) -> Option<usize> {
        None
    }
    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, ProviderError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_request_rejects_empty_user_text() {
        let req = GenerationRequest {
            system_text: String::new(),
            user_text: String::new(),
            temperature: 0.3,
            max_tokens: 16,
        };
        assert!(matches!(req.validate(), Err(ProviderError::InvalidRequest(_))));
    }

    #[test]
    fn generation_request_rejects_out_of_range_temperature() {
        let req = GenerationRequest {
            system_text: String::new(),
            user_text: "q".into(),
            temperature: 1.5,
            max_tokens: 16,
        };
        assert!(req.validate().is_err());
    }

    #[test]
    fn verdict_simplex_enforced() {
        let ok = NliVerdict { p_entail: 0.8, p_neutral: 0.1, p_contradict: 0.1 };
        assert!(ok.validate().is_ok());

        let bad_sum = NliVerdict { p_entail: 0.8, p_neutral: 0.1, p_contradict: 0.2 };
        assert!(bad_sum.validate().is_err());

        let bad_range = NliVerdict { p_entail: 1.2, p_neutral: -0.1, p_contradict: -0.1 };
        assert!(bad_range.validate().is_err());
    }

    #[test]
    fn embedding_validation_checks_dimension_and_finiteness() {
        let v = EmbeddingVector::new(vec![0.0, 1.0, 0.5]);
        assert!(v.validate(3).is_ok());
        assert!(v.validate(4).is_err());

        let nan = EmbeddingVector::new(vec![f32::NAN]);
        assert!(nan.validate(1).is_err());
    }
}
