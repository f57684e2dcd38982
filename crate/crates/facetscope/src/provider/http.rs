//! HTTP provider: a thin JSON-over-HTTP client for any service exposing
//! the three capabilities.
//!
//! The wire contract is deliberately minimal so that a small sidecar
//! wrapping whatever models the user runs (hosted APIs, a local
//! SentenceTransformers + NLI server, ...) can satisfy it:
//!
//! * `POST {base_url}/generate` with
//!   `{"system_text", "user_text", "temperature", "max_tokens"}` returning
//!   `{"text": "..."}` or `{"refused": true}`;
//! * `POST {base_url}/embed` with `{"text"}` returning `{"values": [...]}`;
//! * `POST {base_url}/nli` with `{"premise", "hypothesis"}` returning
//!   `{"entail", "neutral", "contradict"}`.
//!
//! Credentials come from the environment: when `auth_env` names a variable,
//! its value is sent as a bearer token. Transport failures and 5xx statuses
//! are retried with linear backoff, then reported as unreachable.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    EmbeddingVector, GenerationRequest, GenerationResult, NliScorer, NliVerdict, ProviderError,
    TextEmbedder, TextGenerator,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpProviderConfig {
    pub base_url: String,
    /// Name of the environment variable holding the bearer token, if any.
    #[serde(default)]
    pub auth_env: Option<String>,
    /// Declared embedding dimension; responses are validated against it.
    #[serde(default)]
    pub dimension: Option<usize>,
    /// Whitespace-token premise limit advertised to the gateway.
    #[serde(default)]
    pub max_premise_tokens: Option<usize>,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_retries() -> u32 {
    3
}

fn default_timeout_secs() -> u64 {
    60
}

pub struct HttpProvider {
    id: String,
    config: HttpProviderConfig,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Result<HttpProvider, ProviderError> {
        let token = match &config.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ProviderError::InvalidRequest(format!(
                    "auth_env `{var}` is not set in the environment"
                ))
            })?),
            None => None,
        };
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
                .http_status_as_error(false)
                .build(),
        );
        let id = format!("http:{}", config.base_url.trim_end_matches('/'));
        Ok(HttpProvider { id, config, token, agent })
    }

    fn post<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
        &self,
        endpoint: &str,
        body: &Req,
    ) -> Result<Resp, ProviderError> {
        let url = format!("{}/{endpoint}", self.config.base_url.trim_end_matches('/'));
        let mut last_reason = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(200 * attempt as u64));
            }
            let mut request = self.agent.post(&url);
            if let Some(token) = &self.token {
                request = request.header("Authorization", format!("Bearer {token}"));
            }
            match request.send_json(body) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        return response.body_mut().read_json::<Resp>().map_err(|e| {
                            ProviderError::MalformedResponse(format!("{endpoint}: {e}"))
                        });
                    }
                    if (500..600).contains(&status) || status == 429 {
                        last_reason = format!("HTTP {status}");
                        continue;
                    }
                    return Err(ProviderError::MalformedResponse(format!(
                        "{endpoint}: unexpected HTTP {status}"
                    )));
                }
                Err(e) => {
                    last_reason = e.to_string();
                }
            }
        }
        Err(ProviderError::Unreachable { provider: self.id.clone(), reason: last_reason })
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    system_text: &'a str,
    user_text: &'a str,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct GenerateResponse {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    refused: bool,
}

impl TextGenerator for HttpProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        req.validate()?;
        let response: GenerateResponse = self.post(
            "generate",
            &GenerateBody {
                system_text: &req.system_text,
                user_text: &req.user_text,
                temperature: req.temperature,
                max_tokens: req.max_tokens,
            },
        )?;
        if response.refused {
            return Err(ProviderError::Refusal { provider: self.id.clone() });
        }
        match response.text {
            Some(text) => {
                Ok(GenerationResult { text, provider_id: self.id.clone(), from_cache: false })
            }
            None => Err(ProviderError::MalformedResponse(
                "generate: response had neither `text` nor `refused`".into(),
            )),
        }
    }
}

#[derive(Serialize)]
struct EmbedBody<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    values: Vec<f32>,
}

impl TextEmbedder for HttpProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.config.dimension.unwrap_or(0)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        if text.is_empty() {
            return Err(ProviderError::InvalidRequest("embed: text is empty".into()));
        }
        let response: EmbedResponse = self.post("embed", &EmbedBody { text })?;
        let vector = EmbeddingVector::new(response.values);
        if let Some(expected) = self.config.dimension {
            vector.validate(expected)?;
        }
        Ok(vector)
    }
}

#[derive(Serialize)]
struct NliBody<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct NliResponse {
    entail: f64,
    neutral: f64,
    contradict: f64,
}

impl NliScorer for HttpProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn max_premise_tokens(&self) -> Option<usize> {
        self.config.max_premise_tokens
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, ProviderError> {
        let response: NliResponse = self.post("nli", &NliBody { premise, hypothesis })?;
        let verdict = NliVerdict {
            p_entail: response.entail,
            p_neutral: response.neutral,
            p_contradict: response.contradict,
        };
        verdict.validate()?;
        Ok(verdict)
    }
}
