//! Persistent call cache and the provider gateway.
//!
//! Cache records are content-addressed over the full request (provider id,
//! all request fields) and stored as one append-only JSONL file per
//! capability. Replayed responses are byte-identical to what was first
//! stored, which is what makes whole-pipeline reruns deterministic and
//! free of provider calls.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    Capability, CacheKey, EmbeddingVector, GenerationRequest, GenerationResult, NliScorer,
    NliVerdict, ProviderError, TextEmbedder, TextGenerator,
};

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    value: serde_json::Value,
}

struct Shard {
    map: RwLock<HashMap<String, String>>,
    writer: Mutex<BufWriter<File>>,
}

impl Shard {
    fn open(path: &Path) -> std::io::Result<Shard> {
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: CacheRecord = serde_json::from_str(&line).map_err(|e| {
                    std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("corrupt cache record in {}: {e}", path.display()),
                    )
                })?;
                map.insert(record.key, record.value.to_string());
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Shard { map: RwLock::new(map), writer: Mutex::new(BufWriter::new(file)) })
    }

    fn get(&self, key: &str) -> Option<String> {
        self.map.read().unwrap().get(key).cloned()
    }

    fn put(&self, key: &str, value: &str) -> std::io::Result<()> {
        {
            let map = self.map.read().unwrap();
            if map.contains_key(key) {
                return Ok(());
            }
        }
        let record = CacheRecord {
            key: key.to_string(),
            value: serde_json::from_str(value).expect("cache value must be valid JSON"),
        };
        let line = serde_json::to_string(&record).expect("cache record serializes");
        {
            let mut writer = self.writer.lock().unwrap();
            writer.write_all(line.as_bytes())?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        self.map.write().unwrap().insert(key.to_string(), value.to_string());
        Ok(())
    }
}

/// Disk-backed response cache, one append-only record file per capability.
pub struct CallCache {
    dir: PathBuf,
    generate: Shard,
    embed: Shard,
    nli: Shard,
}

impl CallCache {
    pub fn open(dir: &Path) -> std::io::Result<CallCache> {
        std::fs::create_dir_all(dir)?;
        Ok(CallCache {
            dir: dir.to_path_buf(),
            generate: Shard::open(&dir.join("generate.jsonl"))?,
            embed: Shard::open(&dir.join("embed.jsonl"))?,
            nli: Shard::open(&dir.join("nli.jsonl"))?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn shard(&self, capability: Capability) -> &Shard {
        match capability {
            Capability::Generate => &self.generate,
            Capability::Embed => &self.embed,
            Capability::Nli => &self.nli,
        }
    }

    pub fn get(&self, key: &CacheKey) -> Option<String> {
        self.shard(key.capability).get(&key.content_hash)
    }

    pub fn put(&self, key: &CacheKey, value_json: &str) -> std::io::Result<()> {
        self.shard(key.capability).put(&key.content_hash, value_json)
    }
}

fn content_hash<T: Serialize>(material: &T) -> String {
    let canonical = serde_json::to_string(material).expect("key material serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Serialize)]
struct GenerateKeyMaterial<'a> {
    provider: &'a str,
    system_text: &'a str,
    user_text: &'a str,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct EmbedKeyMaterial<'a> {
    provider: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct NliKeyMaterial<'a> {
    provider: &'a str,
    premise: &'a str,
    hypothesis: &'a str,
}

/// Cached generation outcome. Refusals are data and are cached like
/// ordinary responses so reruns replay them without a provider call.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GenerateOutcome {
    Text { text: String },
    Refusal { refused: bool },
}

/// Underlying provider invocations (cache misses) and cache hits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GatewayStats {
    pub generate_calls: u64,
    pub embed_calls: u64,
    pub nli_calls: u64,
    pub cache_hits: u64,
}

impl GatewayStats {
    pub fn provider_calls(&self) -> u64 {
        self.generate_calls + self.embed_calls + self.nli_calls
    }
}

/// Front door for all provider access: validates requests, applies the NLI
/// premise-truncation policy, consults the cache, and counts calls.
///
/// Safe to share across worker threads.
pub struct Gateway {
    generator: Arc<dyn TextGenerator>,
    embedder: Arc<dyn TextEmbedder>,
    nli: Arc<dyn NliScorer>,
    cache: Option<CallCache>,
    generate_calls: AtomicU64,
    embed_calls: AtomicU64,
    nli_calls: AtomicU64,
    cache_hits: AtomicU64,
}

impl Gateway {
    pub fn new(
        generator: Arc<dyn TextGenerator>,
        embedder: Arc<dyn TextEmbedder>,
        nli: Arc<dyn NliScorer>,
        cache: Option<CallCache>,
    ) -> Gateway {
        Gateway {
            generator,
            embedder,
            nli,
            cache,
            generate_calls: AtomicU64::new(0),
            embed_calls: AtomicU64::new(0),
            nli_calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        }
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            generate_calls: self.generate_calls.load(Ordering::SeqCst),
            embed_calls: self.embed_calls.load(Ordering::SeqCst),
            nli_calls: self.nli_calls.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
        }
    }

    pub fn embed_dimension(&self) -> usize {
        self.embedder.dimension()
    }

    pub fn generator_id(&self) -> &str {
        self.generator.id()
    }

    pub fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        req.validate()?;
        let key = CacheKey {
            capability: Capability::Generate,
            content_hash: content_hash(&GenerateKeyMaterial {
                provider: self.generator.id(),
                system_text: &req.system_text,
                user_text: &req.user_text,
                temperature: req.temperature,
                max_tokens: req.max_tokens,
            }),
        };
        if let Some(cache) = &self.cache {
            if let Some(stored) = cache.get(&key) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                let outcome: GenerateOutcome = serde_json::from_str(&stored)
                    .map_err(|e| ProviderError::MalformedResponse(format!("cache replay: {e}")))?;
                return match outcome {
                    GenerateOutcome::Text { text } => Ok(GenerationResult {
                        text,
                        provider_id: self.generator.id().to_string(),
                        from_cache: true,
                    }),
                    GenerateOutcome::Refusal { .. } => {
                        Err(ProviderError::Refusal { provider: self.generator.id().to_string() })
                    }
                };
            }
        }
        self.generate_calls.fetch_add(1, Ordering::SeqCst);
        match self.generator.generate(req) {
            Ok(result) => {
                if let Some(cache) = &self.cache {
                    let value =
                        serde_json::to_string(&GenerateOutcome::Text { text: result.text.clone() })
                            .expect("outcome serializes");
                    cache.put(&key, &value)?;
                }
                Ok(result)
            }
            Err(err) if err.is_refusal() => {
                if let Some(cache) = &self.cache {
                    let value = serde_json::to_string(&GenerateOutcome::Refusal { refused: true })
                        .expect("outcome serializes");
                    cache.put(&key, &value)?;
                }
                Err(err)
            }
            // Transport errors are retryable and never cached.
            Err(err) => Err(err),
        }
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        if text.is_empty() {
            return Err(ProviderError::InvalidRequest("embed: text is empty".into()));
        }
        let key = CacheKey {
            capability: Capability::Embed,
            content_hash: content_hash(&EmbedKeyMaterial { provider: self.embedder.id(), text }),
        };
        if let Some(cache) = &self.cache {
            if let Some(stored) = cache.get(&key) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                let values: Vec<f32> = serde_json::from_str(&stored)
                    .map_err(|e| ProviderError::MalformedResponse(format!("cache replay: {e}")))?;
                let vector = EmbeddingVector::new(values);
                vector.validate(self.embedder.dimension())?;
                return Ok(vector);
            }
        }
        self.embed_calls.fetch_add(1, Ordering::SeqCst);
        let vector = self.embedder.embed(text)?;
        vector.validate(self.embedder.dimension())?;
        if let Some(cache) = &self.cache {
            let value = serde_json::to_string(&vector.values).expect("values serialize");
            cache.put(&key, &value)?;
        }
        Ok(vector)
    }

    /// NLI with the documented truncation policy: the premise (chunk text)
    /// is cut to the backend's whitespace-token limit, the hypothesis (the
    /// claim under test) never is. Truncation happens before key derivation
    /// so the cache sees the request that was actually sent.
    pub fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, ProviderError> {
        if premise.is_empty() || hypothesis.is_empty() {
            return Err(ProviderError::InvalidRequest(
                "nli: premise and hypothesis must be non-empty".into(),
            ));
        }
        let truncated;
        let premise = match self.nli.max_premise_tokens() {
            Some(limit) => {
                truncated = truncate_tokens(premise, limit);
                truncated.as_str()
            }
            None => premise,
        };
        let key = CacheKey {
            capability: Capability::Nli,
            content_hash: content_hash(&NliKeyMaterial {
                provider: self.nli.id(),
                premise,
                hypothesis,
            }),
        };
        if let Some(cache) = &self.cache {
            if let Some(stored) = cache.get(&key) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                let verdict: NliVerdict = serde_json::from_str(&stored)
                    .map_err(|e| ProviderError::MalformedResponse(format!("cache replay: {e}")))?;
                verdict.validate()?;
                return Ok(verdict);
            }
        }
        self.nli_calls.fetch_add(1, Ordering::SeqCst);
        let verdict = self.nli.nli(premise, hypothesis)?;
        verdict.validate()?;
        if let Some(cache) = &self.cache {
            let value = serde_json::to_string(&verdict).expect("verdict serializes");
            cache.put(&key, &value)?;
        }
        Ok(verdict)
    }
}

/// Keep the first `limit` whitespace tokens of `text`.
pub fn truncate_tokens(text: &str, limit: usize) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() <= limit {
        tokens.join(" ")
    } else {
        tokens[..limit].join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::super::mock::{MockEmbedder, MockGenerator, MockNli, MockScript, NliRule};
    use super::*;
    use tempfile::TempDir;

    fn scripted_gateway(dir: Option<&Path>) -> Gateway {
        let mut script = MockScript::default();
        script.generate.insert("Q1".into(), "A1".into());
        script.nli.push(NliRule {
            premise: "p".into(),
            hypothesis: "h".into(),
            entail: 0.8,
            neutral: 0.1,
            contradict: 0.1,
        });
        let cache = dir.map(|d| CallCache::open(d).unwrap());
        Gateway::new(
            Arc::new(MockGenerator::new(script.clone())),
            Arc::new(MockEmbedder::new(script.clone())),
            Arc::new(MockNli::new(script)),
            cache,
        )
    }

    fn request(user: &str) -> GenerationRequest {
        GenerationRequest {
            system_text: "sys".into(),
            user_text: user.into(),
            temperature: 0.3,
            max_tokens: 160,
        }
    }

    #[test]
    fn second_identical_call_is_served_from_cache() {
        let dir = TempDir::new().unwrap();
        let gateway = scripted_gateway(Some(dir.path()));

        let first = gateway.generate(&request("Q1")).unwrap();
        assert!(!first.from_cache);
        let second = gateway.generate(&request("Q1")).unwrap();
        assert!(second.from_cache);
        assert_eq!(first.text, second.text);
        assert_eq!(gateway.stats().generate_calls, 1);
        assert_eq!(gateway.stats().cache_hits, 1);
    }

    #[test]
    fn cache_persists_across_reopen() {
        let dir = TempDir::new().unwrap();
        {
            let gateway = scripted_gateway(Some(dir.path()));
            gateway.generate(&request("Q1")).unwrap();
            gateway.embed("some text").unwrap();
            gateway.nli("p", "h").unwrap();
        }
        let gateway = scripted_gateway(Some(dir.path()));
        let replayed = gateway.generate(&request("Q1")).unwrap();
        assert!(replayed.from_cache);
        assert_eq!(replayed.text, "A1");
        gateway.embed("some text").unwrap();
        gateway.nli("p", "h").unwrap();
        let stats = gateway.stats();
        assert_eq!(stats.provider_calls(), 0);
        assert_eq!(stats.cache_hits, 3);
    }

    #[test]
    fn refusals_are_cached_as_data() {
        let dir = TempDir::new().unwrap();
        let gateway = scripted_gateway(Some(dir.path()));
        assert!(gateway.generate(&request("unknown")).unwrap_err().is_refusal());
        assert!(gateway.generate(&request("unknown")).unwrap_err().is_refusal());
        let stats = gateway.stats();
        assert_eq!(stats.generate_calls, 1);
        assert_eq!(stats.cache_hits, 1);
    }

    #[test]
    fn distinct_request_fields_get_distinct_keys() {
        let a = content_hash(&GenerateKeyMaterial {
            provider: "mock",
            system_text: "s",
            user_text: "u",
            temperature: 0.3,
            max_tokens: 160,
        });
        let b = content_hash(&GenerateKeyMaterial {
            provider: "mock",
            system_text: "s",
            user_text: "u",
            temperature: 0.4,
            max_tokens: 160,
        });
        let c = content_hash(&GenerateKeyMaterial {
            provider: "mock",
            system_text: "s",
            user_text: "u",
            temperature: 0.3,
            max_tokens: 15,
        });
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn premise_truncation_keeps_hypothesis_whole() {
        struct LimitedNli;
        impl NliScorer for LimitedNli {
            fn id(&self) -> &str {
                "limited"
            }
            fn max_premise_tokens(&self) -> Option<usize> {
                Some(3)
            }
            fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, ProviderError> {
                assert_eq!(premise, "one two three");
                assert_eq!(hypothesis, "a rather long hypothesis stays intact");
                Ok(NliVerdict { p_entail: 1.0, p_neutral: 0.0, p_contradict: 0.0 })
            }
        }
        let script = MockScript::default();
        let gateway = Gateway::new(
            Arc::new(MockGenerator::new(script.clone())),
            Arc::new(MockEmbedder::new(script)),
            Arc::new(LimitedNli),
            None,
        );
        gateway
            .nli("one two three four five", "a rather long hypothesis stays intact")
            .unwrap();
    }

    #[test]
    fn truncate_tokens_short_input_unchanged() {
        assert_eq!(truncate_tokens("a b", 5), "a b");
        assert_eq!(truncate_tokens("a b c d", 2), "a b");
    }
}
