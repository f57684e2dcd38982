//! Dense retrieval over an in-memory vector index.
//!
//! Per-question corpora are small (tens of chunks), so the reference
//! implementation is an exhaustive cosine scan — no approximate index.
//! Ordering is deterministic: descending score with ties broken by
//! ascending chunk id.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facet::Facet;
use crate::ingest::Chunk;
use crate::provider::{EmbeddingVector, Gateway, ProviderError};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("provider: {0}")]
    Provider(#[from] ProviderError),
    #[error("cannot build an index from an empty chunk list")]
    EmptyChunks,
    #[error("duplicate chunk_id `{0}` in index")]
    DuplicateChunkId(String),
    #[error("dimension mismatch: index is {index}, vector is {vector}")]
    DimensionMismatch { index: usize, vector: usize },
    #[error("cosine is undefined for a zero-norm vector")]
    ZeroNorm,
    #[error("retrieval requires a non-empty index and k >= 1")]
    InvalidQuery,
}

/// Immutable vector index: one embedding per chunk, uniform dimension.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    entries: Vec<(String, EmbeddingVector)>,
    dimension: usize,
}

impl VectorIndex {
    pub fn from_entries(
        entries: Vec<(String, EmbeddingVector)>,
    ) -> Result<VectorIndex, RetrievalError> {
        if entries.is_empty() {
            return Err(RetrievalError::EmptyChunks);
        }
        let dimension = entries[0].1.dimension;
        let mut seen = std::collections::HashSet::new();
        for (chunk_id, vector) in &entries {
            if vector.dimension != dimension {
                return Err(RetrievalError::DimensionMismatch {
                    index: dimension,
                    vector: vector.dimension,
                });
            }
            if !seen.insert(chunk_id.as_str()) {
                return Err(RetrievalError::DuplicateChunkId(chunk_id.clone()));
            }
        }
        Ok(VectorIndex { entries, dimension })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub chunk_id: String,
    pub score: f64,
}

/// Top-k retrieval result for one facet. `hits` holds
/// `min(k, index size)` entries in descending score order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSet {
    pub facet_id: String,
    pub k: usize,
    pub hits: Vec<RetrievalHit>,
}

/// Cosine similarity, accumulated in f64. Errors on mismatched dimensions
/// or a zero-norm operand.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, RetrievalError> {
    if a.dimension != b.dimension {
        return Err(RetrievalError::DimensionMismatch { index: a.dimension, vector: b.dimension });
    }
    let mut dot = 0f64;
    let mut norm_a = 0f64;
    let mut norm_b = 0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += *x as f64 * *y as f64;
        norm_a += *x as f64 * *x as f64;
        norm_b += *y as f64 * *y as f64;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(RetrievalError::ZeroNorm);
    }
    Ok(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// Embed every chunk and build the index. The dimension comes from the
/// gateway's embedder and every vector is validated against it.
pub fn build_index(chunks: &[Chunk], gateway: &Gateway) -> Result<VectorIndex, RetrievalError> {
    if chunks.is_empty() {
        return Err(RetrievalError::EmptyChunks);
    }
    let mut entries = Vec::with_capacity(chunks.len());
    for chunk in chunks {
        let vector = gateway.embed(&chunk.text)?;
        entries.push((chunk.chunk_id.clone(), vector));
    }
    VectorIndex::from_entries(entries)
}

/// Cosine scores of `query` against every index entry, sorted by the
/// deterministic order (score descending, chunk id ascending on ties).
pub fn score_all(
    query: &EmbeddingVector,
    index: &VectorIndex,
) -> Result<Vec<RetrievalHit>, RetrievalError> {
    let mut hits = Vec::with_capacity(index.entries.len());
    for (chunk_id, vector) in &index.entries {
        hits.push(RetrievalHit { chunk_id: chunk_id.clone(), score: cosine(query, vector)? });
    }
    hits.sort_by(|a, b| {
        b.score.total_cmp(&a.score).then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
    Ok(hits)
}

/// Top-k retrieval for an already-embedded query.
pub fn retrieve_vector(
    facet_id: &str,
    query: &EmbeddingVector,
    index: &VectorIndex,
    k: usize,
) -> Result<RetrievalSet, RetrievalError> {
    if index.is_empty() || k == 0 {
        return Err(RetrievalError::InvalidQuery);
    }
    let mut hits = score_all(query, index)?;
    hits.truncate(k);
    Ok(RetrievalSet { facet_id: facet_id.to_string(), k, hits })
}

/// Embed the facet text and retrieve its top-k chunks.
pub fn retrieve(
    facet: &Facet,
    index: &VectorIndex,
    k: usize,
    gateway: &Gateway,
) -> Result<RetrievalSet, RetrievalError> {
    let query = gateway.embed(&facet.text)?;
    retrieve_vector(&facet.facet_id, &query, index, k)
}

/// Retrieval margin `U_ret`: top-1 minus top-2 score. `None` (an explicit
/// undefined-margin sentinel) when fewer than two hits exist.
pub fn retrieval_margin(rs: &RetrievalSet) -> Option<f64> {
    if rs.hits.len() < 2 {
        return None;
    }
    Some(rs.hits[0].score - rs.hits[1].score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::mock::{MockEmbedder, MockGenerator, MockNli, MockScript};
    use crate::provider::CallCache;
    use crate::ingest::TokenSpan;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn vector(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec())
    }

    #[test]
    fn cosine_identity_orthogonal_colinear() {
        let unit = vector(&[0.6, 0.8]);
        assert!((cosine(&unit, &unit).unwrap() - 1.0).abs() < 1e-9);

        let x = vector(&[1.0, 0.0]);
        let y = vector(&[0.0, 1.0]);
        assert!(cosine(&x, &y).unwrap().abs() < 1e-9);

        let a = vector(&[1.0, 2.0]);
        let b = vector(&[2.0, 4.0]);
        assert!((cosine(&a, &b).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_rejects_zero_norm_and_mismatch() {
        let zero = vector(&[0.0, 0.0]);
        let x = vector(&[1.0, 0.0]);
        assert!(matches!(cosine(&zero, &x), Err(RetrievalError::ZeroNorm)));
        let w = vector(&[1.0, 0.0, 0.0]);
        assert!(matches!(cosine(&w, &x), Err(RetrievalError::DimensionMismatch { .. })));
    }

    fn chunk(id: &str, text: &str) -> Chunk {
        Chunk {
            chunk_id: id.into(),
            doc_id: "d".into(),
            token_span: TokenSpan { start: 0, end: 1 },
            text: text.into(),
        }
    }

    fn mock_gateway(cache_dir: Option<&std::path::Path>) -> Gateway {
        let script = MockScript::default();
        let cache = cache_dir.map(|d| CallCache::open(d).unwrap());
        Gateway::new(
            Arc::new(MockGenerator::new(script.clone())),
            Arc::new(MockEmbedder::new(script.clone())),
            Arc::new(MockNli::new(script)),
            cache,
        )
    }

    #[test]
    fn build_index_embeds_every_chunk() {
        let chunks = vec![chunk("c0", "alpha"), chunk("c1", "beta"), chunk("c2", "gamma")];
        let gateway = mock_gateway(None);
        let index = build_index(&chunks, &gateway).unwrap();
        assert_eq!(index.len(), 3);
        assert_eq!(index.dimension(), 8);
    }

    #[test]
    fn duplicate_chunk_id_is_rejected() {
        let chunks = vec![chunk("c0", "alpha"), chunk("c0", "beta")];
        let gateway = mock_gateway(None);
        assert!(matches!(
            build_index(&chunks, &gateway),
            Err(RetrievalError::DuplicateChunkId(_))
        ));
    }

    #[test]
    fn rebuild_with_warm_cache_makes_no_provider_calls() {
        let dir = tempfile::TempDir::new().unwrap();
        let chunks = vec![chunk("c0", "alpha"), chunk("c1", "beta")];
        {
            let gateway = mock_gateway(Some(dir.path()));
            build_index(&chunks, &gateway).unwrap();
            assert_eq!(gateway.stats().embed_calls, 2);
        }
        let gateway = mock_gateway(Some(dir.path()));
        let rebuilt = build_index(&chunks, &gateway).unwrap();
        assert_eq!(rebuilt.len(), 2);
        assert_eq!(gateway.stats().embed_calls, 0);
        assert_eq!(gateway.stats().cache_hits, 2);
    }

    /// Ten-chunk corpus shaped like the worked multi-hop example: the top
    /// three similarities are 0.82, 0.72, 0.72 with a tie broken by id.
    fn worked_example_index() -> VectorIndex {
        let sims = [
            ("C1", 0.72f32),
            ("C2", 0.82),
            ("C3", 0.72),
            ("C4", 0.31),
            ("C5", 0.18),
            ("C6", 0.04),
            ("C7", 0.06),
            ("C8", 0.01),
            ("C9", 0.02),
            ("C10", 0.47),
        ];
        let dim = sims.len() + 1;
        let entries = sims
            .iter()
            .enumerate()
            .map(|(i, (id, s))| {
                let mut values = vec![0.0f32; dim];
                values[0] = *s;
                values[i + 1] = (1.0 - s * s).sqrt();
                (id.to_string(), EmbeddingVector::new(values))
            })
            .collect();
        VectorIndex::from_entries(entries).unwrap()
    }

    fn query_e1(dim: usize) -> EmbeddingVector {
        let mut values = vec![0.0f32; dim];
        values[0] = 1.0;
        EmbeddingVector::new(values)
    }

    #[test]
    fn worked_example_top_scores_and_tie_break() {
        let index = worked_example_index();
        let rs = retrieve_vector("f1", &query_e1(index.dimension()), &index, 5).unwrap();
        assert_eq!(rs.hits.len(), 5);
        let ids: Vec<&str> = rs.hits.iter().map(|h| h.chunk_id.as_str()).collect();
        assert_eq!(&ids[..3], &["C2", "C1", "C3"]);
        assert!((rs.hits[0].score - 0.82).abs() < 1e-6);
        assert!((rs.hits[1].score - 0.72).abs() < 1e-6);
        assert!((rs.hits[2].score - 0.72).abs() < 1e-6);
        let margin = retrieval_margin(&rs).unwrap();
        assert!((margin - 0.10).abs() < 1e-6);
    }

    #[test]
    fn k_larger_than_index_returns_everything() {
        let index = worked_example_index();
        let rs = retrieve_vector("f1", &query_e1(index.dimension()), &index, 50).unwrap();
        assert_eq!(rs.hits.len(), 10);
    }

    #[test]
    fn margin_cases() {
        let rs = RetrievalSet {
            facet_id: "f".into(),
            k: 5,
            hits: vec![
                RetrievalHit { chunk_id: "a".into(), score: 0.9 },
                RetrievalHit { chunk_id: "b".into(), score: 0.7 },
            ],
        };
        assert!((retrieval_margin(&rs).unwrap() - 0.2).abs() < 1e-12);

        let tie = RetrievalSet {
            facet_id: "f".into(),
            k: 5,
            hits: vec![
                RetrievalHit { chunk_id: "a".into(), score: 0.5 },
                RetrievalHit { chunk_id: "b".into(), score: 0.5 },
            ],
        };
        assert_eq!(retrieval_margin(&tie), Some(0.0));

        let single = RetrievalSet {
            facet_id: "f".into(),
            k: 5,
            hits: vec![RetrievalHit { chunk_id: "a".into(), score: 0.5 }],
        };
        assert_eq!(retrieval_margin(&single), None);
    }

    /// Independent oracle: cosine by its own arithmetic, full sort with the
    /// same tie-break, truncate to k.
    fn oracle_top_k(query: &[f32], entries: &[(String, Vec<f32>)], k: usize) -> Vec<(String, f64)> {
        let norm = |v: &[f32]| v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        let mut scored: Vec<(String, f64)> = entries
            .iter()
            .map(|(id, v)| {
                let dot: f64 = query.iter().zip(v).map(|(a, b)| *a as f64 * *b as f64).sum();
                (id.clone(), dot / (norm(query) * norm(v)))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }

    #[test]
    fn retrieval_matches_exhaustive_oracle_on_random_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(2..200);
            let dim = rng.random_range(2..16);
            let k = rng.random_range(1..12);
            let entries: Vec<(String, Vec<f32>)> = (0..n)
                .map(|i| {
                    let v: Vec<f32> = (0..dim)
                        .map(|_| loop {
                            let x: f32 = rng.random_range(-1.0..1.0);
                            if x != 0.0 {
                                break x;
                            }
                        })
                        .collect();
                    (format!("c{i:04}"), v)
                })
                .collect();
            let query: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0) + 0.01).collect();

            let index = VectorIndex::from_entries(
                entries.iter().map(|(id, v)| (id.clone(), vector(v))).collect(),
            )
            .unwrap();
            let rs = retrieve_vector("f", &vector(&query), &index, k).unwrap();
            let expected = oracle_top_k(&query, &entries, k);

            assert_eq!(rs.hits.len(), expected.len());
            for (hit, (id, score)) in rs.hits.iter().zip(&expected) {
                assert_eq!(&hit.chunk_id, id);
                assert!((hit.score - score).abs() < 1e-12);
            }
            if let Some(margin) = retrieval_margin(&rs) {
                assert!(margin >= 0.0);
            }
            for pair in rs.hits.windows(2) {
                assert!(pair[0].score >= pair[1].score);
            }
        }
    }
}
