//! Facet-level evidence diagnostics for retrieval-augmented generation.
//!
//! The engine decomposes QA questions into atomic facets, scores evidence
//! support for each facet over a Facet×Chunk matrix (retrieval similarity +
//! signed NLI faithfulness), answers every facet under three controlled
//! inference modes, classifies each facet into a five-way evidence taxonomy,
//! and aggregates facet answers into scored question-level answers with
//! distribution reports.
//!
//! Everything runs against pluggable model providers (text generation, text
//! embedding, NLI scoring). A deterministic scripted mock backend and a
//! persistent call cache make the full pipeline reproducible offline.

pub mod facet;
pub mod ingest;
pub mod matrix;
pub mod modes;
pub mod pipeline;
pub mod provider;
pub mod retrieval;
pub mod scoring;
pub mod taxonomy;
pub mod templates;
